#include "posecoach/pose_manifold.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "posecoach/error.hpp"

namespace posecoach {

UnitQuaternion::UnitQuaternion(double w, double x, double y, double z) {
    const double n = std::sqrt(w * w + x * x + y * y + z * z);
    if (!std::isfinite(n) || n < 1e-12) {
        throw DataError("quaternion has zero or non-finite norm");
    }
    w_ = w / n;
    x_ = x / n;
    y_ = y / n;
    z_ = z / n;
}

UnitQuaternion UnitQuaternion::from_axis_angle(const Eigen::Vector3d& axis, double angle) {
    const double n = axis.norm();
    if (n < 1e-15) return identity();
    const Eigen::Vector3d u = axis / n;
    const double s = std::sin(0.5 * angle);
    return {std::cos(0.5 * angle), s * u.x(), s * u.y(), s * u.z()};
}

UnitQuaternion UnitQuaternion::from_rotation(const Eigen::Matrix3d& rotation) {
    const Eigen::Quaterniond q(rotation);
    return {q.w(), q.x(), q.y(), q.z()};
}

UnitQuaternion UnitQuaternion::negated() const { return {Raw{}, -w_, -x_, -y_, -z_}; }

UnitQuaternion UnitQuaternion::conjugate() const { return {Raw{}, w_, -x_, -y_, -z_}; }

UnitQuaternion UnitQuaternion::operator*(const UnitQuaternion& r) const {
    return {w_ * r.w_ - x_ * r.x_ - y_ * r.y_ - z_ * r.z_,
            w_ * r.x_ + x_ * r.w_ + y_ * r.z_ - z_ * r.y_,
            w_ * r.y_ - x_ * r.z_ + y_ * r.w_ + z_ * r.x_,
            w_ * r.z_ + x_ * r.y_ - y_ * r.x_ + z_ * r.w_};
}

Eigen::Matrix3d UnitQuaternion::to_rotation() const {
    return Eigen::Quaterniond(w_, x_, y_, z_).toRotationMatrix();
}

Eigen::Vector3d quat_log(const UnitQuaternion& base, const UnitQuaternion& q) {
    const double sign = base.dot(q) < 0.0 ? -1.0 : 1.0;
    // conj(base) * q, written out to skip the renormalization of operator*
    const double w = sign * (base.w() * q.w() + base.x() * q.x() + base.y() * q.y() + base.z() * q.z());
    const Eigen::Vector3d v = sign * Eigen::Vector3d(base.w() * q.x() - base.x() * q.w() - base.y() * q.z() + base.z() * q.y(),
                                                     base.w() * q.y() + base.x() * q.z() - base.y() * q.w() - base.z() * q.x(),
                                                     base.w() * q.z() - base.x() * q.y() + base.y() * q.x() - base.z() * q.w());
    const double s = v.norm();
    if (s < 1e-300) return Eigen::Vector3d::Zero();
    // asin is well conditioned for small angles and acos for large ones;
    // both are much cheaper than atan2
    const double angle = s < 0.7 ? std::asin(std::min(s, 1.0)) : std::acos(std::min(std::abs(w), 1.0));
    return v * (angle / s);
}

UnitQuaternion quat_exp(const UnitQuaternion& base, const Eigen::Vector3d& v) {
    const double angle = v.norm();
    if (angle < 1e-300) return base;
    const Eigen::Vector3d u = v * (std::sin(angle) / angle);
    return base * UnitQuaternion(std::cos(angle), u.x(), u.y(), u.z());
}

double quat_distance(const UnitQuaternion& a, const UnitQuaternion& b) {
    return quat_log(a, b).norm();
}

namespace {

void require_same_joints(const HumanPose& a, const HumanPose& b) {
    if (a.joint_count() != b.joint_count()) {
        throw DataError("joint-count mismatch: " + std::to_string(a.joint_count()) + " vs " +
                        std::to_string(b.joint_count()));
    }
}

}  // namespace

Eigen::VectorXd pose_log(const HumanPose& base, const HumanPose& y) {
    Eigen::VectorXd v(base.tangent_dim());
    pose_log_into(base, y, v);
    return v;
}

void pose_log_into(const HumanPose& base, const HumanPose& y, Eigen::Ref<Eigen::VectorXd> out) {
    require_same_joints(base, y);
    if (static_cast<std::size_t>(out.size()) != base.tangent_dim()) {
        throw DataError("pose_log_into: output has the wrong size");
    }
    for (std::size_t j = 0; j < base.joint_count(); ++j) {
        const auto off = static_cast<Eigen::Index>(kTangentDimsPerJoint * j);
        out.segment<3>(off) = y.joints[j].position - base.joints[j].position;
        out.segment<3>(off + 3) = quat_log(base.joints[j].orientation, y.joints[j].orientation);
    }
}

HumanPose pose_exp(const HumanPose& base, const Eigen::Ref<const Eigen::VectorXd>& v) {
    if (static_cast<std::size_t>(v.size()) != base.tangent_dim()) {
        throw DataError("tangent vector has " + std::to_string(v.size()) + " coordinates, expected " +
                        std::to_string(base.tangent_dim()));
    }
    HumanPose out = base;
    for (std::size_t j = 0; j < base.joint_count(); ++j) {
        const auto off = static_cast<Eigen::Index>(kTangentDimsPerJoint * j);
        out.joints[j].position = base.joints[j].position + v.segment<3>(off);
        out.joints[j].orientation = quat_exp(base.joints[j].orientation, v.segment<3>(off + 3));
    }
    return out;
}

double geodesic_distance(const HumanPose& p, const HumanPose& y) {
    require_same_joints(p, y);
    double sq = 0.0;
    for (std::size_t j = 0; j < p.joint_count(); ++j) {
        sq += (y.joints[j].position - p.joints[j].position).squaredNorm();
        sq += quat_log(p.joints[j].orientation, y.joints[j].orientation).squaredNorm();
    }
    return std::sqrt(sq);
}

HumanPose sign_aligned(const HumanPose& reference, HumanPose y) {
    require_same_joints(reference, y);
    for (std::size_t j = 0; j < y.joint_count(); ++j) {
        auto& q = y.joints[j].orientation;
        if (reference.joints[j].orientation.dot(q) < 0.0) q = q.negated();
    }
    return y;
}

KarcherResult karcher_mean(std::span<const HumanPose> points, KarcherOptions options) {
    std::vector<const HumanPose*> ptrs;
    ptrs.reserve(points.size());
    for (const auto& p : points) ptrs.push_back(&p);
    return karcher_mean(ptrs, {}, nullptr, options);
}

KarcherResult karcher_mean(std::span<const HumanPose* const> points, std::span<const double> weights,
                           const HumanPose* init, KarcherOptions options) {
    if (points.empty()) throw DataError("karcher_mean: empty point set");
    if (!weights.empty() && weights.size() != points.size()) {
        throw DataError("karcher_mean: weight count does not match point count");
    }
    double total = 0.0;
    if (weights.empty()) {
        total = static_cast<double>(points.size());
    } else {
        for (double w : weights) total += w;
        if (!(total > 0.0)) throw NumericError("karcher_mean: weights sum to zero");
    }

    KarcherResult result;
    result.mean = init ? *init : *points.front();
    const auto dim = static_cast<Eigen::Index>(result.mean.tangent_dim());
    Eigen::VectorXd step(dim);
    Eigen::VectorXd log(dim);
    for (int it = 0; it < options.max_iterations; ++it) {
        step.setZero();
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double w = weights.empty() ? 1.0 : weights[i];
            if (w == 0.0) continue;
            pose_log_into(result.mean, *points[i], log);
            step += w * log;
        }
        step /= total;
        result.mean = pose_exp(result.mean, step);
        result.iterations = it + 1;
        result.last_step = step.norm();
        if (result.last_step < options.tolerance) {
            result.converged = true;
            break;
        }
    }
    return result;
}

Eigen::MatrixXd tangent_covariance(std::span<const HumanPose> points, const HumanPose& mean,
                                   double regularization) {
    const auto dim = static_cast<Eigen::Index>(mean.tangent_dim());
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
    if (points.size() >= 2) {
        Eigen::MatrixXd logs(dim, static_cast<Eigen::Index>(points.size()));
        for (std::size_t i = 0; i < points.size(); ++i) {
            logs.col(static_cast<Eigen::Index>(i)) = pose_log(mean, points[i]);
        }
        const Eigen::VectorXd centre = logs.rowwise().mean();
        logs.colwise() -= centre;
        cov = logs * logs.transpose() / static_cast<double>(points.size() - 1);
    }
    cov.diagonal().array() += regularization;
    return 0.5 * (cov + cov.transpose());
}

}  // namespace posecoach
