#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace posecoach {

/// Unit quaternion stored w-first. Every constructor renormalizes, so the
/// unit-norm invariant holds for any live object.
class UnitQuaternion {
public:
    UnitQuaternion() = default;
    /// Throws DataError when the input norm is zero or not finite.
    UnitQuaternion(double w, double x, double y, double z);

    static UnitQuaternion identity() { return {}; }
    static UnitQuaternion from_axis_angle(const Eigen::Vector3d& axis, double angle);
    static UnitQuaternion from_rotation(const Eigen::Matrix3d& rotation);

    double w() const { return w_; }
    double x() const { return x_; }
    double y() const { return y_; }
    double z() const { return z_; }
    Eigen::Vector3d vec() const { return {x_, y_, z_}; }
    Eigen::Vector4d coeffs_wxyz() const { return {w_, x_, y_, z_}; }

    double dot(const UnitQuaternion& o) const { return w_ * o.w_ + x_ * o.x_ + y_ * o.y_ + z_ * o.z_; }
    UnitQuaternion negated() const;
    UnitQuaternion conjugate() const;
    /// Hamilton product.
    UnitQuaternion operator*(const UnitQuaternion& rhs) const;
    Eigen::Matrix3d to_rotation() const;

    friend bool operator==(const UnitQuaternion&, const UnitQuaternion&) = default;

private:
    struct Raw {};
    UnitQuaternion(Raw, double w, double x, double y, double z) : w_(w), x_(x), y_(y), z_(z) {}

    double w_ = 1.0;
    double x_ = 0.0;
    double y_ = 0.0;
    double z_ = 0.0;
};

/// Tangent coordinates of S^3 at `base`: the axis-angle style vector of
/// conj(base) * q, with norm equal to the arc length between the two points
/// on the unit sphere. `q` is flipped onto the hemisphere of `base` first.
Eigen::Vector3d quat_log(const UnitQuaternion& base, const UnitQuaternion& q);
UnitQuaternion quat_exp(const UnitQuaternion& base, const Eigen::Vector3d& v);
/// Arc length arccos(|<a,b>|), in [0, pi/2].
double quat_distance(const UnitQuaternion& a, const UnitQuaternion& b);

inline constexpr std::size_t kTangentDimsPerJoint = 6;

struct JointState {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    UnitQuaternion orientation;
};

/// One skeleton frame: a point of the product manifold (R^3 x S^3)^J.
struct HumanPose {
    std::vector<JointState> joints;

    std::size_t joint_count() const { return joints.size(); }
    std::size_t tangent_dim() const { return kTangentDimsPerJoint * joints.size(); }
};

/// Joint j owns coordinates [6j, 6j+6): the position difference first, then
/// the quaternion tangent. Throws DataError when the joint counts differ.
Eigen::VectorXd pose_log(const HumanPose& base, const HumanPose& y);
/// Allocation-free pose_log; `out` must have tangent_dim() entries.
void pose_log_into(const HumanPose& base, const HumanPose& y, Eigen::Ref<Eigen::VectorXd> out);
HumanPose pose_exp(const HumanPose& base, const Eigen::Ref<const Eigen::VectorXd>& v);
double geodesic_distance(const HumanPose& p, const HumanPose& y);

/// Flips every orientation of `y` onto the hemisphere of the matching
/// orientation of `reference`.
HumanPose sign_aligned(const HumanPose& reference, HumanPose y);

struct KarcherOptions {
    double tolerance = 1e-9;
    int max_iterations = 100;
};

struct KarcherResult {
    HumanPose mean;
    bool converged = false;
    int iterations = 0;
    double last_step = 0.0;
};

/// Riemannian center of mass by fixed-point iteration in the tangent space.
/// Starts at the first point unless `init` is given. Non-convergence is not an
/// error: the last iterate is returned with `converged == false`.
KarcherResult karcher_mean(std::span<const HumanPose> points, KarcherOptions options = {});
KarcherResult karcher_mean(std::span<const HumanPose* const> points, std::span<const double> weights,
                           const HumanPose* init = nullptr, KarcherOptions options = {});

/// Unbiased sample covariance of the tangent vectors of `points` at `mean`,
/// plus `regularization` on the diagonal.
Eigen::MatrixXd tangent_covariance(std::span<const HumanPose> points, const HumanPose& mean,
                                   double regularization = 1e-6);

}  // namespace posecoach
