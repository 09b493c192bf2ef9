#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "posecoach/pose_manifold.hpp"
#include "posecoach/skeleton_io.hpp"
#include "posecoach/synth.hpp"

namespace posecoach::testing {

inline Eigen::Vector3d gaussian3(std::mt19937_64& rng, double stddev = 1.0) {
    std::normal_distribution<double> n(0.0, stddev);
    return {n(rng), n(rng), n(rng)};
}

inline UnitQuaternion random_quaternion(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return {n(rng), n(rng), n(rng), n(rng)};
}

/// Uniformly oriented 3-vector of the given norm.
inline Eigen::Vector3d random_direction(std::mt19937_64& rng, double norm = 1.0) {
    Eigen::Vector3d v = gaussian3(rng);
    return norm * v.normalized();
}

inline HumanPose random_pose(std::size_t joints, std::mt19937_64& rng) {
    HumanPose p;
    for (std::size_t j = 0; j < joints; ++j) p.joints.push_back({gaussian3(rng), random_quaternion(rng)});
    return p;
}

/// Tangent vector whose quaternion blocks all have norm below `max_rotation`.
inline Eigen::VectorXd random_pose_tangent(std::size_t joints, std::mt19937_64& rng, double max_rotation) {
    std::uniform_real_distribution<double> u(0.0, max_rotation);
    Eigen::VectorXd v(static_cast<Eigen::Index>(kTangentDimsPerJoint * joints));
    for (std::size_t j = 0; j < joints; ++j) {
        const auto o = static_cast<Eigen::Index>(kTangentDimsPerJoint * j);
        v.segment<3>(o) = gaussian3(rng);
        v.segment<3>(o + 3) = random_direction(rng, u(rng));
    }
    return v;
}

inline HumanPose position_pose(const std::vector<Eigen::Vector3d>& positions) {
    HumanPose p;
    for (const auto& x : positions) p.joints.push_back({x, UnitQuaternion::identity()});
    return p;
}

/// Joints "J0".."J{n-1}" in a single body part "All".
inline JointSet toy_joint_set(std::size_t n) {
    std::vector<std::string> names;
    for (std::size_t j = 0; j < n; ++j) names.push_back("J" + std::to_string(j));
    return JointSet(names, {{"All", names}});
}

inline PoseSequence make_sequence(std::vector<HumanPose> poses, JointSet joints, double fps = 30.0) {
    PoseSequence s;
    s.subject = "test";
    s.exercise = "toy";
    s.fps = fps;
    s.joint_set = std::move(joints);
    for (std::size_t t = 0; t < poses.size(); ++t) s.timestamps.push_back(static_cast<double>(t) / fps);
    s.poses = std::move(poses);
    return s;
}

inline PoseSequence synth_sequence(const SynthSpec& spec) {
    return to_pose_sequence(synthesize(spec).sequence, JointSet::upper_body());
}

inline SynthSpec synth_spec(Archetype a, std::uint64_t seed, InjectedError error = InjectedError::None,
                            double magnitude = 0.3, double noise = 0.0, double variation = 0.0) {
    SynthSpec s;
    s.archetype = a;
    s.seed = seed;
    s.error = error;
    s.magnitude = magnitude;
    s.noise = noise;
    s.variation = variation;
    return s;
}

inline double max_abs_diff(const HumanPose& a, const HumanPose& b) {
    double m = 0.0;
    for (std::size_t j = 0; j < a.joints.size(); ++j) {
        m = std::max(m, (a.joints[j].position - b.joints[j].position).cwiseAbs().maxCoeff());
        Eigen::Vector4d qa = a.joints[j].orientation.coeffs_wxyz();
        Eigen::Vector4d qb = b.joints[j].orientation.coeffs_wxyz();
        if (qa.dot(qb) < 0) qb = -qb;
        m = std::max(m, (qa - qb).cwiseAbs().maxCoeff());
    }
    return m;
}

}  // namespace posecoach::testing
