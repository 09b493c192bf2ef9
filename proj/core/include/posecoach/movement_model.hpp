#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "posecoach/calibration.hpp"
#include "posecoach/pose_manifold.hpp"
#include "posecoach/skeleton_io.hpp"

namespace posecoach {

/// One Gaussian of the time/pose mixture. The covariance is expressed in the
/// tangent chart at (mean_time, mean_pose) with the time coordinate first,
/// followed by the 6J pose coordinates.
struct MixtureComponent {
    double weight = 1.0;
    double mean_time = 0.0;
    HumanPose mean_pose;
    Eigen::MatrixXd cov;
};

struct TrainingInfo {
    std::size_t demo_count = 0;
    std::vector<double> em_trace;
    int iterations = 0;
    bool converged = false;
};

struct ExerciseModel {
    std::string exercise;
    JointSet joint_set;
    std::size_t t_ref = 0;
    double fps = 30.0;
    double regularization = 1e-6;
    std::vector<MixtureComponent> components;
    TrainingInfo training;
    Calibration calibration;

    std::size_t k() const { return components.size(); }
    /// 1 + 6J.
    std::size_t dim() const { return 1 + kTangentDimsPerJoint * joint_set.size(); }
};

struct EmConfig {
    int k = 6;
    double regularization = 1e-6;
    /// Stop once the relative log-likelihood improvement drops below this.
    double tolerance = 1e-6;
    int max_iterations = 200;
    KarcherOptions karcher;
};

/// Normalized time of reference frame `frame`: frame / (t_ref - 1).
double frame_time(std::size_t frame, std::size_t t_ref);

/// DTW-aligns every demonstration to the first one and resamples it onto the
/// first demonstration's frame indexing.
std::vector<PoseSequence> align_demonstrations(std::span<const PoseSequence> demos);

/// EM on already aligned, equal-length sequences. Component k starts from the
/// frames of the k-th equal time slice.
ExerciseModel fit_mixture(std::span<const PoseSequence> aligned, const EmConfig& config);

/// align_demonstrations + fit_mixture. Needs at least two demonstrations.
ExerciseModel train_model(std::span<const PoseSequence> demos, const EmConfig& config);

/// Bayesian information criterion of a fitted model on its training data.
double bic(const ExerciseModel& model, std::span<const PoseSequence> aligned);
/// Trains for every K in [k_min, k_max] and keeps the lowest BIC.
ExerciseModel train_model_bic(std::span<const PoseSequence> demos, EmConfig config, int k_min = 3, int k_max = 10);

/// Regression output: one Gaussian per requested time.
struct IdealMovement {
    std::vector<double> times;
    std::vector<HumanPose> poses;
    std::vector<Eigen::MatrixXd> covariances;

    std::size_t size() const { return poses.size(); }
    PoseSequence as_sequence(const ExerciseModel& model) const;
};

/// Gaussian mixture regression of pose on normalized time. Each component is
/// conditioned in its own chart, then the conditional means are fused by a
/// responsibility-weighted Riemannian mean. Throws DataError for times
/// outside [0, 1].
IdealMovement gmr_generate(const ExerciseModel& model, std::span<const double> times);
/// gmr_generate at every reference frame.
IdealMovement ideal_movement(const ExerciseModel& model);

struct LogLikelihood {
    double total = 0.0;
    std::vector<double> per_frame;
};

/// ln p(x_t) of every frame of a sequence already resampled to t_ref frames.
/// Joints are matched by name, so a full-body sequence can be scored against
/// a body-part marginal.
LogLikelihood sequence_loglik(const ExerciseModel& model, const PoseSequence& seq);

/// Keeps time plus the tangent coordinates of the given joints.
ExerciseModel marginalize(const ExerciseModel& model, const std::vector<std::size_t>& joint_indices);
ExerciseModel marginalize_bodypart(const ExerciseModel& model, const std::string& part);

inline constexpr int kModelFormatVersion = 1;

std::string model_to_json(const ExerciseModel& model);
/// Validates version, sections, weight normalization and covariance shapes.
ExerciseModel model_from_json(std::string_view text);
void save_model(const ExerciseModel& model, const std::filesystem::path& path);
ExerciseModel load_model(const std::filesystem::path& path);

}  // namespace posecoach
