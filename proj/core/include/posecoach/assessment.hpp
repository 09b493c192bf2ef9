#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "posecoach/calibration.hpp"
#include "posecoach/movement_model.hpp"
#include "posecoach/skeleton_io.hpp"

namespace posecoach {

/// Windowed spread of the poses around their window mean, one value per frame.
struct MotionProfile {
    std::vector<double> sigma;
    std::size_t window = 0;

    std::size_t size() const { return sigma.size(); }
    double max() const;
};

/// Window of `window` frames centred on each frame, truncated at the sequence
/// ends; a window longer than the sequence becomes the whole sequence.
MotionProfile motion_profile(std::span<const HumanPose> poses, std::size_t window);
MotionProfile motion_profile(const PoseSequence& seq, std::size_t window);

inline constexpr std::size_t kStartLeadFrames = 10;

/// First frame whose sigma rises above `tau`, moved back by `lead` frames and
/// floored at 0. Throws DataError("no motion detected") if sigma never exceeds tau.
std::size_t detect_start(const MotionProfile& profile, double tau, std::size_t lead = kStartLeadFrames);

enum class SegmentKind { Transition, Hold };
enum class SegmentationStrategy { TransitionOnly, TransitionHold };

const char* to_string(SegmentKind kind);
const char* to_string(SegmentationStrategy strategy);
SegmentationStrategy strategy_from_string(const std::string& s);

/// Half-open frame range.
struct Segment {
    std::size_t start = 0;
    std::size_t end = 0;
    SegmentKind kind = SegmentKind::Transition;

    std::size_t length() const { return end - start; }
    friend bool operator==(const Segment&, const Segment&) = default;
};

/// Splits [start, size) into runs of sigma >= tau (transitions) and sigma <
/// tau (holds). TransitionOnly instead cuts once per interior hold, at its
/// lowest-sigma frame, so every segment is one movement.
std::vector<Segment> segment(const MotionProfile& profile, double tau, SegmentationStrategy strategy,
                             std::size_t start = 0);

struct AssessmentConfig {
    std::size_t window = 15;
    /// tau = tau_factor * max sigma of the ideal movement, unless `tau` is set.
    double tau_factor = 0.25;
    std::optional<double> tau;
    SegmentationStrategy strategy = SegmentationStrategy::TransitionHold;
    double margin_std_factor = 3.0;
    double min_margin = 5.0;
    /// Part-segment scores below this are handed to the error classifier.
    double error_score_threshold = 70.0;
    /// Only used for the weighted part summary; scores are reported raw.
    std::map<std::string, double> part_weights;
};

struct ErrorFinding {
    std::string part;
    std::size_t segment = 0;
    std::string label;
    double confidence = 0.0;
    std::string advice;
};

struct SegmentScore {
    Segment segment;
    double score = 0.0;
    std::map<std::string, double> part_scores;
};

struct AssessmentDiagnostics {
    double tau = 0.0;
    std::size_t window = 0;
    SegmentationStrategy strategy = SegmentationStrategy::TransitionHold;
    std::size_t input_frames = 0;
    std::size_t trimmed_frames = 0;
    std::size_t segmentation_start = 0;
    double dtw_cost = 0.0;
    double mean_loglik = 0.0;
    std::map<std::string, double> part_mean_loglik;
};

struct AssessmentReport {
    double global = 0.0;
    std::map<std::string, double> parts;
    double weighted_parts = 0.0;
    std::size_t start_frame = 0;
    std::vector<SegmentScore> segments;
    std::vector<ErrorFinding> errors;
    AssessmentDiagnostics diagnostics;

    // per reference frame, not serialized into the JSON report
    std::vector<double> frame_loglik;
    std::map<std::string, std::vector<double>> part_frame_loglik;
    std::vector<double> sigma;
    PoseSequence warped;
};

/// Start detection, trimming, DTW alignment to the ideal movement and
/// resampling to the reference length.
struct ScoredSequence {
    std::size_t start_frame = 0;
    std::size_t trimmed_frames = 0;
    double dtw_cost = 0.0;
    PoseSequence warped;
};

/// Holds everything derived once per model: the ideal movement, its sequence
/// form, tau and the body-part marginals.
class Assessor {
public:
    Assessor(ExerciseModel model, AssessmentConfig config);
    Assessor(ExerciseModel model, IdealMovement ideal, AssessmentConfig config);

    const ExerciseModel& model() const { return model_; }
    const IdealMovement& ideal() const { return ideal_; }
    const PoseSequence& ideal_sequence() const { return ideal_seq_; }
    const AssessmentConfig& config() const { return config_; }
    double tau() const { return tau_; }

    ScoredSequence prepare(const PoseSequence& seq) const;
    /// Per-frame log-likelihoods of a prepared sequence, for "global" and every part.
    std::map<std::string, std::vector<double>> frame_loglik(const PoseSequence& warped) const;

    /// Builds calibration anchors from the training demonstrations, scored
    /// through the same pipeline as `assess`.
    Calibration calibrate(std::span<const PoseSequence> demos) const;
    /// Requires a calibrated model (see `set_calibration`).
    AssessmentReport assess(const PoseSequence& seq) const;

    void set_calibration(Calibration calibration) { model_.calibration = std::move(calibration); }

private:
    ExerciseModel model_;
    IdealMovement ideal_;
    PoseSequence ideal_seq_;
    AssessmentConfig config_;
    double tau_ = 0.0;
    std::map<std::string, ExerciseModel> part_models_;
};

Calibration calibrate(const ExerciseModel& model, std::span<const PoseSequence> demos,
                      const AssessmentConfig& config = {});
AssessmentReport assess(const ExerciseModel& model, const IdealMovement& ideal, const PoseSequence& seq,
                        const AssessmentConfig& config = {});

}  // namespace posecoach
