#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "posecoach/assessment.hpp"
#include "posecoach/feedback.hpp"
#include "posecoach/movement_model.hpp"

namespace posecoach {

/// Every tunable default in one place, loadable from JSON. Keys:
/// window, tau_factor, tau, strategy, K ("auto" or an integer), K_min, K_max,
/// regularization, em_tolerance, em_max_iterations, margin_std_factor,
/// min_margin, error_score_threshold, theta, svm_C, part_weights.
struct PipelineConfig {
    EmConfig em;
    bool k_auto = false;
    int k_min = 3;
    int k_max = 10;
    AssessmentConfig assessment;
    double theta = kDefaultConfidenceThreshold;
    double svm_c = 1.0;
};

/// Unknown keys and out-of-range values raise UsageError.
PipelineConfig config_from_json(std::string_view text, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const PipelineConfig& config);

}  // namespace posecoach
