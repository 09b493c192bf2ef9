#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace posecoach {

/// Linear log-likelihood -> percent mapping, clamped to [0, 100].
struct ScoreAnchors {
    double ll_good = 0.0;
    double ll_floor = -1.0;

    double percent(double ll) const;
};

/// Per-frame log-likelihoods of every training demonstration, resampled onto
/// the reference indexing, for one scope (whole body or one body part). Any
/// frame range can be anchored from these.
struct ScopeCalibration {
    ScoreAnchors anchors;
    std::vector<std::vector<double>> demo_frame_ll;
};

struct Calibration {
    static constexpr const char* kGlobal = "global";

    double margin_std_factor = 3.0;
    double min_margin = 5.0;
    std::map<std::string, ScopeCalibration> scopes;

    bool empty() const { return scopes.empty(); }
    /// Throws DataError for an unknown scope.
    const ScopeCalibration& scope(const std::string& name) const;
    /// Anchors for frames [begin, end) of the reference: ll_good is the
    /// lowest per-frame average among the demos, the floor sits
    /// max(min_margin, margin_std_factor * std) below it, std being the spread
    /// of all per-frame values in the range.
    ScoreAnchors anchors_for_range(const std::string& scope, std::size_t begin, std::size_t end) const;
};

}  // namespace posecoach
