#pragma once

#include <string>
#include <string_view>

#include "posecoach/assessment.hpp"

namespace posecoach {

/// {"global", "parts", "weighted_parts", "start_frame", "segments", "errors",
/// "diagnostics"}; segment entries also carry their per-part scores.
/// Per-frame series and the warped sequence are not serialized.
std::string report_to_json(const AssessmentReport& report);
AssessmentReport report_from_json(std::string_view text);

/// One row per reference frame: frame, log-likelihood (global and per part)
/// and motion spread.
std::string report_csv(const AssessmentReport& report);

/// Score timeline with one band per segment, colored from red (0%) to green
/// (100%), and one row per body part below it.
std::string report_svg(const AssessmentReport& report);

/// Plain-text summary for the terminal.
std::string report_text(const AssessmentReport& report);

}  // namespace posecoach
