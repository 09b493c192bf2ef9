#include "posecoach/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "posecoach/error.hpp"

namespace posecoach {

double ScoreAnchors::percent(double ll) const {
    const double span = ll_good - ll_floor;
    if (!(span > 0.0)) return ll >= ll_good ? 100.0 : 0.0;
    return std::clamp(100.0 * (ll - ll_floor) / span, 0.0, 100.0);
}

const ScopeCalibration& Calibration::scope(const std::string& name) const {
    const auto it = scopes.find(name);
    if (it == scopes.end()) throw DataError("model has no calibration for scope '" + name + "'");
    return it->second;
}

ScoreAnchors Calibration::anchors_for_range(const std::string& name, std::size_t begin, std::size_t end) const {
    const ScopeCalibration& sc = scope(name);
    if (sc.demo_frame_ll.empty()) throw DataError("calibration scope '" + name + "' has no demonstration data");
    double good = std::numeric_limits<double>::infinity();
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t count = 0;
    for (const auto& demo : sc.demo_frame_ll) {
        const std::size_t e = std::min(end, demo.size());
        if (begin >= e) throw DataError("calibration range is empty");
        double demo_sum = 0.0;
        for (std::size_t t = begin; t < e; ++t) {
            demo_sum += demo[t];
            sum += demo[t];
            sum_sq += demo[t] * demo[t];
            ++count;
        }
        good = std::min(good, demo_sum / static_cast<double>(e - begin));
    }
    double margin = min_margin;
    if (sc.demo_frame_ll.size() >= 2 && count >= 2) {
        const double mean = sum / static_cast<double>(count);
        const double var = std::max(0.0, (sum_sq - static_cast<double>(count) * mean * mean) / static_cast<double>(count - 1));
        margin = std::max(min_margin, margin_std_factor * std::sqrt(var));
    }
    return {good, good - margin};
}

}  // namespace posecoach
