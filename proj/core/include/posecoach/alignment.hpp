#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "posecoach/skeleton_io.hpp"

namespace posecoach {

/// Monotone alignment between a sequence A (first index) and B (second).
struct WarpPath {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    double cost = 0.0;
};

/// Classic DTW with steps (1,0), (0,1), (1,1), no band, frame cost =
/// geodesic distance. Ties prefer the diagonal step.
WarpPath dtw_align(std::span<const HumanPose> a, std::span<const HumanPose> b);
WarpPath dtw_align(const PoseSequence& a, const PoseSequence& b);

/// Frame j of the result is the Karcher mean of every `seq` frame that the
/// path matches to reference index j. Timestamps are j / fps unless
/// `ref_timestamps` is given.
PoseSequence warp_to_reference(const PoseSequence& seq, const WarpPath& path, std::size_t ref_len,
                               std::span<const double> ref_timestamps = {});

/// Aligns `seq` to `reference` and resamples it onto the reference indexing.
PoseSequence align_to_reference(const PoseSequence& seq, const PoseSequence& reference, double* dtw_cost = nullptr);

}  // namespace posecoach
