#include "posecoach/alignment.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "posecoach/error.hpp"

namespace posecoach {

WarpPath dtw_align(std::span<const HumanPose> a, std::span<const HumanPose> b) {
    if (a.empty() || b.empty()) throw DataError("dtw_align: empty sequence");
    if (a.front().joint_count() != b.front().joint_count()) {
        throw DataError("dtw_align: joint-set mismatch (" + std::to_string(a.front().joint_count()) + " vs " +
                        std::to_string(b.front().joint_count()) + " joints)");
    }
    const std::size_t n = a.size();
    const std::size_t m = b.size();
    const double inf = std::numeric_limits<double>::infinity();
    // acc(i, j) = cost of the best path ending at (i, j)
    std::vector<double> acc(n * m, inf);
    auto at = [m](std::size_t i, std::size_t j) { return i * m + j; };
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double d = geodesic_distance(a[i], b[j]);
            double best;
            if (i == 0 && j == 0) {
                best = 0.0;
            } else {
                best = inf;
                if (i > 0 && j > 0) best = acc[at(i - 1, j - 1)];
                if (i > 0) best = std::min(best, acc[at(i - 1, j)]);
                if (j > 0) best = std::min(best, acc[at(i, j - 1)]);
            }
            acc[at(i, j)] = best + d;
        }
    }

    WarpPath path;
    path.cost = acc[at(n - 1, m - 1)];
    std::size_t i = n - 1;
    std::size_t j = m - 1;
    path.pairs.emplace_back(i, j);
    while (i > 0 || j > 0) {
        if (i == 0) {
            --j;
        } else if (j == 0) {
            --i;
        } else {
            const double diag = acc[at(i - 1, j - 1)];
            const double up = acc[at(i - 1, j)];
            const double left = acc[at(i, j - 1)];
            if (diag <= up && diag <= left) {
                --i;
                --j;
            } else if (up <= left) {
                --i;
            } else {
                --j;
            }
        }
        path.pairs.emplace_back(i, j);
    }
    std::reverse(path.pairs.begin(), path.pairs.end());
    return path;
}

WarpPath dtw_align(const PoseSequence& a, const PoseSequence& b) {
    if (a.joint_set.names() != b.joint_set.names()) throw DataError("dtw_align: joint-set mismatch");
    return dtw_align(std::span<const HumanPose>(a.poses), std::span<const HumanPose>(b.poses));
}

PoseSequence warp_to_reference(const PoseSequence& seq, const WarpPath& path, std::size_t ref_len,
                               std::span<const double> ref_timestamps) {
    if (ref_len == 0) throw DataError("warp_to_reference: empty reference");
    if (!ref_timestamps.empty() && ref_timestamps.size() != ref_len) {
        throw DataError("warp_to_reference: reference timestamp count mismatch");
    }
    std::vector<std::vector<const HumanPose*>> matched(ref_len);
    for (const auto& [i, j] : path.pairs) {
        if (i >= seq.size() || j >= ref_len) throw DataError("warp_to_reference: path index out of range");
        matched[j].push_back(&seq.poses[i]);
    }
    PoseSequence out;
    out.subject = seq.subject;
    out.exercise = seq.exercise;
    out.fps = seq.fps;
    out.joint_set = seq.joint_set;
    out.poses.reserve(ref_len);
    out.timestamps.reserve(ref_len);
    for (std::size_t j = 0; j < ref_len; ++j) {
        if (matched[j].empty()) throw DataError("warp_to_reference: path does not cover reference frame " + std::to_string(j));
        if (matched[j].size() == 1) {
            out.poses.push_back(*matched[j].front());
        } else {
            out.poses.push_back(karcher_mean(matched[j], {}).mean);
        }
        out.timestamps.push_back(ref_timestamps.empty() ? static_cast<double>(j) / seq.fps : ref_timestamps[j]);
    }
    return hemisphere_align(std::move(out));
}

PoseSequence align_to_reference(const PoseSequence& seq, const PoseSequence& reference, double* dtw_cost) {
    const WarpPath path = dtw_align(seq, reference);
    if (dtw_cost) *dtw_cost = path.cost;
    return warp_to_reference(seq, path, reference.size(), reference.timestamps);
}

}  // namespace posecoach
