#include "posecoach/assessment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "posecoach/alignment.hpp"
#include "posecoach/error.hpp"

namespace posecoach {

double MotionProfile::max() const {
    return sigma.empty() ? 0.0 : *std::max_element(sigma.begin(), sigma.end());
}

MotionProfile motion_profile(std::span<const HumanPose> poses, std::size_t window) {
    if (window < 2) throw DataError("motion window must be at least 2 frames");
    if (poses.empty()) throw DataError("motion_profile: empty sequence");
    MotionProfile profile;
    profile.window = window;
    const std::size_t n = poses.size();
    profile.sigma.resize(n);

    std::vector<const HumanPose*> ptrs;
    auto spread = [&](std::size_t lo, std::size_t hi, const HumanPose* init) {
        ptrs.clear();
        for (std::size_t t = lo; t <= hi; ++t) ptrs.push_back(&poses[t]);
        HumanPose mean = karcher_mean(ptrs, {}, init).mean;
        double sq = 0.0;
        for (const auto* p : ptrs) {
            const double d = geodesic_distance(mean, *p);
            sq += d * d;
        }
        return std::pair{std::sqrt(sq / static_cast<double>(ptrs.size())), std::move(mean)};
    };

    if (window > n) {
        const double s = spread(0, n - 1, nullptr).first;
        std::fill(profile.sigma.begin(), profile.sigma.end(), s);
        return profile;
    }
    const std::size_t before = (window - 1) / 2;
    const std::size_t after = window - 1 - before;
    HumanPose previous_mean;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= before ? i - before : 0;
        const std::size_t hi = std::min(n - 1, i + after);
        auto [s, mean] = spread(lo, hi, i == 0 ? nullptr : &previous_mean);
        profile.sigma[i] = s;
        previous_mean = std::move(mean);
    }
    return profile;
}

MotionProfile motion_profile(const PoseSequence& seq, std::size_t window) {
    return motion_profile(std::span<const HumanPose>(seq.poses), window);
}

std::size_t detect_start(const MotionProfile& profile, double tau, std::size_t lead) {
    if (profile.sigma.empty()) throw DataError("detect_start: empty motion profile");
    for (std::size_t i = 0; i < profile.sigma.size(); ++i) {
        if (profile.sigma[i] > tau) return i >= lead ? i - lead : 0;
    }
    throw DataError("no motion detected");
}

const char* to_string(SegmentKind kind) { return kind == SegmentKind::Hold ? "hold" : "transition"; }

const char* to_string(SegmentationStrategy s) {
    return s == SegmentationStrategy::TransitionOnly ? "transition_only" : "transition_hold";
}

SegmentationStrategy strategy_from_string(const std::string& s) {
    if (s == "transition_only") return SegmentationStrategy::TransitionOnly;
    if (s == "transition_hold") return SegmentationStrategy::TransitionHold;
    throw UsageError("unknown segmentation strategy '" + s + "' (expected transition_only or transition_hold)");
}

std::vector<Segment> segment(const MotionProfile& profile, double tau, SegmentationStrategy strategy,
                             std::size_t start) {
    const std::size_t n = profile.size();
    if (start >= n) throw DataError("segmentation start is beyond the sequence");
    std::vector<Segment> runs;
    for (std::size_t i = start; i < n; ++i) {
        const SegmentKind kind = profile.sigma[i] >= tau ? SegmentKind::Transition : SegmentKind::Hold;
        if (runs.empty() || runs.back().kind != kind) {
            runs.push_back({i, i + 1, kind});
        } else {
            runs.back().end = i + 1;
        }
    }
    if (strategy == SegmentationStrategy::TransitionHold) return runs;

    // key frames: the calmest frame of every hold lying between two transitions
    std::vector<std::size_t> cuts;
    for (std::size_t r = 1; r + 1 < runs.size(); ++r) {
        if (runs[r].kind != SegmentKind::Hold) continue;
        std::size_t best = runs[r].start;
        for (std::size_t i = runs[r].start; i < runs[r].end; ++i) {
            if (profile.sigma[i] < profile.sigma[best]) best = i;
        }
        cuts.push_back(best);
    }
    std::vector<Segment> out;
    std::size_t begin = start;
    for (auto c : cuts) {
        if (c > begin) out.push_back({begin, c, SegmentKind::Transition});
        begin = std::max(begin, c);
    }
    out.push_back({begin, n, SegmentKind::Transition});
    return out;
}

namespace {

double mean_of(const std::vector<double>& v, std::size_t begin, std::size_t end) {
    end = std::min(end, v.size());
    if (begin >= end) return 0.0;
    return std::accumulate(v.begin() + static_cast<std::ptrdiff_t>(begin), v.begin() + static_cast<std::ptrdiff_t>(end),
                           0.0) /
           static_cast<double>(end - begin);
}

}  // namespace

Assessor::Assessor(ExerciseModel model, AssessmentConfig config)
    : Assessor(model, ideal_movement(model), std::move(config)) {}

Assessor::Assessor(ExerciseModel model, IdealMovement ideal, AssessmentConfig config)
    : model_(std::move(model)), ideal_(std::move(ideal)), config_(std::move(config)) {
    if (ideal_.size() != model_.t_ref) throw DataError("ideal movement length does not match the model");
    ideal_seq_ = ideal_.as_sequence(model_);
    tau_ = config_.tau ? *config_.tau : config_.tau_factor * motion_profile(ideal_seq_, config_.window).max();
    for (const auto& part : model_.joint_set.part_names()) part_models_.emplace(part, marginalize_bodypart(model_, part));
}

ScoredSequence Assessor::prepare(const PoseSequence& seq) const {
    if (seq.empty()) throw DataError("empty sequence");
    const PoseSequence local = select_joints(seq, model_.joint_set);
    ScoredSequence out;
    out.start_frame = detect_start(motion_profile(local, config_.window), tau_);
    const PoseSequence trimmed = slice(local, out.start_frame, local.size());
    out.trimmed_frames = trimmed.size();
    const WarpPath path = dtw_align(trimmed, ideal_seq_);
    out.dtw_cost = path.cost;
    out.warped = warp_to_reference(trimmed, path, model_.t_ref, ideal_seq_.timestamps);
    return out;
}

std::map<std::string, std::vector<double>> Assessor::frame_loglik(const PoseSequence& warped) const {
    std::map<std::string, std::vector<double>> out;
    out[Calibration::kGlobal] = sequence_loglik(model_, warped).per_frame;
    for (const auto& [part, pm] : part_models_) out[part] = sequence_loglik(pm, warped).per_frame;
    return out;
}

Calibration Assessor::calibrate(std::span<const PoseSequence> demos) const {
    if (demos.empty()) throw DataError("calibration needs at least one demonstration");
    Calibration cal;
    cal.margin_std_factor = config_.margin_std_factor;
    cal.min_margin = config_.min_margin;
    for (const auto& demo : demos) {
        const ScoredSequence s = prepare(demo);
        for (auto& [scope, ll] : frame_loglik(s.warped)) cal.scopes[scope].demo_frame_ll.push_back(std::move(ll));
    }
    for (auto& [scope, sc] : cal.scopes) sc.anchors = cal.anchors_for_range(scope, 0, model_.t_ref);
    return cal;
}

AssessmentReport Assessor::assess(const PoseSequence& seq) const {
    const Calibration& cal = model_.calibration;
    if (cal.empty()) throw DataError("model is not calibrated");
    AssessmentReport report;
    const ScoredSequence s = prepare(seq);
    report.start_frame = s.start_frame;
    report.diagnostics.tau = tau_;
    report.diagnostics.window = config_.window;
    report.diagnostics.strategy = config_.strategy;
    report.diagnostics.input_frames = seq.size();
    report.diagnostics.trimmed_frames = s.trimmed_frames;
    report.diagnostics.dtw_cost = s.dtw_cost;

    auto lls = frame_loglik(s.warped);
    report.frame_loglik = lls[Calibration::kGlobal];
    const std::size_t t_ref = model_.t_ref;
    report.diagnostics.mean_loglik = mean_of(report.frame_loglik, 0, t_ref);
    report.global = cal.scope(Calibration::kGlobal).anchors.percent(report.diagnostics.mean_loglik);

    double wsum = 0.0;
    double wscore = 0.0;
    for (const auto& part : model_.joint_set.part_names()) {
        const double m = mean_of(lls[part], 0, t_ref);
        report.diagnostics.part_mean_loglik[part] = m;
        report.parts[part] = cal.scope(part).anchors.percent(m);
        const auto w = config_.part_weights.find(part);
        const double weight = w == config_.part_weights.end() ? 1.0 : w->second;
        wsum += weight;
        wscore += weight * report.parts[part];
        report.part_frame_loglik[part] = lls[part];
    }
    report.weighted_parts = wsum > 0.0 ? wscore / wsum : 0.0;

    const MotionProfile profile = motion_profile(s.warped, config_.window);
    report.sigma = profile.sigma;
    std::size_t seg_start = 0;
    try {
        seg_start = detect_start(profile, tau_);
    } catch (const DataError&) {
        seg_start = 0;
    }
    report.diagnostics.segmentation_start = seg_start;
    for (const auto& seg : segment(profile, tau_, config_.strategy, seg_start)) {
        SegmentScore sc;
        sc.segment = seg;
        sc.score = cal.anchors_for_range(Calibration::kGlobal, seg.start, seg.end)
                       .percent(mean_of(report.frame_loglik, seg.start, seg.end));
        for (const auto& part : model_.joint_set.part_names()) {
            sc.part_scores[part] =
                cal.anchors_for_range(part, seg.start, seg.end).percent(mean_of(lls[part], seg.start, seg.end));
        }
        report.segments.push_back(std::move(sc));
    }
    report.warped = s.warped;
    return report;
}

Calibration calibrate(const ExerciseModel& model, std::span<const PoseSequence> demos, const AssessmentConfig& config) {
    return Assessor(model, config).calibrate(demos);
}

AssessmentReport assess(const ExerciseModel& model, const IdealMovement& ideal, const PoseSequence& seq,
                        const AssessmentConfig& config) {
    return Assessor(model, ideal, config).assess(seq);
}

}  // namespace posecoach
