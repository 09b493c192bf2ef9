// Acceptance run: one PASS/FAIL line per criterion, nonzero exit when any fails.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles/dtw_bruteforce.hpp"
#include "oracles/euclidean_gmm.hpp"
#include "posecoach/alignment.hpp"
#include "posecoach/assessment.hpp"
#include "posecoach/feedback.hpp"
#include "posecoach/movement_model.hpp"
#include "posecoach/report_io.hpp"
#include "support/fixtures.hpp"

using namespace posecoach;
using namespace posecoach::testing;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/// Collects failed checks of one criterion; the first few are printed.
struct Checker {
    int failures = 0;
    std::vector<std::string> notes;

    void expect(bool ok, const std::string& what) {
        if (ok) return;
        ++failures;
        if (notes.size() < 5) notes.push_back(what);
    }
    bool ok() const { return failures == 0; }
};

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

// Training data shared by the exercise-level criteria: 30 varied demos per
// archetype and a 10-component model, calibrated on the same demos.
constexpr int kTrainingDemos = 30;
constexpr int kModelComponents = 10;

SynthSpec exercise_spec(Archetype a, std::uint64_t seed, InjectedError error = InjectedError::None,
                        double magnitude = 0.3, const std::string& joint = "ElbowLeft") {
    SynthSpec s = synth_spec(a, seed, error, magnitude, 0.01, 0.05);
    s.joint = joint;
    return s;
}

const Assessor& assessor_for(Archetype a) {
    static std::map<Archetype, std::unique_ptr<Assessor>> cache;
    auto& slot = cache[a];
    if (!slot) {
        std::vector<PoseSequence> demos;
        for (int i = 0; i < kTrainingDemos; ++i) demos.push_back(synth_sequence(exercise_spec(a, 1000 + i)));
        EmConfig em;
        em.k = kModelComponents;
        ExerciseModel model = train_model(demos, em);
        model.exercise = to_string(a);
        slot = std::make_unique<Assessor>(std::move(model), AssessmentConfig{});
        slot->set_calibration(slot->calibrate(demos));
    }
    return *slot;
}

// ---------------------------------------------------------------------------

Checker geometry_suite() {
    Checker c;
    std::mt19937_64 rng(1);
    const std::size_t joints = 11;
    double worst_log_exp = 0.0, worst_exp_log = 0.0, worst_sym = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const HumanPose p = random_pose(joints, rng);
        const Eigen::VectorXd v = random_pose_tangent(joints, rng, 1.5);
        worst_log_exp = std::max(worst_log_exp, (pose_log(p, pose_exp(p, v)) - v).cwiseAbs().maxCoeff());
        const HumanPose y = random_pose(joints, rng);
        worst_exp_log = std::max(worst_exp_log, max_abs_diff(pose_exp(p, pose_log(p, y)), y));
        worst_sym = std::max(worst_sym, std::abs(geodesic_distance(p, y) - geodesic_distance(y, p)));
    }
    c.expect(worst_log_exp <= 1e-8, "log(exp(v)) off by " + fmt("%.3g", worst_log_exp));
    c.expect(worst_exp_log <= 1e-9, "exp(log(y)) off by " + fmt("%.3g", worst_exp_log));
    c.expect(worst_sym <= 1e-9, "distance asymmetry " + fmt("%.3g", worst_sym));

    for (int set = 0; set < 10; ++set) {
        const HumanPose centre = random_pose(joints, rng);
        std::vector<HumanPose> pts;
        for (int i = 0; i < 20; ++i) pts.push_back(pose_exp(centre, random_pose_tangent(joints, rng, 0.4) * 0.5));
        const KarcherResult r = karcher_mean(pts);
        c.expect(r.converged, "karcher mean did not converge");
        auto cost = [&](const HumanPose& m) {
            double s = 0.0;
            for (const auto& p : pts) s += std::pow(geodesic_distance(m, p), 2);
            return s;
        };
        const double at_mean = cost(r.mean);
        for (int i = 0; i < 100; ++i) {
            const HumanPose perturbed = pose_exp(r.mean, random_pose_tangent(joints, rng, 0.05) * 0.02);
            c.expect(cost(perturbed) >= at_mean, "a perturbation lowers the karcher cost");
        }
    }
    return c;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd flat_vector(double t, const HumanPose& p) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(1 + 6 * p.joint_count()));
    v[0] = t;
    for (std::size_t j = 0; j < p.joint_count(); ++j) v.segment<3>(static_cast<Eigen::Index>(1 + 6 * j)) = p.joints[j].position;
    return v;
}

/// Demos with fixed random orientations and a noisy two-phase position path.
std::vector<PoseSequence> flat_demos(std::size_t joints, std::size_t demos, std::size_t frames, std::mt19937_64& rng) {
    std::vector<UnitQuaternion> fixed;
    for (std::size_t j = 0; j < joints; ++j) fixed.push_back(random_quaternion(rng));
    std::normal_distribution<double> noise(0.0, 0.05);
    std::vector<PoseSequence> out;
    for (std::size_t d = 0; d < demos; ++d) {
        std::vector<HumanPose> poses;
        for (std::size_t t = 0; t < frames; ++t) {
            const double s = static_cast<double>(t) / static_cast<double>(frames - 1);
            HumanPose p;
            for (std::size_t j = 0; j < joints; ++j) {
                const double jj = static_cast<double>(j);
                const Eigen::Vector3d x(std::sin(3.0 * s + jj), s < 0.5 ? 2.0 * s : 1.0, jj - s);
                p.joints.push_back({x + Eigen::Vector3d(noise(rng), noise(rng), noise(rng)), fixed[j]});
            }
            poses.push_back(p);
        }
        out.push_back(make_sequence(poses, toy_joint_set(joints)));
    }
    return out;
}

bool close_rel(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(1.0, std::abs(b)); }

Checker flat_oracle() {
    Checker c;
    std::mt19937_64 rng(2);
    const std::size_t frames = 40;
    for (std::size_t joints : {1, 2, 3}) {
        for (std::size_t k : {2, 3, 5}) {
            auto demos = flat_demos(joints, 5, frames, rng);
            const PoseSequence fresh = demos.back();
            demos.pop_back();
            EmConfig cfg;
            cfg.k = static_cast<int>(k);
            const ExerciseModel m = fit_mixture(demos, cfg);

            std::vector<Eigen::VectorXd> x;
            for (const auto& d : demos) {
                for (std::size_t t = 0; t < frames; ++t) x.push_back(flat_vector(frame_time(t, frames), d.poses[t]));
            }
            const oracle::FlatGmm g = oracle::flat_em(x, frames, k, cfg.regularization, cfg.tolerance, cfg.max_iterations);
            const std::string tag = "J=" + std::to_string(joints) + " K=" + std::to_string(k) + ": ";
            c.expect(g.trace.size() == m.training.em_trace.size(), tag + "iteration counts differ");
            for (std::size_t i = 0; i < std::min(g.trace.size(), m.training.em_trace.size()); ++i) {
                c.expect(close_rel(m.training.em_trace[i], g.trace[i], 1e-6), tag + "training log-likelihood differs");
            }
            c.expect(m.k() == g.weights.size(), tag + "component counts differ");
            for (std::size_t i = 0; i < std::min(m.k(), g.weights.size()); ++i) {
                c.expect(close_rel(m.components[i].weight, g.weights[i], 1e-6), tag + "weights differ");
                const Eigen::VectorXd mean = flat_vector(m.components[i].mean_time, m.components[i].mean_pose);
                for (Eigen::Index d = 0; d < mean.size(); ++d) {
                    c.expect(close_rel(mean[d], g.means[i][d], 1e-6), tag + "means differ");
                }
            }
            const LogLikelihood ll = sequence_loglik(m, fresh);
            for (std::size_t t = 0; t < frames; ++t) {
                const double expected = g.log_density(flat_vector(frame_time(t, frames), fresh.poses[t]));
                c.expect(std::abs(ll.per_frame[t] - expected) <= 1e-6 * std::abs(expected),
                         tag + "frame log-likelihood " + fmt("%.9g", ll.per_frame[t]) + " vs " + fmt("%.9g", expected));
            }
        }
    }
    return c;
}

// ---------------------------------------------------------------------------

Checker em_monotonicity() {
    Checker c;
    const Archetype archetypes[] = {Archetype::ArmRaiseRotate, Archetype::ArmUpLean, Archetype::ArmsFrontSpread};
    for (int set = 0; set < 20; ++set) {
        std::vector<PoseSequence> demos;
        for (int d = 0; d < 3 + set % 3; ++d) {
            SynthSpec s = synth_spec(archetypes[set % 3], 2000 + 10 * set + d, InjectedError::None, 0.3, 0.02, 0.1);
            s.duration = 3.0 + 0.5 * (set % 4);
            demos.push_back(synth_sequence(s));
        }
        EmConfig cfg;
        cfg.k = 2 + set % 5;
        const ExerciseModel m = train_model(demos, cfg);
        const auto& trace = m.training.em_trace;
        c.expect(trace.size() >= 2, "set " + std::to_string(set) + " ran fewer than two iterations");
        for (std::size_t i = 1; i < trace.size(); ++i) {
            c.expect(trace[i] >= trace[i - 1] - 1e-8 * std::abs(trace[i - 1]),
                     "set " + std::to_string(set) + " iteration " + std::to_string(i) + " decreased by " +
                         fmt("%.3g", trace[i - 1] - trace[i]));
        }
    }
    return c;
}

// ---------------------------------------------------------------------------

/// Components for the regeneration check. Fewer components (the usual 3 to
/// 10) leave a mean error of 0.14 to 0.17 on these 300-frame movements.
constexpr int kFidelityComponents = 30;

Checker gmr_fidelity(std::string& detail) {
    Checker c;
    for (auto a : {Archetype::ArmRaiseRotate, Archetype::ArmUpLean, Archetype::ArmsFrontSpread}) {
        const PoseSequence clean = synth_sequence(synth_spec(a, 1));
        std::vector<PoseSequence> demos;
        for (int i = 0; i < 6; ++i) demos.push_back(synth_sequence(synth_spec(a, 10 + i, InjectedError::None, 0.3, 0.01)));
        EmConfig em;
        em.k = kFidelityComponents;
        const ExerciseModel m = train_model(demos, em);
        const IdealMovement ideal = ideal_movement(m);
        c.expect(ideal.size() == clean.size(), std::string(to_string(a)) + ": length differs");
        double sum = 0.0;
        const std::size_t n = std::min(ideal.size(), clean.size());
        for (std::size_t t = 0; t < n; ++t) sum += geodesic_distance(ideal.poses[t], clean.poses[t]);
        const double mean = sum / static_cast<double>(n);
        detail += std::string(detail.empty() ? "" : ", ") + to_string(a) + " " + fmt("%.4f", mean);
        c.expect(mean < 0.05, std::string(to_string(a)) + ": mean error " + fmt("%.4f", mean));
    }
    return c;
}

// ---------------------------------------------------------------------------

/// Error injected per archetype for the score-ordering criterion.
struct ErrorCase {
    InjectedError error;
    double magnitude;
    bool spine_error;
};

ErrorCase error_case(Archetype a) {
    if (a == Archetype::ArmUpLean) return {InjectedError::NoLean, 0.0, true};
    return {InjectedError::ArmsTooLow, 0.5, false};
}

Checker score_ordering(std::string& detail, AssessmentReport& sample) {
    Checker c;
    for (auto a : {Archetype::ArmRaiseRotate, Archetype::ArmUpLean, Archetype::ArmsFrontSpread}) {
        const Assessor& as = assessor_for(a);
        const ErrorCase ec = error_case(a);
        const std::string name = to_string(a);
        double correct_min = 100.0, error_max = 0.0;
        for (int seed = 0; seed < 10; ++seed) {
            const std::string tag = name + " seed " + std::to_string(seed) + ": ";
            std::vector<double> correct;
            for (int r = 0; r < 2; ++r) {
                const AssessmentReport rep = as.assess(synth_sequence(exercise_spec(a, 5000 + 10 * seed + r)));
                c.expect(rep.global >= 70.0, tag + "correct run scores " + fmt("%.1f", rep.global));
                correct.push_back(rep.global);
                correct_min = std::min(correct_min, rep.global);
                if (seed == 0 && r == 0 && a == Archetype::ArmsFrontSpread) sample = rep;
            }
            const AssessmentReport bad = as.assess(synth_sequence(exercise_spec(a, 7000 + seed, ec.error, ec.magnitude)));
            error_max = std::max(error_max, bad.global);
            c.expect(bad.global <= 40.0, tag + "error run scores " + fmt("%.1f", bad.global));
            for (double g : correct) c.expect(bad.global < g, tag + "error run not below a correct run");
            if (ec.spine_error) {
                c.expect(bad.parts.at("Spine") < 95.0, tag + "spine error leaves the spine at " + fmt("%.1f", bad.parts.at("Spine")));
                for (const char* arm : {"LeftArm", "RightArm"}) {
                    c.expect(bad.parts.at(arm) >= 95.0, tag + "spine error drops " + arm + " to " + fmt("%.1f", bad.parts.at(arm)));
                }
            } else {
                c.expect(bad.parts.at("Spine") >= 95.0, tag + "arm error drops the spine to " + fmt("%.1f", bad.parts.at("Spine")));
            }
        }
        detail += (detail.empty() ? "" : "; ") + name + " correct >= " + fmt("%.1f", correct_min) + ", error <= " +
                  fmt("%.1f", error_max);
    }
    return c;
}

// ---------------------------------------------------------------------------

Checker segmentation() {
    Checker c;
    const std::size_t window = AssessmentConfig{}.window;
    for (auto a : {Archetype::ArmRaiseRotate, Archetype::ArmsFrontSpread}) {
        for (std::uint64_t seed : {3, 4, 5}) {
            const std::string tag = std::string(to_string(a)) + " seed " + std::to_string(seed) + ": ";
            const SynthResult r = synthesize(synth_spec(a, seed, InjectedError::None, 0.3, 0.0, 0.1));
            const PoseSequence seq = to_pose_sequence(r.sequence, JointSet::upper_body());
            const MotionProfile prof = motion_profile(seq, window);
            const double tau = 0.25 * prof.max();

            std::size_t crossing = 0;
            while (crossing < prof.sigma.size() && !(prof.sigma[crossing] > tau)) ++crossing;
            const std::size_t start = detect_start(prof, tau);
            c.expect(crossing >= 10 && start == crossing - 10,
                     tag + "start " + std::to_string(start) + " for a crossing at " + std::to_string(crossing));

            const auto th = segment(prof, tau, SegmentationStrategy::TransitionHold, start);
            const auto to = segment(prof, tau, SegmentationStrategy::TransitionOnly, start);
            std::vector<std::size_t> found;
            for (std::size_t i = 1; i < th.size(); ++i) found.push_back(th[i].start);
            const auto truth = r.boundaries();
            c.expect(found.size() == truth.size(), tag + std::to_string(found.size()) + " boundaries for " +
                                                       std::to_string(truth.size()));
            for (std::size_t b : truth) {
                std::size_t best = seq.size();
                for (std::size_t f : found) best = std::min(best, f > b ? f - b : b - f);
                c.expect(2 * best <= window, tag + "boundary " + std::to_string(b) + " missed by " + std::to_string(best));
            }
            const auto holds = static_cast<std::size_t>(
                std::count_if(th.begin(), th.end(), [](const Segment& s) { return s.kind == SegmentKind::Hold; }));
            c.expect(th.size() - to.size() == holds, tag + "transition_only has " + std::to_string(to.size()) +
                                                         " segments against " + std::to_string(th.size()) + " with " +
                                                         std::to_string(holds) + " holds");
        }
    }
    return c;
}

// ---------------------------------------------------------------------------

Checker segment_discrimination(std::string& detail) {
    Checker c;
    const Assessor& as = assessor_for(Archetype::ArmsFrontSpread);
    double worst_first = 100.0;
    for (int seed = 0; seed < 5; ++seed) {
        const std::string tag = "seed " + std::to_string(seed) + ": ";
        const AssessmentReport rep = as.assess(
            synth_sequence(exercise_spec(Archetype::ArmsFrontSpread, 9000 + seed, InjectedError::ArmOffset, 0.3, "ElbowLeft")));
        c.expect(rep.diagnostics.strategy == SegmentationStrategy::TransitionHold, tag + "wrong strategy");
        const auto lowest = std::min_element(rep.segments.begin(), rep.segments.end(),
                                             [](const SegmentScore& x, const SegmentScore& y) { return x.score < y.score; });
        c.expect(lowest != rep.segments.end() && lowest->segment.kind == SegmentKind::Hold,
                 tag + "the lowest segment is not a hold");
        const auto first = std::find_if(rep.segments.begin(), rep.segments.end(),
                                        [](const SegmentScore& s) { return s.segment.kind == SegmentKind::Transition; });
        c.expect(first != rep.segments.end(), tag + "no transition segment");
        if (first != rep.segments.end()) {
            worst_first = std::min(worst_first, first->score);
            c.expect(first->score >= 70.0, tag + "first transition scores " + fmt("%.1f", first->score));
        }
    }
    detail = "first transition >= " + fmt("%.1f", worst_first);
    return c;
}

// ---------------------------------------------------------------------------

Checker dtw_oracle() {
    Checker c;
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> len(1, 5);
    for (int i = 0; i < 200; ++i) {
        const int n = len(rng);
        const int m = len(rng);
        std::vector<HumanPose> a, b;
        for (int t = 0; t < n; ++t) a.push_back(random_pose(3, rng));
        for (int t = 0; t < m; ++t) b.push_back(random_pose(3, rng));
        Eigen::MatrixXd cost(n, m);
        for (int r = 0; r < n; ++r) {
            for (int s = 0; s < m; ++s) cost(r, s) = geodesic_distance(a[r], b[s]);
        }
        const double expected = oracle::BruteForceDtw(cost).min_cost();
        const double got = dtw_align(a, b).cost;
        c.expect(got == expected, "instance " + std::to_string(i) + ": " + fmt("%.17g", got) + " vs " + fmt("%.17g", expected));
    }
    return c;
}

// ---------------------------------------------------------------------------

struct LabeledRun {
    AssessmentReport report;
    ErrorExample example;
};

Checker error_classification(std::string& detail, ErrorClassifier& trained) {
    Checker c;
    const Archetype a = Archetype::ArmsFrontSpread;
    const Assessor& as = assessor_for(a);
    const std::string exercise = to_string(a);
    const std::string part = "LeftArm";

    struct ClassSpec {
        const char* label;
        InjectedError error;
        const char* joint;
        double lo, hi;
    };
    const ClassSpec classes[] = {{"arms_too_low", InjectedError::ArmsTooLow, "ElbowLeft", 0.3, 0.6},
                                 {"arm_too_high", InjectedError::ArmOffset, "ShoulderLeft", 0.3, 0.5},
                                 {"elbow_bent", InjectedError::ArmOffset, "ElbowLeft", 0.3, 0.5}};
    std::mt19937_64 rng(9);
    std::vector<LabeledRun> runs;
    std::vector<int> fold;
    std::uint64_t seed = 11000;
    for (const auto& cs : classes) {
        std::uniform_real_distribution<double> mag(cs.lo, cs.hi);
        for (int i = 0; i < 20; ++i) {
            const AssessmentReport rep = as.assess(synth_sequence(exercise_spec(a, seed++, cs.error, mag(rng), cs.joint)));
            const Eigen::VectorXd f = example_feature(rep, as.ideal_sequence(), part, std::nullopt);
            runs.push_back({rep, {f, cs.label, exercise, part}});
            fold.push_back(i % 5);
        }
    }

    std::size_t correct = 0;
    for (int k = 0; k < 5; ++k) {
        std::vector<ErrorExample> train;
        for (std::size_t i = 0; i < runs.size(); ++i) {
            if (fold[i] != k) train.push_back(runs[i].example);
        }
        const ErrorClassifier clf = train_error_classifier(train);
        for (std::size_t i = 0; i < runs.size(); ++i) {
            if (fold[i] != k) continue;
            if (clf.scope(exercise, part).best(runs[i].example.feature).label == runs[i].example.label) ++correct;
        }
    }
    const double accuracy = static_cast<double>(correct) / static_cast<double>(runs.size());
    c.expect(accuracy >= 0.9, "cross-validated accuracy " + fmt("%.3f", accuracy));

    std::vector<ErrorExample> all;
    for (const auto& r : runs) all.push_back(r.example);
    trained = train_error_classifier(all);
    const AdviceDictionary dict = AdviceDictionary::defaults();
    std::size_t suppressed = 0, emitted = 0;
    for (const auto& run : runs) {
        AssessmentReport rep = run.report;
        // every segment goes to the classifier
        attach_feedback(rep, as.ideal_sequence(), exercise, trained, dict, 101.0);
        std::size_t confident = 0;
        for (std::size_t s = 1; s <= rep.segments.size(); ++s) {
            const Eigen::VectorXd f = example_feature(rep, as.ideal_sequence(), part, s);
            const ErrorPrediction best = trained.scope(exercise, part).best(f);
            const auto gated = trained.classify(f, exercise, part);
            c.expect(gated.has_value() == (best.confidence >= trained.theta), "gating disagrees with theta");
            if (best.confidence >= trained.theta) {
                ++confident;
            } else {
                ++suppressed;
            }
        }
        c.expect(rep.errors.size() == confident, "advice count differs from confident predictions");
        for (const auto& e : rep.errors) {
            ++emitted;
            c.expect(e.confidence >= trained.theta, "advice below theta");
            const std::string expected = fill_template(dict.entries().at(exercise).at(e.part).at(e.label), e.part, e.segment);
            c.expect(e.advice == expected, "advice '" + e.advice + "' does not match its template");
        }
    }
    c.expect(suppressed > 0 && emitted > 0, "gating was not exercised in both directions");
    detail = "accuracy " + fmt("%.3f", accuracy) + ", " + std::to_string(emitted) + " advised, " +
             std::to_string(suppressed) + " suppressed";
    return c;
}

// ---------------------------------------------------------------------------

double model_deviation(const ExerciseModel& a, const ExerciseModel& b, Checker& c) {
    double worst = 0.0;
    c.expect(a.exercise == b.exercise && a.joint_set == b.joint_set && a.t_ref == b.t_ref && a.k() == b.k(),
             "model structure differs");
    if (a.k() != b.k()) return worst;
    worst = std::max({worst, std::abs(a.fps - b.fps), std::abs(a.regularization - b.regularization)});
    for (std::size_t k = 0; k < a.k(); ++k) {
        worst = std::max({worst, std::abs(a.components[k].weight - b.components[k].weight),
                          std::abs(a.components[k].mean_time - b.components[k].mean_time),
                          max_abs_diff(a.components[k].mean_pose, b.components[k].mean_pose),
                          (a.components[k].cov - b.components[k].cov).cwiseAbs().maxCoeff()});
    }
    c.expect(a.training.em_trace.size() == b.training.em_trace.size(), "EM trace length differs");
    for (std::size_t i = 0; i < std::min(a.training.em_trace.size(), b.training.em_trace.size()); ++i) {
        worst = std::max(worst, std::abs(a.training.em_trace[i] - b.training.em_trace[i]));
    }
    c.expect(a.calibration.scopes.size() == b.calibration.scopes.size(), "calibration scopes differ");
    for (const auto& [name, sc] : a.calibration.scopes) {
        const auto& other = b.calibration.scope(name);
        worst = std::max({worst, std::abs(sc.anchors.ll_good - other.anchors.ll_good),
                          std::abs(sc.anchors.ll_floor - other.anchors.ll_floor)});
        c.expect(sc.demo_frame_ll.size() == other.demo_frame_ll.size(), "calibration demos differ");
        for (std::size_t d = 0; d < std::min(sc.demo_frame_ll.size(), other.demo_frame_ll.size()); ++d) {
            c.expect(sc.demo_frame_ll[d].size() == other.demo_frame_ll[d].size(), "calibration frames differ");
            for (std::size_t t = 0; t < std::min(sc.demo_frame_ll[d].size(), other.demo_frame_ll[d].size()); ++t) {
                worst = std::max(worst, std::abs(sc.demo_frame_ll[d][t] - other.demo_frame_ll[d][t]));
            }
        }
    }
    return worst;
}

double classifier_deviation(const ErrorClassifier& a, const ErrorClassifier& b, Checker& c) {
    double worst = std::max(std::abs(a.theta - b.theta), std::abs(a.c - b.c));
    c.expect(a.scopes.size() == b.scopes.size(), "classifier scopes differ");
    for (const auto& [key, s1] : a.scopes) {
        if (!b.has_scope(key.first, key.second)) {
            c.expect(false, "classifier scope missing after reload");
            continue;
        }
        const auto& s2 = b.scope(key.first, key.second);
        c.expect(s1.classes == s2.classes && s1.machines.size() == s2.machines.size(), "classifier structure differs");
        if (s1.machines.size() != s2.machines.size()) continue;
        worst = std::max({worst, (s1.feature_mean - s2.feature_mean).cwiseAbs().maxCoeff(),
                          (s1.feature_scale - s2.feature_scale).cwiseAbs().maxCoeff()});
        for (std::size_t m = 0; m < s1.machines.size(); ++m) {
            worst = std::max({worst, (s1.machines[m].w - s2.machines[m].w).cwiseAbs().maxCoeff(),
                              std::abs(s1.machines[m].b - s2.machines[m].b),
                              std::abs(s1.calibration[m].a - s2.calibration[m].a),
                              std::abs(s1.calibration[m].b - s2.calibration[m].b)});
        }
    }
    return worst;
}

double report_deviation(const AssessmentReport& a, const AssessmentReport& b, Checker& c) {
    double worst = std::max(std::abs(a.global - b.global), std::abs(a.weighted_parts - b.weighted_parts));
    c.expect(a.start_frame == b.start_frame && a.parts.size() == b.parts.size() &&
                 a.segments.size() == b.segments.size() && a.errors.size() == b.errors.size(),
             "report structure differs");
    for (const auto& [part, score] : a.parts) {
        if (b.parts.count(part)) worst = std::max(worst, std::abs(score - b.parts.at(part)));
    }
    for (std::size_t i = 0; i < std::min(a.segments.size(), b.segments.size()); ++i) {
        c.expect(a.segments[i].segment == b.segments[i].segment, "segment bounds differ");
        worst = std::max(worst, std::abs(a.segments[i].score - b.segments[i].score));
        for (const auto& [part, score] : a.segments[i].part_scores) {
            const auto it = b.segments[i].part_scores.find(part);
            c.expect(it != b.segments[i].part_scores.end(), "segment part score missing");
            if (it != b.segments[i].part_scores.end()) worst = std::max(worst, std::abs(score - it->second));
        }
    }
    for (std::size_t i = 0; i < std::min(a.errors.size(), b.errors.size()); ++i) {
        c.expect(a.errors[i].label == b.errors[i].label && a.errors[i].advice == b.errors[i].advice &&
                     a.errors[i].part == b.errors[i].part && a.errors[i].segment == b.errors[i].segment,
                 "finding differs");
        worst = std::max(worst, std::abs(a.errors[i].confidence - b.errors[i].confidence));
    }
    const auto& d1 = a.diagnostics;
    const auto& d2 = b.diagnostics;
    worst = std::max({worst, std::abs(d1.tau - d2.tau), std::abs(d1.dtw_cost - d2.dtw_cost),
                      std::abs(d1.mean_loglik - d2.mean_loglik)});
    return worst;
}

int run_cli(const fs::path& cwd, const std::string& args) {
    const std::string cmd = "cd \"" + cwd.string() + "\" && \"" + POSECOACH_CLI + "\" " + args + " > cli.log 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Checker serialization(const ErrorClassifier& classifier, const AssessmentReport& report, std::string& detail) {
    Checker c;
    const ExerciseModel& model = assessor_for(Archetype::ArmsFrontSpread).model();
    const double dm = model_deviation(model, model_from_json(model_to_json(model)), c);
    const double dc = classifier_deviation(classifier, classifier_from_json(classifier_to_json(classifier)), c);
    AssessmentReport with_advice = report;
    with_advice.errors.push_back({"LeftArm", 2, "arms_too_low", 0.8123456789, "During part 2, raise your left arm higher."});
    const double dr = report_deviation(with_advice, report_from_json(report_to_json(with_advice)), c);
    c.expect(dm <= 1e-12, "model deviates by " + fmt("%.3g", dm));
    c.expect(dc <= 1e-12, "classifier deviates by " + fmt("%.3g", dc));
    c.expect(dr <= 1e-12, "report deviates by " + fmt("%.3g", dr));

    const fs::path base = fs::temp_directory_path() / ("posecoach_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(base);
    const std::vector<std::string> outputs = {"d0.json", "d1.json", "d2.json", "d0.meta.json", "probe.json",
                                              "model.json", "ideal.json", "report.json", "report.svg", "report.csv"};
    std::vector<std::map<std::string, std::string>> runs;
    for (const char* name : {"a", "b"}) {
        const fs::path dir = base / name;
        fs::create_directories(dir);
        bool ok = true;
        for (int d = 0; d < 3; ++d) {
            ok = ok && run_cli(dir, "--seed " + std::to_string(40 + d) +
                                        " synth --exercise arm_raise_rotate --duration 6 --noise 0.01 --variation 0.05 -o d" +
                                        std::to_string(d) + ".json") == 0;
        }
        ok = ok && run_cli(dir, "--seed 43 synth --exercise arm_raise_rotate --duration 6 --noise 0.01 -o probe.json") == 0;
        ok = ok && run_cli(dir, "--seed 7 train d0.json d1.json d2.json -k 3 -o model.json") == 0;
        ok = ok && run_cli(dir, "generate model.json -o ideal.json") == 0;
        ok = ok && run_cli(dir, "assess model.json probe.json -o report.json --svg report.svg --csv report.csv") == 0;
        c.expect(ok, std::string("CLI pipeline failed in run ") + name);
        std::map<std::string, std::string> files;
        for (const auto& f : outputs) files[f] = slurp(dir / f);
        runs.push_back(std::move(files));
    }
    std::size_t identical = 0;
    for (const auto& f : outputs) {
        const bool same = !runs[0][f].empty() && runs[0][f] == runs[1][f];
        c.expect(same, f + " differs between runs");
        if (same) ++identical;
    }
    fs::remove_all(base);
    detail = "max deviation model " + fmt("%.1g", dm) + ", classifier " + fmt("%.1g", dc) + ", report " +
             fmt("%.1g", dr) + "; " + std::to_string(identical) + "/" + std::to_string(outputs.size()) +
             " CLI outputs identical";
    return c;
}

// ---------------------------------------------------------------------------

struct Criterion {
    int id;
    std::string name;
    double time_limit;  // seconds, 0 for none
    std::function<Checker(std::string&)> run;
};

}  // namespace

int main() {
    ErrorClassifier classifier;
    AssessmentReport sample_report;

    const std::vector<Criterion> criteria = {
        {1, "geometry suite", 5.0, [](std::string&) { return geometry_suite(); }},
        {2, "flat-space GMM oracle", 30.0, [](std::string&) { return flat_oracle(); }},
        {3, "EM monotonicity", 0.0, [](std::string&) { return em_monotonicity(); }},
        {4, "GMR fidelity", 0.0, [](std::string& d) { return gmr_fidelity(d); }},
        {5, "score ordering on synthetic exercises", 120.0,
         [&](std::string& d) { return score_ordering(d, sample_report); }},
        {6, "segmentation boundaries and start detection", 0.0, [](std::string&) { return segmentation(); }},
        {7, "segment-level discrimination", 0.0, [](std::string& d) { return segment_discrimination(d); }},
        {8, "DTW exhaustive oracle", 0.0, [](std::string&) { return dtw_oracle(); }},
        {9, "error classification and advice", 0.0, [&](std::string& d) { return error_classification(d, classifier); }},
        {10, "serialization and reproducibility", 0.0,
         [&](std::string& d) { return serialization(classifier, sample_report, d); }},
    };

    int failed = 0;
    for (const auto& crit : criteria) {
        const auto t0 = Clock::now();
        std::string detail;
        Checker result;
        try {
            result = crit.run(detail);
        } catch (const std::exception& e) {
            result.expect(false, std::string("exception: ") + e.what());
        }
        const double elapsed = seconds_since(t0);
        if (crit.time_limit > 0.0) {
            result.expect(elapsed < crit.time_limit, "took " + fmt("%.1f", elapsed) + " s, limit " + fmt("%.0f", crit.time_limit) + " s");
        }
        if (!result.ok()) ++failed;
        std::printf("[%s] %2d %s (%.1f s)%s%s\n", result.ok() ? "PASS" : "FAIL", crit.id, crit.name.c_str(), elapsed,
                    detail.empty() ? "" : ": ", detail.c_str());
        for (const auto& note : result.notes) std::printf("       %s\n", note.c_str());
        if (result.failures > static_cast<int>(result.notes.size())) {
            std::printf("       ... %d failed checks in total\n", result.failures);
        }
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
