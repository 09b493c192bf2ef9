#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "posecoach/assessment.hpp"
#include "posecoach/config.hpp"
#include "posecoach/error.hpp"
#include "posecoach/feedback.hpp"
#include "posecoach/movement_model.hpp"
#include "posecoach/report_io.hpp"
#include "posecoach/skeleton_io.hpp"
#include "posecoach/synth.hpp"

namespace fs = std::filesystem;
using namespace posecoach;

namespace {

struct Globals {
    std::uint64_t seed = 1;
    std::string config_path;

    PipelineConfig config() const { return config_path.empty() ? PipelineConfig{} : load_config(config_path); }
};

/// Checked before anything is written, so a bad path never leaves half the
/// outputs behind.
void check_outputs(const std::vector<fs::path>& outputs) {
    std::set<fs::path> seen;
    for (const auto& p : outputs) {
        if (p.empty()) continue;
        const fs::path dir = p.parent_path().empty() ? fs::path(".") : p.parent_path();
        if (!fs::is_directory(dir)) throw UsageError("output directory '" + dir.string() + "' does not exist");
        if (!seen.insert(fs::weakly_canonical(p)).second) throw UsageError("output '" + p.string() + "' is given twice");
    }
}

std::set<std::string> joint_names(const RawSequence& raw) {
    std::set<std::string> names;
    for (const auto& frame : raw.frames) {
        for (const auto& [name, joint] : frame.joints) names.insert(name);
    }
    return names;
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
    return out;
}

void apply_k(PipelineConfig& cfg, const std::string& k) {
    if (k.empty()) return;
    if (k == "auto") {
        cfg.k_auto = true;
        return;
    }
    std::size_t used = 0;
    int value = 0;
    try {
        value = std::stoi(k, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != k.size() || value < 1) throw UsageError("-k expects a positive integer or 'auto', got '" + k + "'");
    cfg.k_auto = false;
    cfg.em.k = value;
}

// train ----------------------------------------------------------------------

struct TrainArgs {
    std::vector<std::string> demos;
    std::string output;
    std::string k;
    std::string exercise;
};

int cmd_train(const Globals& g, const TrainArgs& a) {
    PipelineConfig cfg = g.config();
    apply_k(cfg, a.k);
    if (a.demos.size() < 2) throw DataError("need ≥ 2 demonstrations");
    check_outputs({a.output});

    const JointSet joints = JointSet::upper_body();
    std::vector<PoseSequence> demos;
    std::set<std::string> reference_names;
    for (std::size_t i = 0; i < a.demos.size(); ++i) {
        const fs::path path = a.demos[i];
        const RawSequence raw = parse_sequence(path, format_from_path(path), joints);
        const auto names = joint_names(raw);
        if (i == 0) {
            reference_names = names;
        } else if (names != reference_names) {
            std::vector<std::string> missing, extra;
            for (const auto& n : reference_names) {
                if (!names.count(n)) missing.push_back(n);
            }
            for (const auto& n : names) {
                if (!reference_names.count(n)) extra.push_back(n);
            }
            std::string detail;
            if (!missing.empty()) detail += "missing " + join(missing);
            if (!extra.empty()) detail += (detail.empty() ? "" : "; ") + std::string("extra ") + join(extra);
            throw DataError(path.string() + ": joint set differs from '" + a.demos.front() + "' (" + detail + ")");
        }
        try {
            demos.push_back(to_pose_sequence(raw, joints));
        } catch (const DataError& e) {
            throw DataError(path.string() + ": " + e.what());
        }
    }

    ExerciseModel model = cfg.k_auto ? train_model_bic(demos, cfg.em, cfg.k_min, cfg.k_max) : train_model(demos, cfg.em);
    if (!a.exercise.empty()) model.exercise = a.exercise;
    Assessor assessor(std::move(model), cfg.assessment);
    assessor.set_calibration(assessor.calibrate(demos));
    save_model(assessor.model(), a.output);

    const auto& m = assessor.model();
    const auto& trace = m.training.em_trace;
    std::printf("trained '%s' from %zu demonstrations: K = %zu, %zu reference frames\n", m.exercise.c_str(),
                m.training.demo_count, m.k(), m.t_ref);
    if (!trace.empty()) {
        std::printf("EM: %d iterations, %s, log-likelihood %.6g -> %.6g\n", m.training.iterations,
                    m.training.converged ? "converged" : "stopped at the iteration limit", trace.front(), trace.back());
    }
    std::printf("wrote %s\n", a.output.c_str());
    return 0;
}

// generate -------------------------------------------------------------------

struct GenerateArgs {
    std::string model;
    std::string output;
};

int cmd_generate(const Globals&, const GenerateArgs& a) {
    const ExerciseModel model = load_model(a.model);
    check_outputs({a.output});
    const IdealMovement ideal = ideal_movement(model);
    write_text_file(a.output, sequence_to_json(to_raw_sequence(ideal.as_sequence(model))));
    std::printf("wrote %zu frames to %s\n", ideal.size(), a.output.c_str());
    return 0;
}

// assess ---------------------------------------------------------------------

struct AssessArgs {
    std::string model;
    std::string sequence;
    std::string output;
    std::string strategy;
    std::optional<std::size_t> window;
    std::optional<double> threshold;
    std::string svg;
    std::string csv;
    std::string classifier;
    std::string dictionary;
};

int cmd_assess(const Globals& g, const AssessArgs& a) {
    PipelineConfig cfg = g.config();
    auto& ac = cfg.assessment;
    if (!a.strategy.empty()) ac.strategy = strategy_from_string(a.strategy);
    if (a.window) {
        if (*a.window < 2) throw UsageError("--window must be at least 2");
        ac.window = *a.window;
    }
    if (a.threshold) {
        if (!(*a.threshold > 0.0)) throw UsageError("--threshold must be positive");
        ac.tau = *a.threshold;
    }
    if (!a.dictionary.empty() && a.classifier.empty()) throw UsageError("--dictionary needs --classifier");

    const ExerciseModel model = load_model(a.model);
    const PoseSequence seq = load_pose_sequence(a.sequence, model.joint_set);
    std::optional<ErrorClassifier> classifier;
    if (!a.classifier.empty()) classifier = load_classifier(a.classifier);
    const AdviceDictionary dictionary = a.dictionary.empty() ? AdviceDictionary::defaults() : load_dictionary(a.dictionary);
    check_outputs({a.output, a.svg, a.csv});

    const Assessor assessor(model, ac);
    AssessmentReport report = assessor.assess(seq);
    if (classifier) {
        for (const auto& entry : dictionary.missing_entries(*classifier)) {
            std::cerr << "warning: no advice sentence for " << entry << "; the generic sentence is used\n";
        }
        attach_feedback(report, assessor.ideal_sequence(), model.exercise, *classifier, dictionary,
                        ac.error_score_threshold);
    }

    write_text_file(a.output, report_to_json(report));
    if (!a.svg.empty()) write_text_file(a.svg, report_svg(report));
    if (!a.csv.empty()) write_text_file(a.csv, report_csv(report));
    std::cout << report_text(report);
    return 0;
}

// synth ----------------------------------------------------------------------

struct SynthArgs {
    std::string exercise;
    double duration = 10.0;
    double fps = 30.0;
    double noise = 0.0;
    std::string error = "none";
    double magnitude = 0.3;
    std::string joint = "ElbowLeft";
    double variation = 0.0;
    std::string subject = "synthetic";
    std::string output;
    std::string meta;
};

fs::path default_meta_path(const fs::path& output) {
    fs::path meta = output;
    meta.replace_extension(".meta.json");
    return meta;
}

int cmd_synth(const Globals& g, const SynthArgs& a) {
    SynthSpec spec;
    spec.archetype = archetype_from_string(a.exercise);
    spec.error = injected_error_from_string(a.error);
    spec.duration = a.duration;
    spec.fps = a.fps;
    spec.noise = a.noise;
    spec.magnitude = a.magnitude;
    spec.joint = a.joint;
    spec.variation = a.variation;
    spec.subject = a.subject;
    spec.seed = g.seed;
    spec.validate();
    const fs::path meta = a.meta.empty() ? default_meta_path(a.output) : fs::path(a.meta);
    check_outputs({a.output, meta});

    const SynthResult result = synthesize(spec);
    write_text_file(a.output, sequence_to_json(result.sequence));
    write_text_file(meta, result.metadata_json(spec));
    std::printf("wrote %zu frames to %s (phases in %s)\n", result.sequence.frames.size(), a.output.c_str(),
                meta.string().c_str());
    return 0;
}

// train-errors ---------------------------------------------------------------

struct TrainErrorsArgs {
    std::string labels;
    std::vector<std::string> models;
    std::string output;
};

/// Labeled file: a JSON list of {"sequence_path", "exercise", "part",
/// "segment", "label"}. Sequence paths are relative to the labeled file; a
/// null or absent segment means the whole sequence, and "exercise" may be
/// left out when only one model is given.
int cmd_train_errors(const Globals& g, const TrainErrorsArgs& a) {
    const PipelineConfig cfg = g.config();
    if (a.models.empty()) throw UsageError("train-errors needs at least one --model");
    std::map<std::string, std::unique_ptr<Assessor>> assessors;
    for (const auto& path : a.models) {
        ExerciseModel model = load_model(path);
        const std::string exercise = model.exercise;
        if (assessors.count(exercise)) throw UsageError("two models for exercise '" + exercise + "'");
        assessors[exercise] = std::make_unique<Assessor>(std::move(model), cfg.assessment);
    }

    nlohmann::json doc;
    try {
        const std::string text = read_text_file(a.labels);
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(a.labels + ": " + e.what());
    }
    const fs::path base = fs::path(a.labels).parent_path();
    check_outputs({a.output});

    std::vector<ErrorExample> examples;
    std::map<std::pair<std::string, std::string>, AssessmentReport> reports;
    try {
        if (!doc.is_array()) throw DataError(a.labels + ": expected a JSON list of labeled examples");
        for (const auto& item : doc) {
            const std::string exercise = assessors.size() == 1 && !item.contains("exercise")
                                             ? assessors.begin()->first
                                             : item.at("exercise").get<std::string>();
            const auto it = assessors.find(exercise);
            if (it == assessors.end()) throw DataError("no model for exercise '" + exercise + "'");
            const Assessor& assessor = *it->second;
            const fs::path seq_path = base / item.at("sequence_path").get<std::string>();
            const auto key = std::make_pair(exercise, seq_path.string());
            if (!reports.count(key)) {
                reports[key] = assessor.assess(load_pose_sequence(seq_path, assessor.model().joint_set));
            }
            std::optional<std::size_t> segment;
            if (item.contains("segment") && !item["segment"].is_null()) segment = item["segment"].get<std::size_t>();
            const std::string part = item.at("part").get<std::string>();
            if (!assessor.model().joint_set.has_part(part)) throw DataError("unknown body part '" + part + "'");
            examples.push_back({example_feature(reports[key], assessor.ideal_sequence(), part, segment),
                                item.at("label").get<std::string>(), exercise, part});
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(a.labels + ": " + e.what());
    }

    const ErrorClassifier classifier = train_error_classifier(examples, cfg.theta, cfg.svm_c);
    save_classifier(classifier, a.output);
    std::printf("trained %zu scopes from %zu examples\n", classifier.scopes.size(), examples.size());
    for (const auto& [scope, sc] : classifier.scopes) {
        std::printf("  %s / %s: %s\n", scope.first.c_str(), scope.second.c_str(), join(sc.classes).c_str());
    }
    std::printf("wrote %s\n", a.output.c_str());
    return 0;
}

// report ---------------------------------------------------------------------

struct ReportArgs {
    std::string report;
    std::string svg;
};

int cmd_report(const Globals&, const ReportArgs& a) {
    const AssessmentReport report = report_from_json(read_text_file(a.report));
    check_outputs({a.svg});
    if (!a.svg.empty()) write_text_file(a.svg, report_svg(report));
    std::cout << report_text(report);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learn exercise models from demonstrations and assess patient movements"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();
    app.add_option("--config", g.config_path, "JSON file overriding the pipeline defaults");

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "Train an exercise model from demonstrations");
    train_cmd->add_option("demos", train.demos, "Demonstration files (.json or .csv)")->required();
    train_cmd->add_option("-o,--output", train.output, "Model file to write")->required();
    train_cmd->add_option("-k,--components", train.k, "Number of mixture components, or 'auto' for BIC selection");
    train_cmd->add_option("--exercise", train.exercise, "Exercise name stored in the model");

    GenerateArgs generate;
    auto* generate_cmd = app.add_subcommand("generate", "Write the ideal movement of a model as a sequence");
    generate_cmd->add_option("model", generate.model, "Model file")->required();
    generate_cmd->add_option("-o,--output", generate.output, "Sequence file to write")->required();

    AssessArgs assess;
    auto* assess_cmd = app.add_subcommand("assess", "Score a sequence against a model");
    assess_cmd->add_option("model", assess.model, "Model file")->required();
    assess_cmd->add_option("sequence", assess.sequence, "Sequence file (.json or .csv)")->required();
    assess_cmd->add_option("-o,--output", assess.output, "Report file to write")->required();
    assess_cmd->add_option("--strategy", assess.strategy, "transition_hold or transition_only");
    assess_cmd->add_option("--window", assess.window, "Motion profile window in frames");
    assess_cmd->add_option("--threshold", assess.threshold, "Absolute motion threshold (default: a fraction of the ideal movement's peak)");
    assess_cmd->add_option("--svg", assess.svg, "Also write a score timeline");
    assess_cmd->add_option("--csv", assess.csv, "Also write per-frame log-likelihoods and motion spread");
    assess_cmd->add_option("--classifier", assess.classifier, "Error classifier for advice");
    assess_cmd->add_option("--dictionary", assess.dictionary, "Advice dictionary (default: built-in sentences)");

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "Synthesize an exercise sequence with an optional error");
    synth_cmd->add_option("--exercise", synth.exercise, "arm_raise_rotate, arm_up_lean or arms_front_spread")->required();
    synth_cmd->add_option("--duration", synth.duration, "Seconds")->capture_default_str();
    synth_cmd->add_option("--fps", synth.fps, "Frames per second")->capture_default_str();
    synth_cmd->add_option("--noise", synth.noise, "Noise standard deviation")->capture_default_str();
    synth_cmd->add_option("--error", synth.error, "none, arms_too_low, no_lean or arm_offset")->capture_default_str();
    synth_cmd->add_option("--magnitude", synth.magnitude, "Error magnitude")->capture_default_str();
    synth_cmd->add_option("--joint", synth.joint, "Joint of an arm_offset error")->capture_default_str();
    synth_cmd->add_option("--variation", synth.variation, "Relative jitter of timing and amplitude")->capture_default_str();
    synth_cmd->add_option("--subject", synth.subject, "Subject name")->capture_default_str();
    synth_cmd->add_option("-o,--output", synth.output, "Sequence file to write")->required();
    synth_cmd->add_option("--meta", synth.meta, "Phase metadata file (default: <output>.meta.json)");

    TrainErrorsArgs train_errors;
    auto* train_errors_cmd = app.add_subcommand("train-errors", "Train the error classifier from labeled sequences");
    train_errors_cmd->add_option("labels", train_errors.labels, "Labeled examples file")->required();
    train_errors_cmd->add_option("-m,--model", train_errors.models, "Model of each exercise in the labels")->required();
    train_errors_cmd->add_option("-o,--output", train_errors.output, "Classifier file to write")->required();

    ReportArgs report;
    auto* report_cmd = app.add_subcommand("report", "Print a saved report");
    report_cmd->add_option("report", report.report, "Report file")->required();
    report_cmd->add_option("--svg", report.svg, "Also write a score timeline");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ErrorKind::Usage);
    }

    try {
        if (*train_cmd) return cmd_train(g, train);
        if (*generate_cmd) return cmd_generate(g, generate);
        if (*assess_cmd) return cmd_assess(g, assess);
        if (*synth_cmd) return cmd_synth(g, synth);
        if (*train_errors_cmd) return cmd_train_errors(g, train_errors);
        if (*report_cmd) return cmd_report(g, report);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
