#include "posecoach/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "posecoach/error.hpp"

namespace posecoach {

using nlohmann::json;

std::vector<Eigen::VectorXd> tangent_residuals(const PoseSequence& ideal, const PoseSequence& seq) {
    if (ideal.size() != seq.size()) {
        throw DataError("residuals need equal lengths, got " + std::to_string(ideal.size()) + " and " +
                        std::to_string(seq.size()));
    }
    if (ideal.joint_set.names() != seq.joint_set.names()) throw DataError("residuals need identical joint sets");
    std::vector<Eigen::VectorXd> out;
    out.reserve(seq.size());
    for (std::size_t t = 0; t < seq.size(); ++t) out.push_back(pose_log(ideal.poses[t], seq.poses[t]));
    return out;
}

Eigen::VectorXd aggregate_features(std::span<const Eigen::VectorXd> residuals, const Segment& segment,
                                   const JointSet& joints, const std::string& part) {
    if (segment.end <= segment.start) throw DataError("cannot aggregate an empty segment");
    if (segment.end > residuals.size()) throw DataError("segment extends beyond the residuals");
    const auto idx = joints.part_indices(part);
    const auto per_joint = static_cast<Eigen::Index>(kTangentDimsPerJoint);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(idx.size()) * per_joint);
    for (std::size_t t = segment.start; t < segment.end; ++t) {
        for (std::size_t k = 0; k < idx.size(); ++k) {
            out.segment(static_cast<Eigen::Index>(k) * per_joint, per_joint) +=
                residuals[t].segment(static_cast<Eigen::Index>(idx[k]) * per_joint, per_joint);
        }
    }
    return out / static_cast<double>(segment.length());
}

std::vector<double> ScopeClassifier::confidences(const Eigen::VectorXd& feature) const {
    if (feature.size() != feature_mean.size()) {
        throw DataError("feature has " + std::to_string(feature.size()) + " entries, classifier expects " +
                        std::to_string(feature_mean.size()));
    }
    const Eigen::VectorXd z = (feature - feature_mean).cwiseQuotient(feature_scale);
    std::vector<double> conf;
    if (classes.size() == 2) {
        const double p = calibration[0].probability(machines[0].decision(z));
        conf = {1.0 - p, p};
    } else {
        for (std::size_t c = 0; c < classes.size(); ++c) {
            conf.push_back(calibration[c].probability(machines[c].decision(z)));
        }
    }
    return conf;
}

ErrorPrediction ScopeClassifier::best(const Eigen::VectorXd& feature) const {
    const auto conf = confidences(feature);
    const auto it = std::max_element(conf.begin(), conf.end());
    return {classes[static_cast<std::size_t>(it - conf.begin())], *it};
}

bool ErrorClassifier::has_scope(const std::string& exercise, const std::string& part) const {
    return scopes.count({exercise, part}) > 0;
}

const ScopeClassifier& ErrorClassifier::scope(const std::string& exercise, const std::string& part) const {
    const auto it = scopes.find({exercise, part});
    if (it == scopes.end()) throw DataError("classifier has no scope for exercise '" + exercise + "', part '" + part + "'");
    return it->second;
}

std::optional<ErrorPrediction> ErrorClassifier::classify(const Eigen::VectorXd& feature, const std::string& exercise,
                                                         const std::string& part) const {
    ErrorPrediction p = scope(exercise, part).best(feature);
    if (p.confidence < theta) return std::nullopt;
    return p;
}

namespace {

ScopeClassifier train_scope(const std::vector<const ErrorExample*>& examples, double c) {
    ScopeClassifier sc;
    std::set<std::string> labels;
    for (const auto* e : examples) labels.insert(e->label);
    sc.classes.assign(labels.begin(), labels.end());
    const auto n = static_cast<Eigen::Index>(examples.size());
    const Eigen::Index d = examples.front()->feature.size();
    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& f = examples[static_cast<std::size_t>(i)]->feature;
        if (f.size() != d) throw DataError("error examples of one scope have different feature sizes");
        if (!f.allFinite()) throw DataError("error example feature is not finite");
        x.row(i) = f.transpose();
    }
    sc.feature_mean = x.colwise().mean().transpose();
    sc.feature_scale = ((x.rowwise() - sc.feature_mean.transpose()).colwise().squaredNorm() / static_cast<double>(n))
                           .cwiseSqrt()
                           .transpose();
    for (Eigen::Index j = 0; j < d; ++j) {
        if (!(sc.feature_scale[j] > 1e-12)) sc.feature_scale[j] = 1.0;
    }
    const Eigen::MatrixXd z =
        (x.rowwise() - sc.feature_mean.transpose()).array().rowwise() / sc.feature_scale.transpose().array();

    auto fit = [&](const std::string& positive) {
        std::vector<int> y;
        for (const auto* e : examples) y.push_back(e->label == positive ? 1 : -1);
        SvmOptions opts;
        opts.c = c;
        LinearSvm svm = train_linear_svm(z, y, opts);
        std::vector<double> dec;
        for (Eigen::Index i = 0; i < n; ++i) dec.push_back(svm.decision(z.row(i).transpose()));
        sc.machines.push_back(std::move(svm));
        sc.calibration.push_back(fit_platt(dec, y));
    };
    if (sc.classes.size() == 2) {
        fit(sc.classes[1]);
    } else {
        for (const auto& cls : sc.classes) fit(cls);
    }
    return sc;
}

}  // namespace

ErrorClassifier train_error_classifier(std::span<const ErrorExample> examples, double theta, double c) {
    if (examples.empty()) throw DataError("no error examples");
    if (!(theta >= 0.0 && theta <= 1.0)) throw UsageError("confidence threshold must be within [0, 1]");
    std::map<std::pair<std::string, std::string>, std::vector<const ErrorExample*>> grouped;
    for (const auto& e : examples) grouped[{e.exercise, e.part}].push_back(&e);
    ErrorClassifier out;
    out.theta = theta;
    out.c = c;
    for (const auto& [key, group] : grouped) {
        std::map<std::string, int> counts;
        for (const auto* e : group) ++counts[e->label];
        const std::string where = "exercise '" + key.first + "', part '" + key.second + "'";
        if (counts.size() < 2) throw DataError("only one error class for " + where + "; need at least two");
        for (const auto& [label, count] : counts) {
            if (count < 3) {
                throw DataError("class '" + label + "' of " + where + " has " + std::to_string(count) +
                                " examples; need at least 3");
            }
        }
        out.scopes.emplace(key, train_scope(group, c));
    }
    return out;
}

namespace {

json vector_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from_json(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string classifier_to_json(const ErrorClassifier& classifier) {
    json doc;
    doc["version"] = kClassifierFormatVersion;
    doc["theta"] = classifier.theta;
    doc["C"] = classifier.c;
    json scopes = json::array();
    for (const auto& [key, sc] : classifier.scopes) {
        json machines = json::array();
        for (std::size_t m = 0; m < sc.machines.size(); ++m) {
            machines.push_back({{"weights", vector_to_json(sc.machines[m].w)},
                                {"bias", sc.machines[m].b},
                                {"platt_a", sc.calibration[m].a},
                                {"platt_b", sc.calibration[m].b}});
        }
        scopes.push_back({{"exercise", key.first},
                          {"part", key.second},
                          {"classes", sc.classes},
                          {"feature_mean", vector_to_json(sc.feature_mean)},
                          {"feature_scale", vector_to_json(sc.feature_scale)},
                          {"machines", machines}});
    }
    doc["scopes"] = scopes;
    return doc.dump(1) + "\n";
}

ErrorClassifier classifier_from_json(std::string_view text) {
    try {
        const json doc = json::parse(text.begin(), text.end());
        const int version = doc.at("version").get<int>();
        if (version != kClassifierFormatVersion) {
            throw DataError("classifier format version " + std::to_string(version) + " is not supported");
        }
        ErrorClassifier out;
        out.theta = doc.at("theta").get<double>();
        out.c = doc.value("C", 1.0);
        for (const auto& sj : doc.at("scopes")) {
            ScopeClassifier sc;
            sc.classes = sj.at("classes").get<std::vector<std::string>>();
            sc.feature_mean = vector_from_json(sj.at("feature_mean"));
            sc.feature_scale = vector_from_json(sj.at("feature_scale"));
            for (const auto& mj : sj.at("machines")) {
                LinearSvm svm{vector_from_json(mj.at("weights")), mj.at("bias").get<double>()};
                if (svm.w.size() != sc.feature_mean.size()) throw DataError("classifier weight size mismatch");
                sc.machines.push_back(std::move(svm));
                sc.calibration.push_back({mj.at("platt_a").get<double>(), mj.at("platt_b").get<double>()});
            }
            const std::size_t expected = sc.classes.size() == 2 ? 1 : sc.classes.size();
            if (sc.classes.size() < 2 || sc.machines.size() != expected) {
                throw DataError("classifier scope has inconsistent classes and decision functions");
            }
            if (sc.feature_scale.size() != sc.feature_mean.size()) throw DataError("classifier scale size mismatch");
            out.scopes.emplace(std::pair{sj.at("exercise").get<std::string>(), sj.at("part").get<std::string>()},
                               std::move(sc));
        }
        return out;
    } catch (const json::exception& e) {
        throw DataError(std::string("corrupt classifier file: ") + e.what());
    }
}

void save_classifier(const ErrorClassifier& classifier, const std::filesystem::path& path) {
    write_text_file(path, classifier_to_json(classifier));
}

ErrorClassifier load_classifier(const std::filesystem::path& path) {
    try {
        return classifier_from_json(read_text_file(path));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

AdviceDictionary AdviceDictionary::defaults() {
    Table t;
    const std::map<std::string, std::string> arm = {
        {"arms_too_low", "During part {segment}, raise your {part} higher."},
        {"arm_too_high", "During part {segment}, do not raise your {part} so high."},
        {"elbow_bent", "During part {segment}, do not bend the elbow of your {part} so much."},
    };
    const std::map<std::string, std::string> spine = {
        {"no_lean", "During part {segment}, lean your trunk further to the side."},
    };
    for (const char* exercise : {"arm_raise_rotate", "arm_up_lean", "arms_front_spread"}) {
        t[exercise]["LeftArm"] = arm;
        t[exercise]["RightArm"] = arm;
        t[exercise]["Spine"] = spine;
    }
    return AdviceDictionary(std::move(t));
}

bool AdviceDictionary::contains(const std::string& exercise, const std::string& part, const std::string& label) const {
    const auto e = entries_.find(exercise);
    if (e == entries_.end()) return false;
    const auto p = e->second.find(part);
    return p != e->second.end() && p->second.count(label) > 0;
}

std::string fill_template(const std::string& templ, const std::string& part, std::size_t segment) {
    std::string out;
    for (std::size_t i = 0; i < templ.size();) {
        if (templ.compare(i, 6, "{part}") == 0) {
            out += display_part_name(part);
            i += 6;
        } else if (templ.compare(i, 9, "{segment}") == 0) {
            out += std::to_string(segment);
            i += 9;
        } else {
            out += templ[i++];
        }
    }
    return out;
}

std::string AdviceDictionary::advise(const std::string& exercise, const std::string& part, const std::string& label,
                                     std::size_t segment) const {
    if (!contains(exercise, part, label)) return fill_template(kFallbackAdvice, part, segment);
    return fill_template(entries_.at(exercise).at(part).at(label), part, segment);
}

std::vector<std::string> AdviceDictionary::missing_entries(const ErrorClassifier& classifier) const {
    std::vector<std::string> out;
    for (const auto& [key, sc] : classifier.scopes) {
        for (const auto& label : sc.classes) {
            if (!contains(key.first, key.second, label)) out.push_back(key.first + "/" + key.second + "/" + label);
        }
    }
    return out;
}

std::string dictionary_to_json(const AdviceDictionary& dictionary) {
    return json(dictionary.entries()).dump(1) + "\n";
}

AdviceDictionary dictionary_from_json(std::string_view text) {
    try {
        return AdviceDictionary(json::parse(text.begin(), text.end()).get<AdviceDictionary::Table>());
    } catch (const json::exception& e) {
        throw DataError(std::string("advice dictionary must map exercise -> part -> label -> sentence: ") + e.what());
    }
}

AdviceDictionary load_dictionary(const std::filesystem::path& path) {
    try {
        return dictionary_from_json(read_text_file(path));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void attach_feedback(AssessmentReport& report, const PoseSequence& ideal, const std::string& exercise,
                     const ErrorClassifier& classifier, const AdviceDictionary& dictionary,
                     double score_threshold) {
    const auto residuals = tangent_residuals(ideal, report.warped);
    for (std::size_t s = 0; s < report.segments.size(); ++s) {
        const auto& seg = report.segments[s];
        for (const auto& [part, score] : seg.part_scores) {
            if (score >= score_threshold || !classifier.has_scope(exercise, part)) continue;
            const Eigen::VectorXd feature = aggregate_features(residuals, seg.segment, ideal.joint_set, part);
            const auto prediction = classifier.classify(feature, exercise, part);
            if (!prediction) continue;
            report.errors.push_back({part, s + 1, prediction->label, prediction->confidence,
                                     dictionary.advise(exercise, part, prediction->label, s + 1)});
        }
    }
}

Eigen::VectorXd example_feature(const AssessmentReport& report, const PoseSequence& ideal, const std::string& part,
                                std::optional<std::size_t> segment) {
    const auto residuals = tangent_residuals(ideal, report.warped);
    Segment range{0, residuals.size(), SegmentKind::Transition};
    if (segment) {
        if (*segment == 0 || *segment > report.segments.size()) {
            throw DataError("segment " + std::to_string(*segment) + " does not exist; the sequence has " +
                            std::to_string(report.segments.size()) + " segments");
        }
        range = report.segments[*segment - 1].segment;
    }
    return aggregate_features(residuals, range, ideal.joint_set, part);
}

}  // namespace posecoach
