#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "posecoach/error.hpp"
#include "posecoach/movement_model.hpp"

namespace posecoach {

using nlohmann::json;

namespace {

const std::vector<std::string>& required_sections() {
    static const std::vector<std::string> sections = {"version", "exercise", "joint_set", "body_parts", "T_ref",
                                                      "K",       "components", "calibration"};
    return sections;
}

/// SAX pass that records which top-level sections were opened, so a
/// truncated file can be reported by the section it stops in.
class SectionTracker : public nlohmann::json_sax<json> {
public:
    std::vector<std::string> seen;
    int depth = 0;
    std::string error;

    bool null() override { return true; }
    bool boolean(bool) override { return true; }
    bool number_integer(number_integer_t) override { return true; }
    bool number_unsigned(number_unsigned_t) override { return true; }
    bool number_float(number_float_t, const string_t&) override { return true; }
    bool string(string_t&) override { return true; }
    bool binary(binary_t&) override { return true; }
    bool start_object(std::size_t) override {
        ++depth;
        return true;
    }
    bool end_object() override {
        --depth;
        return true;
    }
    bool start_array(std::size_t) override {
        ++depth;
        return true;
    }
    bool end_array() override {
        --depth;
        return true;
    }
    bool key(string_t& k) override {
        if (depth == 1) seen.push_back(k);
        return true;
    }
    bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception& e) override {
        error = e.what();
        return false;
    }
};

[[noreturn]] void report_truncation(std::string_view text) {
    SectionTracker tracker;
    json::sax_parse(text.begin(), text.end(), &tracker);
    std::string msg = "model file is truncated or malformed";
    if (!tracker.seen.empty()) msg += " inside section '" + tracker.seen.back() + "'";
    std::vector<std::string> missing;
    const std::set<std::string> seen(tracker.seen.begin(), tracker.seen.end());
    for (const auto& s : required_sections()) {
        if (!seen.count(s)) missing.push_back(s);
    }
    if (!missing.empty()) {
        msg += "; missing section";
        msg += missing.size() > 1 ? "s " : " ";
        for (std::size_t i = 0; i < missing.size(); ++i) msg += (i ? ", '" : "'") + missing[i] + "'";
    }
    if (!tracker.error.empty()) msg += " (" + tracker.error + ")";
    throw DataError(msg);
}

const json& section(const json& doc, const char* name) {
    if (!doc.contains(name)) throw DataError(std::string("model file missing section '") + name + "'");
    return doc.at(name);
}

json pose_to_json(const HumanPose& pose) {
    json positions = json::array();
    json orientations = json::array();
    for (const auto& j : pose.joints) {
        positions.push_back({j.position.x(), j.position.y(), j.position.z()});
        const auto& q = j.orientation;
        orientations.push_back({q.w(), q.x(), q.y(), q.z()});
    }
    return {{"positions", positions}, {"orientations", orientations}};
}

HumanPose pose_from_json(const json& j, std::size_t joints) {
    const auto& pos = j.at("positions");
    const auto& ori = j.at("orientations");
    if (pos.size() != joints || ori.size() != joints) throw DataError("mean_pose joint count does not match joint_set");
    HumanPose pose;
    for (std::size_t i = 0; i < joints; ++i) {
        const auto p = pos[i].get<std::vector<double>>();
        const auto q = ori[i].get<std::vector<double>>();
        if (p.size() != 3 || q.size() != 4) throw DataError("mean_pose entry has the wrong arity");
        pose.joints.push_back({{p[0], p[1], p[2]}, UnitQuaternion(q[0], q[1], q[2], q[3])});
    }
    return pose;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, std::size_t dim) {
    if (!j.is_array() || j.size() != dim) throw DataError("covariance has the wrong number of rows");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t r = 0; r < dim; ++r) {
        if (!j[r].is_array() || j[r].size() != dim) throw DataError("covariance has the wrong number of columns");
        for (std::size_t c = 0; c < dim; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
    return m;
}

}  // namespace

std::string model_to_json(const ExerciseModel& model) {
    json doc;
    doc["version"] = kModelFormatVersion;
    doc["exercise"] = model.exercise;
    doc["joint_set"] = model.joint_set.names();
    json parts = json::object();
    for (const auto& [name, members] : model.joint_set.parts()) parts[name] = members;
    doc["body_parts"] = parts;
    doc["T_ref"] = model.t_ref;
    doc["K"] = model.k();
    doc["fps"] = model.fps;
    doc["regularization"] = model.regularization;
    json comps = json::array();
    for (const auto& c : model.components) {
        comps.push_back({{"weight", c.weight},
                         {"mean_time", c.mean_time},
                         {"mean_pose", pose_to_json(c.mean_pose)},
                         {"cov", matrix_to_json(c.cov)}});
    }
    doc["components"] = comps;
    json cal;
    cal["margin_std_factor"] = model.calibration.margin_std_factor;
    cal["min_margin"] = model.calibration.min_margin;
    json scopes = json::object();
    for (const auto& [name, sc] : model.calibration.scopes) {
        scopes[name] = {{"ll_good", sc.anchors.ll_good},
                        {"ll_floor", sc.anchors.ll_floor},
                        {"demo_frame_ll", sc.demo_frame_ll}};
    }
    cal["scopes"] = scopes;
    doc["calibration"] = cal;
    doc["training"] = {{"demo_count", model.training.demo_count},
                       {"em_trace", model.training.em_trace},
                       {"iterations", model.training.iterations},
                       {"converged", model.training.converged}};
    return doc.dump() + "\n";
}

ExerciseModel model_from_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error&) {
        report_truncation(text);
    }
    if (!doc.is_object()) throw DataError("model file must be a JSON object");
    for (const auto& s : required_sections()) section(doc, s.c_str());

    const int version = doc["version"].get<int>();
    if (version != kModelFormatVersion) {
        throw DataError("model format version " + std::to_string(version) + " is not supported (expected " +
                        std::to_string(kModelFormatVersion) + ")");
    }
    try {
        ExerciseModel m;
        m.exercise = doc["exercise"].get<std::string>();
        std::vector<JointSet::Part> parts;
        for (const auto& [name, members] : doc["body_parts"].items()) {
            parts.emplace_back(name, members.get<std::vector<std::string>>());
        }
        // body parts are stored as an object; keep the conventional order when present
        std::vector<JointSet::Part> ordered;
        for (const char* p : {"LeftArm", "Spine", "RightArm"}) {
            for (auto& part : parts) {
                if (part.first == p) ordered.push_back(part);
            }
        }
        for (auto& part : parts) {
            if (std::none_of(ordered.begin(), ordered.end(), [&](const auto& o) { return o.first == part.first; })) {
                ordered.push_back(part);
            }
        }
        m.joint_set = JointSet(doc["joint_set"].get<std::vector<std::string>>(), std::move(ordered));
        m.t_ref = doc["T_ref"].get<std::size_t>();
        m.fps = doc.value("fps", 30.0);
        m.regularization = doc.value("regularization", 1e-6);
        const auto k = doc["K"].get<std::size_t>();
        const auto& comps = doc["components"];
        if (!comps.is_array() || comps.size() != k || k == 0) {
            throw DataError("model has " + std::to_string(comps.size()) + " components, K says " + std::to_string(k));
        }
        double wsum = 0.0;
        for (const auto& cj : comps) {
            MixtureComponent c;
            c.weight = section(cj, "weight").get<double>();
            c.mean_time = section(cj, "mean_time").get<double>();
            c.mean_pose = pose_from_json(section(cj, "mean_pose"), m.joint_set.size());
            c.cov = matrix_from_json(section(cj, "cov"), m.dim());
            if (!(c.weight > 0.0)) throw DataError("component weight must be positive");
            wsum += c.weight;
            m.components.push_back(std::move(c));
        }
        if (std::abs(wsum - 1.0) > 1e-9) {
            throw DataError("component weights sum to " + std::to_string(wsum) + ", expected 1");
        }
        const auto& cal = doc["calibration"];
        m.calibration.margin_std_factor = cal.value("margin_std_factor", 3.0);
        m.calibration.min_margin = cal.value("min_margin", 5.0);
        if (cal.contains("scopes")) {
            for (const auto& [name, sj] : cal["scopes"].items()) {
                ScopeCalibration sc;
                sc.anchors.ll_good = sj.at("ll_good").get<double>();
                sc.anchors.ll_floor = sj.at("ll_floor").get<double>();
                if (!(sc.anchors.ll_floor < sc.anchors.ll_good)) {
                    throw DataError("calibration scope '" + name + "' has ll_floor >= ll_good");
                }
                sc.demo_frame_ll = sj.value("demo_frame_ll", std::vector<std::vector<double>>{});
                m.calibration.scopes.emplace(name, std::move(sc));
            }
        }
        if (doc.contains("training")) {
            const auto& tj = doc["training"];
            m.training.demo_count = tj.value("demo_count", std::size_t{0});
            m.training.em_trace = tj.value("em_trace", std::vector<double>{});
            m.training.iterations = tj.value("iterations", 0);
            m.training.converged = tj.value("converged", false);
        }
        return m;
    } catch (const json::exception& e) {
        throw DataError(std::string("corrupt model file: ") + e.what());
    }
}

void save_model(const ExerciseModel& model, const std::filesystem::path& path) {
    write_text_file(path, model_to_json(model));
}

ExerciseModel load_model(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    try {
        return model_from_json(text);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

}  // namespace posecoach
