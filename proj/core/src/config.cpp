#include "posecoach/config.hpp"

#include <set>

#include <json.hpp>

#include "posecoach/error.hpp"

namespace posecoach {

using ojson = nlohmann::ordered_json;

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw UsageError("config: " + what);
}

}  // namespace

PipelineConfig config_from_json(std::string_view text, PipelineConfig c) {
    ojson doc;
    try {
        doc = ojson::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw UsageError(std::string("config is not valid JSON: ") + e.what());
    }
    require(doc.is_object(), "top level must be an object");
    static const std::set<std::string> known = {
        "window",         "tau_factor",        "tau",        "strategy",   "K",
        "K_min",          "K_max",             "regularization", "em_tolerance", "em_max_iterations",
        "margin_std_factor", "min_margin",     "error_score_threshold", "theta", "svm_C",
        "part_weights"};
    for (const auto& [key, value] : doc.items()) require(known.count(key) > 0, "unknown key '" + key + "'");

    try {
        auto& a = c.assessment;
        if (doc.contains("window")) a.window = doc["window"].get<std::size_t>();
        if (doc.contains("tau_factor")) a.tau_factor = doc["tau_factor"].get<double>();
        if (doc.contains("tau")) {
            if (doc["tau"].is_null()) {
                a.tau.reset();
            } else {
                a.tau = doc["tau"].get<double>();
            }
        }
        if (doc.contains("strategy")) a.strategy = strategy_from_string(doc["strategy"].get<std::string>());
        if (doc.contains("K")) {
            const auto& k = doc["K"];
            if (k.is_string()) {
                require(k.get<std::string>() == "auto", "K must be an integer or \"auto\"");
                c.k_auto = true;
            } else {
                c.k_auto = false;
                c.em.k = k.get<int>();
            }
        }
        if (doc.contains("K_min")) c.k_min = doc["K_min"].get<int>();
        if (doc.contains("K_max")) c.k_max = doc["K_max"].get<int>();
        if (doc.contains("regularization")) c.em.regularization = doc["regularization"].get<double>();
        if (doc.contains("em_tolerance")) c.em.tolerance = doc["em_tolerance"].get<double>();
        if (doc.contains("em_max_iterations")) c.em.max_iterations = doc["em_max_iterations"].get<int>();
        if (doc.contains("margin_std_factor")) a.margin_std_factor = doc["margin_std_factor"].get<double>();
        if (doc.contains("min_margin")) a.min_margin = doc["min_margin"].get<double>();
        if (doc.contains("error_score_threshold")) a.error_score_threshold = doc["error_score_threshold"].get<double>();
        if (doc.contains("theta")) c.theta = doc["theta"].get<double>();
        if (doc.contains("svm_C")) c.svm_c = doc["svm_C"].get<double>();
        if (doc.contains("part_weights")) a.part_weights = doc["part_weights"].get<std::map<std::string, double>>();
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("config has a value of the wrong type: ") + e.what());
    }

    const auto& a = c.assessment;
    require(a.window >= 2, "window must be at least 2");
    require(a.tau_factor > 0.0, "tau_factor must be positive");
    require(!a.tau || *a.tau > 0.0, "tau must be positive");
    require(c.em.k >= 1, "K must be at least 1");
    require(c.k_min >= 1 && c.k_min <= c.k_max, "need 1 <= K_min <= K_max");
    require(c.em.regularization > 0.0, "regularization must be positive");
    require(c.em.tolerance > 0.0, "em_tolerance must be positive");
    require(c.em.max_iterations >= 1, "em_max_iterations must be at least 1");
    require(a.margin_std_factor >= 0.0, "margin_std_factor must be non-negative");
    require(a.min_margin > 0.0, "min_margin must be positive");
    require(c.theta >= 0.0 && c.theta <= 1.0, "theta must be within [0, 1]");
    require(c.svm_c > 0.0, "svm_C must be positive");
    for (const auto& [part, w] : a.part_weights) require(w >= 0.0, "part weight of '" + part + "' is negative");
    return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const DataError& e) {
        throw UsageError(e.what());
    }
    try {
        return config_from_json(text);
    } catch (const UsageError& e) {
        throw UsageError(path.string() + ": " + e.what());
    }
}

std::string config_to_json(const PipelineConfig& c) {
    ojson doc;
    const auto& a = c.assessment;
    doc["window"] = a.window;
    doc["tau_factor"] = a.tau_factor;
    doc["tau"] = a.tau ? ojson(*a.tau) : ojson(nullptr);
    doc["strategy"] = to_string(a.strategy);
    doc["K"] = c.k_auto ? ojson("auto") : ojson(c.em.k);
    doc["K_min"] = c.k_min;
    doc["K_max"] = c.k_max;
    doc["regularization"] = c.em.regularization;
    doc["em_tolerance"] = c.em.tolerance;
    doc["em_max_iterations"] = c.em.max_iterations;
    doc["margin_std_factor"] = a.margin_std_factor;
    doc["min_margin"] = a.min_margin;
    doc["error_score_threshold"] = a.error_score_threshold;
    doc["theta"] = c.theta;
    doc["svm_C"] = c.svm_c;
    doc["part_weights"] = a.part_weights;
    return doc.dump(1) + "\n";
}

}  // namespace posecoach
