#include "posecoach/report_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "posecoach/error.hpp"

namespace posecoach {

using ojson = nlohmann::ordered_json;

namespace {

SegmentKind kind_from_string(const std::string& s) {
    if (s == "hold") return SegmentKind::Hold;
    if (s == "transition") return SegmentKind::Transition;
    throw DataError("unknown segment kind '" + s + "'");
}

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

/// Red (0) through yellow to green (100).
std::string score_color(double score) {
    const double s = std::clamp(score, 0.0, 100.0) / 100.0;
    const int r = static_cast<int>(std::lround(255.0 * std::min(1.0, 2.0 * (1.0 - s))));
    const int g = static_cast<int>(std::lround(200.0 * std::min(1.0, 2.0 * s)));
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, 40);
    return buf;
}

}  // namespace

std::string report_to_json(const AssessmentReport& report) {
    ojson doc;
    doc["global"] = report.global;
    doc["parts"] = ojson::object();
    for (const auto& [part, score] : report.parts) doc["parts"][part] = score;
    doc["weighted_parts"] = report.weighted_parts;
    doc["start_frame"] = report.start_frame;
    ojson segs = ojson::array();
    for (const auto& s : report.segments) {
        ojson parts = ojson::object();
        for (const auto& [part, score] : s.part_scores) parts[part] = score;
        segs.push_back({{"start", s.segment.start},
                        {"end", s.segment.end},
                        {"kind", to_string(s.segment.kind)},
                        {"score", s.score},
                        {"parts", parts}});
    }
    doc["segments"] = segs;
    ojson errors = ojson::array();
    for (const auto& e : report.errors) {
        errors.push_back({{"part", e.part},
                          {"segment", e.segment},
                          {"label", e.label},
                          {"confidence", e.confidence},
                          {"advice", e.advice}});
    }
    doc["errors"] = errors;
    const auto& d = report.diagnostics;
    ojson part_ll = ojson::object();
    for (const auto& [part, ll] : d.part_mean_loglik) part_ll[part] = ll;
    doc["diagnostics"] = {{"tau", d.tau},
                          {"window", d.window},
                          {"strategy", to_string(d.strategy)},
                          {"input_frames", d.input_frames},
                          {"trimmed_frames", d.trimmed_frames},
                          {"segmentation_start", d.segmentation_start},
                          {"dtw_cost", d.dtw_cost},
                          {"mean_loglik", d.mean_loglik},
                          {"part_mean_loglik", part_ll}};
    return doc.dump(1) + "\n";
}

AssessmentReport report_from_json(std::string_view text) {
    try {
        const ojson doc = ojson::parse(text.begin(), text.end());
        AssessmentReport r;
        r.global = doc.at("global").get<double>();
        for (const auto& [part, score] : doc.at("parts").items()) r.parts[part] = score.get<double>();
        r.weighted_parts = doc.value("weighted_parts", 0.0);
        r.start_frame = doc.at("start_frame").get<std::size_t>();
        for (const auto& sj : doc.at("segments")) {
            SegmentScore s;
            s.segment.start = sj.at("start").get<std::size_t>();
            s.segment.end = sj.at("end").get<std::size_t>();
            s.segment.kind = kind_from_string(sj.at("kind").get<std::string>());
            s.score = sj.at("score").get<double>();
            if (sj.contains("parts")) {
                for (const auto& [part, score] : sj["parts"].items()) s.part_scores[part] = score.get<double>();
            }
            r.segments.push_back(std::move(s));
        }
        for (const auto& ej : doc.at("errors")) {
            r.errors.push_back({ej.at("part").get<std::string>(), ej.at("segment").get<std::size_t>(),
                                ej.at("label").get<std::string>(), ej.at("confidence").get<double>(),
                                ej.at("advice").get<std::string>()});
        }
        if (doc.contains("diagnostics")) {
            const auto& dj = doc["diagnostics"];
            auto& d = r.diagnostics;
            d.tau = dj.value("tau", 0.0);
            d.window = dj.value("window", std::size_t{0});
            d.strategy = strategy_from_string(dj.value("strategy", std::string("transition_hold")));
            d.input_frames = dj.value("input_frames", std::size_t{0});
            d.trimmed_frames = dj.value("trimmed_frames", std::size_t{0});
            d.segmentation_start = dj.value("segmentation_start", std::size_t{0});
            d.dtw_cost = dj.value("dtw_cost", 0.0);
            d.mean_loglik = dj.value("mean_loglik", 0.0);
            if (dj.contains("part_mean_loglik")) {
                for (const auto& [part, ll] : dj["part_mean_loglik"].items()) d.part_mean_loglik[part] = ll.get<double>();
            }
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed report: ") + e.what());
    } catch (const UsageError& e) {
        throw DataError(std::string("malformed report: ") + e.what());
    }
}

std::string report_csv(const AssessmentReport& report) {
    std::ostringstream out;
    out << "frame,loglik";
    for (const auto& [part, ll] : report.part_frame_loglik) out << ",loglik_" << part;
    out << ",sigma\n";
    const std::size_t n = report.frame_loglik.size();
    for (std::size_t t = 0; t < n; ++t) {
        out << t << ',' << fmt("%.17g", report.frame_loglik[t]);
        for (const auto& [part, ll] : report.part_frame_loglik) out << ',' << fmt("%.17g", t < ll.size() ? ll[t] : NAN);
        out << ',' << fmt("%.17g", t < report.sigma.size() ? report.sigma[t] : NAN) << '\n';
    }
    return out.str();
}

std::string report_svg(const AssessmentReport& report) {
    constexpr double kWidth = 800.0;
    constexpr double kLeft = 90.0;
    constexpr double kRowHeight = 28.0;
    constexpr double kTop = 30.0;
    std::size_t frames = 0;
    for (const auto& s : report.segments) frames = std::max(frames, s.segment.end);
    frames = std::max<std::size_t>(frames, 1);
    std::vector<std::string> rows = {"global"};
    for (const auto& [part, score] : report.parts) rows.push_back(part);
    const double height = kTop + kRowHeight * static_cast<double>(rows.size()) + 30.0;
    const double scale = (kWidth - kLeft - 10.0) / static_cast<double>(frames);

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<text x=\"10\" y=\"18\">global score " << fmt("%.1f", report.global) << "%</text>\n";
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const double y = kTop + kRowHeight * static_cast<double>(r);
        out << "<text x=\"10\" y=\"" << y + 17 << "\">" << rows[r] << "</text>\n";
        for (std::size_t i = 0; i < report.segments.size(); ++i) {
            const auto& s = report.segments[i];
            double score = s.score;
            if (r > 0) {
                const auto it = s.part_scores.find(rows[r]);
                score = it == s.part_scores.end() ? 0.0 : it->second;
            }
            const double x = kLeft + scale * static_cast<double>(s.segment.start);
            const double w = scale * static_cast<double>(s.segment.length());
            out << "<rect class=\"segment\" data-segment=\"" << i + 1 << "\" data-kind=\"" << to_string(s.segment.kind)
                << "\" x=\"" << fmt("%.2f", x) << "\" y=\"" << y << "\" width=\"" << fmt("%.2f", w) << "\" height=\""
                << kRowHeight - 4 << "\" fill=\"" << score_color(score) << "\" stroke=\"#333\">"
                << "<title>segment " << i + 1 << " (" << to_string(s.segment.kind) << "): " << fmt("%.1f", score)
                << "%</title></rect>\n";
        }
    }
    out << "<text x=\"" << kLeft << "\" y=\"" << height - 8 << "\">frames 0-" << frames << "</text>\n";
    out << "</svg>\n";
    return out.str();
}

std::string report_text(const AssessmentReport& report) {
    std::ostringstream out;
    out << "global score: " << fmt("%.1f", report.global) << "%\n";
    for (const auto& [part, score] : report.parts) out << "  " << display_part_name(part) << ": " << fmt("%.1f", score) << "%\n";
    out << "motion starts at frame " << report.start_frame << "\n";
    out << "segments:\n";
    for (std::size_t i = 0; i < report.segments.size(); ++i) {
        const auto& s = report.segments[i];
        out << "  " << i + 1 << ". frames " << s.segment.start << "-" << s.segment.end << " (" << to_string(s.segment.kind)
            << "): " << fmt("%.1f", s.score) << "%";
        for (const auto& [part, score] : s.part_scores) out << "  " << part << " " << fmt("%.1f", score) << "%";
        out << "\n";
    }
    if (report.errors.empty()) {
        out << "no errors detected\n";
    } else {
        out << "advice:\n";
        for (const auto& e : report.errors) {
            out << "  [" << e.label << ", confidence " << fmt("%.2f", e.confidence) << "] " << e.advice << "\n";
        }
    }
    return out.str();
}

}  // namespace posecoach
