#include "posecoach/skeleton_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "posecoach/error.hpp"

namespace posecoach {

using nlohmann::json;

const std::vector<std::string>& kinect_joint_names() {
    static const std::vector<std::string> names = {
        "SpineBase",  "SpineMid",      "Neck",       "Head",         "ShoulderLeft",
        "ElbowLeft",  "WristLeft",     "HandLeft",   "ShoulderRight", "ElbowRight",
        "WristRight", "HandRight",     "HipLeft",    "KneeLeft",     "AnkleLeft",
        "FootLeft",   "HipRight",      "KneeRight",  "AnkleRight",   "FootRight",
        "SpineShoulder", "HandTipLeft", "ThumbLeft", "HandTipRight", "ThumbRight"};
    return names;
}

JointSet::JointSet(std::vector<std::string> names, std::vector<Part> parts)
    : names_(std::move(names)), parts_(std::move(parts)) {
    std::set<std::string> seen;
    for (const auto& n : names_) {
        if (!seen.insert(n).second) throw DataError("joint set: duplicate joint '" + n + "'");
    }
    std::set<std::string> covered;
    std::set<std::string> part_seen;
    for (auto& [part, members] : parts_) {
        if (!part_seen.insert(part).second) throw DataError("joint set: duplicate body part '" + part + "'");
        if (members.empty()) throw DataError("joint set: body part '" + part + "' is empty");
        for (const auto& m : members) {
            if (!seen.count(m)) throw DataError("joint set: body part '" + part + "' names unknown joint '" + m + "'");
            if (!covered.insert(m).second) throw DataError("joint set: joint '" + m + "' belongs to two body parts");
        }
        // keep members in canonical order
        std::sort(members.begin(), members.end(), [this](const std::string& a, const std::string& b) {
            return index_of(a) < index_of(b);
        });
    }
    if (!parts_.empty() && covered.size() != names_.size()) {
        throw DataError("joint set: body parts do not cover every joint");
    }
}

JointSet JointSet::upper_body() {
    return JointSet({"SpineBase", "SpineMid", "SpineShoulder", "Neck", "Head", "ShoulderLeft", "ElbowLeft",
                     "WristLeft", "ShoulderRight", "ElbowRight", "WristRight"},
                    {{"LeftArm", {"ShoulderLeft", "ElbowLeft", "WristLeft"}},
                     {"Spine", {"SpineBase", "SpineMid", "SpineShoulder", "Neck", "Head"}},
                     {"RightArm", {"ShoulderRight", "ElbowRight", "WristRight"}}});
}

std::size_t JointSet::index_of(std::string_view name) const {
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw DataError("joint '" + std::string(name) + "' is not in the joint set");
    return static_cast<std::size_t>(it - names_.begin());
}

bool JointSet::contains(std::string_view name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

bool JointSet::has_part(std::string_view part) const {
    return std::any_of(parts_.begin(), parts_.end(), [&](const Part& p) { return p.first == part; });
}

std::vector<std::size_t> JointSet::part_indices(std::string_view part) const {
    for (const auto& [name, members] : parts_) {
        if (name != part) continue;
        std::vector<std::size_t> idx;
        for (const auto& m : members) idx.push_back(index_of(m));
        return idx;
    }
    throw DataError("unknown body part '" + std::string(part) + "'");
}

std::vector<std::string> JointSet::part_names() const {
    std::vector<std::string> out;
    for (const auto& p : parts_) out.push_back(p.first);
    return out;
}

JointSet JointSet::subset(const std::vector<std::size_t>& indices) const {
    std::vector<std::size_t> sorted = indices;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<std::string> names;
    for (auto i : sorted) {
        if (i >= names_.size()) throw DataError("joint index out of range");
        names.push_back(names_[i]);
    }
    std::vector<Part> parts;
    for (const auto& [part, members] : parts_) {
        std::vector<std::string> kept;
        for (const auto& m : members) {
            if (std::find(names.begin(), names.end(), m) != names.end()) kept.push_back(m);
        }
        if (!kept.empty()) parts.emplace_back(part, std::move(kept));
    }
    return JointSet(std::move(names), std::move(parts));
}

std::string display_part_name(std::string_view part) {
    std::string out;
    for (std::size_t i = 0; i < part.size(); ++i) {
        const char c = part[i];
        if (std::isupper(static_cast<unsigned char>(c))) {
            if (i > 0) out.push_back(' ');
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else {
            out.push_back(c);
        }
    }
    return out;
}

SequenceFormat format_from_path(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".csv" ? SequenceFormat::Csv : SequenceFormat::Json;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw DataError("failed writing '" + path.string() + "'");
}

namespace {

void check_timestamps(const std::vector<RawFrame>& frames) {
    for (std::size_t i = 1; i < frames.size(); ++i) {
        if (!(frames[i].timestamp > frames[i - 1].timestamp)) {
            throw DataError("frame " + std::to_string(i) + ": timestamp " + std::to_string(frames[i].timestamp) +
                            " is not after the previous frame");
        }
    }
}

void count_untracked(RawSequence& seq) {
    seq.untracked_frames = 0;
    for (const auto& f : seq.frames) {
        if (std::any_of(f.joints.begin(), f.joints.end(), [](const auto& kv) { return !kv.second.tracked; })) {
            ++seq.untracked_frames;
        }
    }
}

Eigen::Vector3d read_vec3(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3) throw DataError(where + ": expected a 3-element array");
    Eigen::Vector3d v;
    for (int i = 0; i < 3; ++i) {
        if (!j[i].is_number()) throw DataError(where + ": non-numeric coordinate");
        v[i] = j[i].get<double>();
        if (!std::isfinite(v[i])) throw DataError(where + ": non-finite coordinate");
    }
    return v;
}

UnitQuaternion read_quat(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 4) throw DataError(where + ": expected a 4-element quaternion [w,x,y,z]");
    double c[4];
    for (int i = 0; i < 4; ++i) {
        if (!j[i].is_number()) throw DataError(where + ": non-numeric quaternion component");
        c[i] = j[i].get<double>();
    }
    try {
        return UnitQuaternion(c[0], c[1], c[2], c[3]);
    } catch (const DataError& e) {
        throw DataError(where + ": " + e.what());
    }
}

}  // namespace

RawSequence parse_sequence_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw DataError(std::string("malformed JSON sequence: ") + e.what());
    }
    if (!doc.is_object()) throw DataError("sequence file must be a JSON object");
    RawSequence seq;
    seq.subject = doc.value("subject", "");
    seq.exercise = doc.value("exercise", "");
    seq.fps = doc.value("fps", 30.0);
    seq.normalized = doc.value("normalized", false);
    if (!(seq.fps > 0.0)) throw DataError("sequence fps must be positive");
    if (!doc.contains("frames") || !doc["frames"].is_array()) throw DataError("sequence has no 'frames' array");
    const auto& known = kinect_joint_names();
    const std::set<std::string> known_set(known.begin(), known.end());
    std::size_t idx = 0;
    for (const auto& fj : doc["frames"]) {
        const std::string where = "frame " + std::to_string(idx);
        if (!fj.is_object() || !fj.contains("t") || !fj["t"].is_number()) {
            throw DataError(where + ": missing numeric 't'");
        }
        if (!fj.contains("joints") || !fj["joints"].is_object()) throw DataError(where + ": missing 'joints' object");
        RawFrame frame;
        frame.timestamp = fj["t"].get<double>();
        for (const auto& [name, jj] : fj["joints"].items()) {
            if (!known_set.count(name)) continue;
            const std::string jwhere = where + " joint " + name;
            if (!jj.is_object() || !jj.contains("p") || !jj.contains("q")) {
                throw DataError(jwhere + ": expected fields 'p' and 'q'");
            }
            RawJoint joint;
            joint.position = read_vec3(jj["p"], jwhere);
            joint.orientation = read_quat(jj["q"], jwhere);
            joint.tracked = jj.value("tracked", true);
            frame.joints.emplace(name, joint);
        }
        seq.frames.push_back(std::move(frame));
        ++idx;
    }
    if (seq.frames.empty()) throw DataError("empty sequence");
    check_timestamps(seq.frames);
    count_untracked(seq);
    return seq;
}

RawSequence parse_sequence_csv(std::string_view text, const JointSet& joints) {
    RawSequence seq;
    const std::size_t expected = 1 + 7 * joints.size();
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
        if (line.empty()) continue;

        std::vector<std::string_view> cells;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        std::vector<double> values;
        values.reserve(cells.size());
        bool numeric = true;
        for (auto c : cells) {
            while (!c.empty() && c.front() == ' ') c.remove_prefix(1);
            double v = 0.0;
            const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
            if (res.ec != std::errc() || res.ptr != c.data() + c.size()) {
                numeric = false;
                break;
            }
            values.push_back(v);
        }
        if (!numeric) {
            if (seq.frames.empty()) continue;  // header row
            throw DataError("line " + std::to_string(line_no) + ": non-numeric field");
        }
        if (values.size() != expected) {
            throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(expected) +
                            " columns, found " + std::to_string(values.size()));
        }
        RawFrame frame;
        frame.timestamp = values[0];
        for (std::size_t j = 0; j < joints.size(); ++j) {
            const double* v = &values[1 + 7 * j];
            RawJoint joint;
            joint.position = {v[0], v[1], v[2]};
            if (!joint.position.allFinite()) {
                throw DataError("line " + std::to_string(line_no) + " joint " + joints.names()[j] +
                                ": non-finite position");
            }
            try {
                joint.orientation = UnitQuaternion(v[3], v[4], v[5], v[6]);
            } catch (const DataError& e) {
                throw DataError("line " + std::to_string(line_no) + " joint " + joints.names()[j] + ": " + e.what());
            }
            frame.joints.emplace(joints.names()[j], joint);
        }
        seq.frames.push_back(std::move(frame));
    }
    if (seq.frames.empty()) throw DataError("empty sequence");
    if (seq.frames.size() >= 2) {
        const double dt = seq.frames[1].timestamp - seq.frames[0].timestamp;
        if (dt > 0.0) seq.fps = 1.0 / dt;
    }
    check_timestamps(seq.frames);
    count_untracked(seq);
    return seq;
}

RawSequence parse_sequence(const std::filesystem::path& path, SequenceFormat format, const JointSet& joints) {
    const std::string text = read_text_file(path);
    try {
        return format == SequenceFormat::Csv ? parse_sequence_csv(text, joints) : parse_sequence_json(text);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

HumanPose normalize_pose(const RawFrame& frame, const JointSet& joints) {
    auto find = [&](const std::string& name) -> const RawJoint& {
        const auto it = frame.joints.find(name);
        if (it == frame.joints.end()) throw DataError("frame lacks joint '" + name + "'");
        return it->second;
    };
    const Eigen::Vector3d p_ss = find("SpineShoulder").position;
    const Eigen::Vector3d p_sm = find("SpineMid").position;
    const double spine = (p_ss - p_sm).norm();
    if (spine < 1e-6) throw DataError("degenerate spine: SpineShoulder-SpineMid length below 1e-6 m");
    HumanPose pose;
    pose.joints.reserve(joints.size());
    for (const auto& name : joints.names()) {
        const RawJoint& raw = find(name);
        pose.joints.push_back({(raw.position - p_ss) / spine, raw.orientation});
    }
    return pose;
}

PoseSequence hemisphere_align(PoseSequence seq) {
    for (std::size_t t = 1; t < seq.poses.size(); ++t) {
        auto& prev = seq.poses[t - 1];
        auto& cur = seq.poses[t];
        for (std::size_t j = 0; j < cur.joint_count(); ++j) {
            if (prev.joints[j].orientation.dot(cur.joints[j].orientation) < 0.0) {
                cur.joints[j].orientation = cur.joints[j].orientation.negated();
            }
        }
    }
    return seq;
}

PoseSequence to_pose_sequence(const RawSequence& raw, const JointSet& joints) {
    std::vector<std::string> required = joints.names();
    if (!raw.normalized) {
        for (const char* extra : {"SpineShoulder", "SpineMid"}) {
            if (!joints.contains(extra)) required.emplace_back(extra);
        }
    }

    PoseSequence seq;
    seq.subject = raw.subject;
    seq.exercise = raw.exercise;
    seq.fps = raw.fps;
    seq.joint_set = joints;

    std::map<std::string, RawJoint> last;
    for (std::size_t f = 0; f < raw.frames.size(); ++f) {
        const RawFrame& frame = raw.frames[f];
        for (const auto& name : required) {
            const auto it = frame.joints.find(name);
            if (it == frame.joints.end()) {
                throw DataError("frame " + std::to_string(f) + ": missing joint '" + name + "'");
            }
            if (it->second.tracked) last[name] = it->second;
        }
        if (last.size() < required.size()) continue;  // leading frames without a full tracked skeleton
        RawFrame filled;
        filled.timestamp = frame.timestamp;
        filled.joints = last;
        HumanPose pose;
        if (raw.normalized) {
            for (const auto& name : joints.names()) pose.joints.push_back({last[name].position, last[name].orientation});
        } else {
            try {
                pose = normalize_pose(filled, joints);
            } catch (const DataError& e) {
                throw DataError("frame " + std::to_string(f) + ": " + e.what());
            }
        }
        seq.timestamps.push_back(frame.timestamp);
        seq.poses.push_back(std::move(pose));
    }
    if (seq.poses.empty()) throw DataError("empty sequence: no frame with every required joint tracked");
    return hemisphere_align(std::move(seq));
}

PoseSequence load_pose_sequence(const std::filesystem::path& path, const JointSet& joints) {
    const RawSequence raw = parse_sequence(path, format_from_path(path), joints);
    try {
        return to_pose_sequence(raw, joints);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

PoseSequence slice(const PoseSequence& seq, std::size_t begin, std::size_t end) {
    end = std::min(end, seq.size());
    if (begin >= end) throw DataError("slice: empty frame range");
    PoseSequence out;
    out.subject = seq.subject;
    out.exercise = seq.exercise;
    out.fps = seq.fps;
    out.joint_set = seq.joint_set;
    out.timestamps.assign(seq.timestamps.begin() + static_cast<std::ptrdiff_t>(begin),
                          seq.timestamps.begin() + static_cast<std::ptrdiff_t>(end));
    out.poses.assign(seq.poses.begin() + static_cast<std::ptrdiff_t>(begin),
                     seq.poses.begin() + static_cast<std::ptrdiff_t>(end));
    return out;
}

HumanPose select_joints(const HumanPose& pose, const std::vector<std::size_t>& indices) {
    HumanPose out;
    out.joints.reserve(indices.size());
    for (auto i : indices) out.joints.push_back(pose.joints.at(i));
    return out;
}

PoseSequence select_joints(const PoseSequence& seq, const JointSet& target) {
    if (seq.joint_set.names() == target.names()) {
        PoseSequence out = seq;
        out.joint_set = target;
        return out;
    }
    std::vector<std::size_t> idx;
    for (const auto& n : target.names()) idx.push_back(seq.joint_set.index_of(n));
    PoseSequence out;
    out.subject = seq.subject;
    out.exercise = seq.exercise;
    out.fps = seq.fps;
    out.joint_set = target;
    out.timestamps = seq.timestamps;
    out.poses.reserve(seq.size());
    for (const auto& p : seq.poses) out.poses.push_back(select_joints(p, idx));
    return out;
}

std::string sequence_to_json(const RawSequence& seq) {
    json doc;
    doc["subject"] = seq.subject;
    doc["exercise"] = seq.exercise;
    doc["fps"] = seq.fps;
    if (seq.normalized) doc["normalized"] = true;
    json frames = json::array();
    for (const auto& f : seq.frames) {
        json joints = json::object();
        for (const auto& [name, j] : f.joints) {
            const auto& q = j.orientation;
            joints[name] = {{"p", {j.position.x(), j.position.y(), j.position.z()}},
                            {"q", {q.w(), q.x(), q.y(), q.z()}},
                            {"tracked", j.tracked}};
        }
        frames.push_back({{"t", f.timestamp}, {"joints", std::move(joints)}});
    }
    doc["frames"] = std::move(frames);
    return doc.dump(1) + "\n";
}

RawSequence to_raw_sequence(const PoseSequence& seq) {
    RawSequence raw;
    raw.subject = seq.subject;
    raw.exercise = seq.exercise;
    raw.fps = seq.fps;
    raw.normalized = true;
    for (std::size_t t = 0; t < seq.size(); ++t) {
        RawFrame f;
        f.timestamp = seq.timestamps[t];
        for (std::size_t j = 0; j < seq.joint_set.size(); ++j) {
            f.joints[seq.joint_set.names()[j]] = {seq.poses[t].joints[j].position, seq.poses[t].joints[j].orientation,
                                                  true};
        }
        raw.frames.push_back(std::move(f));
    }
    return raw;
}

}  // namespace posecoach
