#include "posecoach/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <json.hpp>

#include "posecoach/error.hpp"

namespace posecoach {

namespace {

constexpr double kPi = std::numbers::pi;

// bone lengths in meters for a unit body scale; the spine bone between
// SpineMid and SpineShoulder is the normalization length
constexpr double kLowerSpine = 0.25;
constexpr double kUpperSpine = 0.25;
constexpr double kNeck = 0.07;
constexpr double kHead = 0.15;
constexpr double kShoulderWidth = 0.18;
constexpr double kShoulderDrop = 0.03;
constexpr double kUpperArm = 0.28;
constexpr double kForearm = 0.26;

struct ArmAngles {
    double elevation = 0.1;  // away from hanging straight down
    double plane = 0.0;      // 0 = lateral (abduction), pi/2 = forward (flexion)
    double elbow = 0.1;
};

struct Posture {
    double lean = 0.0;  // trunk side bend towards the subject's right
    double yaw = 0.0;   // trunk rotation about the vertical
    ArmAngles left;
    ArmAngles right;
};

struct Phase {
    std::string name;
    double weight;  // share of the total duration before normalization
    bool moving;
    Posture target;  // posture at the end of the phase
};

Eigen::Matrix3d rot_y(double a) { return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitY()).toRotationMatrix(); }
Eigen::Matrix3d rot_z(double a) { return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitZ()).toRotationMatrix(); }

struct Skeleton {
    std::map<std::string, std::pair<Eigen::Vector3d, Eigen::Matrix3d>> joints;
};

// y up, subject facing +z, subject's left towards +x
Skeleton forward_kinematics(const Posture& p, double scale, const Eigen::Vector3d& root) {
    Skeleton s;
    const Eigen::Matrix3d lower = rot_y(0.3 * p.yaw) * rot_z(0.4 * p.lean);
    const Eigen::Matrix3d upper = rot_y(0.6 * p.yaw) * rot_z(0.8 * p.lean);
    const Eigen::Matrix3d neck = rot_y(p.yaw) * rot_z(p.lean);
    const Eigen::Vector3d up = Eigen::Vector3d::UnitY();
    const Eigen::Vector3d base = root;
    const Eigen::Vector3d mid = base + lower * up * (kLowerSpine * scale);
    const Eigen::Vector3d shoulder_centre = mid + upper * up * (kUpperSpine * scale);
    const Eigen::Vector3d neck_pos = shoulder_centre + neck * up * (kNeck * scale);
    const Eigen::Vector3d head = neck_pos + neck * up * (kHead * scale);
    s.joints["SpineBase"] = {base, lower};
    s.joints["SpineMid"] = {mid, lower};
    s.joints["SpineShoulder"] = {shoulder_centre, upper};
    s.joints["Neck"] = {neck_pos, neck};
    s.joints["Head"] = {head, neck};

    // the shoulder girdle follows the trunk rotation but not the side bend,
    // so a lean error stays within the spine joints
    const Eigen::Matrix3d girdle = rot_y(p.yaw);
    auto arm = [&](const ArmAngles& a, double side, const std::string& suffix) {
        const Eigen::Vector3d shoulder =
            shoulder_centre + girdle * Eigen::Vector3d(side * kShoulderWidth, -kShoulderDrop, 0.0) * scale;
        const Eigen::Matrix3d upper_arm = girdle * rot_y(-side * a.plane) * rot_z(side * a.elevation);
        const Eigen::Vector3d elbow = shoulder + upper_arm * (-up) * (kUpperArm * scale);
        const Eigen::Matrix3d forearm = upper_arm * rot_z(side * a.elbow);
        const Eigen::Vector3d wrist = elbow + forearm * (-up) * (kForearm * scale);
        s.joints["Shoulder" + suffix] = {shoulder, girdle};
        s.joints["Elbow" + suffix] = {elbow, upper_arm};
        s.joints["Wrist" + suffix] = {wrist, forearm};
    };
    arm(p.left, 1.0, "Left");
    arm(p.right, -1.0, "Right");
    return s;
}

double wrist_height(const ArmAngles& a) {
    Posture p;
    p.left = a;
    const Skeleton s = forward_kinematics(p, 1.0, Eigen::Vector3d::Zero());
    return s.joints.at("WristLeft").first.y() - s.joints.at("ShoulderLeft").first.y();
}

ArmAngles blend(const ArmAngles& a, const ArmAngles& b, double u) {
    return {a.elevation + (b.elevation - a.elevation) * u, a.plane + (b.plane - a.plane) * u,
            a.elbow + (b.elbow - a.elbow) * u};
}

Posture blend(const Posture& a, const Posture& b, double u) {
    return {a.lean + (b.lean - a.lean) * u, a.yaw + (b.yaw - a.yaw) * u, blend(a.left, b.left, u),
            blend(a.right, b.right, u)};
}

std::vector<Phase> archetype_phases(Archetype archetype) {
    Posture rest;
    std::vector<Phase> ph;
    switch (archetype) {
        case Archetype::ArmRaiseRotate: {
            Posture up = rest;
            up.left = up.right = {kPi / 2, 0.0, 0.1};
            Posture turned = up;
            turned.yaw = 0.6;
            ph = {{"rest", 1.0, false, rest},    {"raise", 1.5, true, up},         {"hold", 1.0, false, up},
                  {"rotate", 1.2, true, turned}, {"hold", 0.8, false, turned},     {"rotate_back", 1.2, true, up},
                  {"hold", 0.8, false, up},      {"lower", 1.5, true, rest},       {"rest", 1.0, false, rest}};
            break;
        }
        case Archetype::ArmUpLean: {
            Posture up = rest;
            up.left = {2.9, 0.0, 0.1};
            Posture lean = up;
            lean.lean = 0.35;
            lean.left.elevation += 0.8;
            ph = {{"rest", 1.0, false, rest}, {"raise", 1.6, true, up},     {"hold", 1.0, false, up},
                  {"lean", 1.2, true, lean},  {"hold", 1.2, false, lean},   {"return", 1.2, true, up},
                  {"hold", 0.6, false, up},   {"lower", 1.6, true, rest},   {"rest", 1.0, false, rest}};
            break;
        }
        case Archetype::ArmsFrontSpread: {
            rest.left.plane = rest.right.plane = kPi / 2;
            Posture front = rest;
            front.left = front.right = {1.45, kPi / 2, 1.2};
            Posture spread = front;
            spread.left.plane = spread.right.plane = 0.0;
            ph = {{"rest", 1.0, false, rest},    {"lift", 1.5, true, front},    {"hold", 1.2, false, front},
                  {"spread", 1.2, true, spread}, {"hold", 1.2, false, spread},  {"close", 1.2, true, front},
                  {"hold", 0.6, false, front},   {"lower", 1.5, true, rest},    {"rest", 1.0, false, rest}};
            break;
        }
    }
    return ph;
}

bool is_raised(const ArmAngles& a, const ArmAngles& rest) { return a.elevation > rest.elevation + 1e-9; }

/// Lowers every raised arm so that the wrist of the first held raised posture
/// ends up `drop` body units lower. The elevation change is found by bisection
/// and applied to all raised keyframes.
void apply_arms_too_low(std::vector<Phase>& phases, double drop) {
    const Posture rest = phases.front().target;
    const Phase* first_hold = nullptr;
    for (const auto& p : phases) {
        if (!p.moving && (is_raised(p.target.left, rest.left) || is_raised(p.target.right, rest.right))) {
            first_hold = &p;
            break;
        }
    }
    if (!first_hold) return;
    const bool left = is_raised(first_hold->target.left, rest.left);
    const ArmAngles ref = left ? first_hold->target.left : first_hold->target.right;
    const ArmAngles& ref_rest = left ? rest.left : rest.right;
    const double target = wrist_height(ref) - drop * kUpperSpine;
    double lo = 0.0;
    double hi = ref.elevation - ref_rest.elevation;
    auto height_after = [&](double d) {
        ArmAngles a = ref;
        a.elevation -= d;
        return wrist_height(a);
    };
    if (height_after(hi) > target) throw UsageError("arms_too_low magnitude exceeds the reachable range");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (height_after(mid) > target ? lo : hi) = mid;
    }
    const double delta = 0.5 * (lo + hi);
    for (auto& p : phases) {
        if (is_raised(p.target.left, rest.left)) p.target.left.elevation -= delta;
        if (is_raised(p.target.right, rest.right)) p.target.right.elevation -= delta;
    }
}

double* offset_target(Posture& p, const std::string& joint) {
    if (joint == "ShoulderLeft") return &p.left.elevation;
    if (joint == "ShoulderRight") return &p.right.elevation;
    if (joint == "ElbowLeft") return &p.left.elbow;
    if (joint == "ElbowRight") return &p.right.elbow;
    return nullptr;
}

}  // namespace

const char* to_string(Archetype a) {
    switch (a) {
        case Archetype::ArmRaiseRotate: return "arm_raise_rotate";
        case Archetype::ArmUpLean: return "arm_up_lean";
        case Archetype::ArmsFrontSpread: return "arms_front_spread";
    }
    return "";
}

const char* to_string(InjectedError e) {
    switch (e) {
        case InjectedError::None: return "none";
        case InjectedError::ArmsTooLow: return "arms_too_low";
        case InjectedError::NoLean: return "no_lean";
        case InjectedError::ArmOffset: return "arm_offset";
    }
    return "";
}

Archetype archetype_from_string(const std::string& s) {
    for (auto a : {Archetype::ArmRaiseRotate, Archetype::ArmUpLean, Archetype::ArmsFrontSpread}) {
        if (s == to_string(a)) return a;
    }
    throw UsageError("unknown exercise archetype '" + s +
                     "' (expected arm_raise_rotate, arm_up_lean or arms_front_spread)");
}

InjectedError injected_error_from_string(const std::string& s) {
    for (auto e : {InjectedError::None, InjectedError::ArmsTooLow, InjectedError::NoLean, InjectedError::ArmOffset}) {
        if (s == to_string(e)) return e;
    }
    throw UsageError("unknown error injection '" + s + "' (expected none, arms_too_low, no_lean or arm_offset)");
}

void SynthSpec::validate() const {
    if (!(duration > 0.0) || !std::isfinite(duration)) throw UsageError("synth duration must be positive");
    if (!(fps >= 10.0 && fps <= 120.0)) throw UsageError("synth fps must be within [10, 120]");
    if (!(noise >= 0.0) || !std::isfinite(noise)) throw UsageError("synth noise must be non-negative");
    if (!(variation >= 0.0 && variation < 0.5)) throw UsageError("synth variation must be within [0, 0.5)");
    if (!std::isfinite(magnitude)) throw UsageError("synth error magnitude must be finite");
    if (error == InjectedError::ArmsTooLow && !(magnitude > 0.0)) {
        throw UsageError("arms_too_low magnitude must be positive");
    }
    if (error == InjectedError::ArmOffset) {
        Posture p;
        if (!offset_target(p, joint)) {
            throw UsageError("arm_offset joint must be ShoulderLeft, ShoulderRight, ElbowLeft or ElbowRight, got '" +
                             joint + "'");
        }
    }
    if (static_cast<long>(std::lround(duration * fps)) < 2) throw UsageError("synth sequence would have < 2 frames");
}

std::vector<std::size_t> SynthResult::boundaries() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 1; i < phases.size(); ++i) {
        if (phases[i].moving != phases[i - 1].moving) out.push_back(phases[i].start);
    }
    return out;
}

std::string SynthResult::metadata_json(const SynthSpec& spec) const {
    nlohmann::ordered_json doc;
    doc["exercise"] = to_string(spec.archetype);
    doc["duration"] = spec.duration;
    doc["fps"] = spec.fps;
    doc["noise"] = spec.noise;
    doc["error"] = to_string(spec.error);
    doc["magnitude"] = spec.magnitude;
    if (spec.error == InjectedError::ArmOffset) doc["joint"] = spec.joint;
    doc["variation"] = spec.variation;
    doc["seed"] = spec.seed;
    doc["frames"] = sequence.frames.size();
    auto phases_json = nlohmann::ordered_json::array();
    for (const auto& p : phases) {
        phases_json.push_back({{"name", p.name}, {"kind", p.moving ? "transition" : "hold"},
                               {"start", p.start}, {"end", p.end}});
    }
    doc["phases"] = phases_json;
    doc["boundaries"] = boundaries();
    return doc.dump(1) + "\n";
}

SynthResult synthesize(const SynthSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);

    std::vector<Phase> phases = archetype_phases(spec.archetype);
    const Posture rest = phases.front().target;

    // subject and run variation
    const double scale = 1.0 + 0.1 * uniform(rng);
    const Eigen::Vector3d root(0.2 * uniform(rng), -0.3 + 0.1 * uniform(rng), 2.4 + 0.3 * uniform(rng));
    if (spec.variation > 0.0) {
        for (auto& p : phases) p.weight *= std::max(0.2, 1.0 + spec.variation * gauss(rng));
        const double amp_l = 1.0 + spec.variation * 0.3 * gauss(rng);
        const double amp_r = 1.0 + spec.variation * 0.3 * gauss(rng);
        const double amp_trunk = 1.0 + spec.variation * 0.3 * gauss(rng);
        for (auto& p : phases) {
            p.target.left.elevation = rest.left.elevation + (p.target.left.elevation - rest.left.elevation) * amp_l;
            p.target.right.elevation =
                rest.right.elevation + (p.target.right.elevation - rest.right.elevation) * amp_r;
            p.target.lean *= amp_trunk;
            p.target.yaw *= amp_trunk;
        }
    }
    switch (spec.error) {
        case InjectedError::ArmsTooLow: apply_arms_too_low(phases, spec.magnitude); break;
        case InjectedError::NoLean:
            for (auto& p : phases) p.target.lean = 0.0;
            break;
        default: break;
    }

    const auto n = static_cast<std::size_t>(std::lround(spec.duration * spec.fps));
    double total_weight = 0.0;
    for (const auto& p : phases) total_weight += p.weight;

    SynthResult result;
    std::vector<double> phase_begin_time;
    double acc = 0.0;
    for (std::size_t i = 0; i < phases.size(); ++i) {
        const double begin = acc;
        acc += phases[i].weight / total_weight * spec.duration;
        phase_begin_time.push_back(begin);
        PhaseMarker m;
        m.name = phases[i].name;
        m.moving = phases[i].moving;
        m.start = std::min(n, static_cast<std::size_t>(std::lround(begin * spec.fps)));
        m.end = i + 1 == phases.size() ? n : std::min(n, static_cast<std::size_t>(std::lround(acc * spec.fps)));
        result.phases.push_back(m);
    }
    phase_begin_time.push_back(spec.duration);

    RawSequence& seq = result.sequence;
    seq.subject = spec.subject;
    seq.exercise = to_string(spec.archetype);
    seq.fps = spec.fps;
    const double noise_m = spec.noise * kUpperSpine * scale;
    const JointSet body = JointSet::upper_body();
    const auto& names = body.names();
    for (std::size_t f = 0; f < n; ++f) {
        const double t = static_cast<double>(f) / spec.fps;
        std::size_t k = 0;
        while (k + 1 < phases.size() && t >= phase_begin_time[k + 1]) ++k;
        const double len = phase_begin_time[k + 1] - phase_begin_time[k];
        const double u = len > 0.0 ? std::clamp((t - phase_begin_time[k]) / len, 0.0, 1.0) : 1.0;
        const Posture& from = k == 0 ? rest : phases[k - 1].target;
        Posture posture = phases[k].moving ? blend(from, phases[k].target, 0.5 * (1.0 - std::cos(kPi * u)))
                                           : phases[k].target;
        if (spec.error == InjectedError::ArmOffset && !phases[k].moving && k > 0 && k + 1 < phases.size()) {
            const double bump = std::sin(kPi * u);
            *offset_target(posture, spec.joint) += spec.magnitude * bump * bump;
        }
        const Skeleton skel = forward_kinematics(posture, scale, root);
        RawFrame frame;
        frame.timestamp = t;
        for (const auto& name : names) {
            const auto& [pos, rot] = skel.joints.at(name);
            RawJoint j;
            j.position = pos;
            j.orientation = UnitQuaternion::from_rotation(rot);
            if (spec.noise > 0.0) {
                j.position += Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng)) * noise_m;
                const Eigen::Vector3d v(gauss(rng), gauss(rng), gauss(rng));
                j.orientation = quat_exp(j.orientation, v * spec.noise);
            }
            frame.joints.emplace(name, j);
        }
        seq.frames.push_back(std::move(frame));
    }
    return result;
}

}  // namespace posecoach
