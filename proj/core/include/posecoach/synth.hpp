#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "posecoach/skeleton_io.hpp"

namespace posecoach {

/// Synthetic rehabilitation exercises generated from a small kinematic model
/// (three-link spine, two-link arms), with optional injected errors. Used to
/// build training and test data with known phase boundaries.
enum class Archetype { ArmRaiseRotate, ArmUpLean, ArmsFrontSpread };
enum class InjectedError { None, ArmsTooLow, NoLean, ArmOffset };

const char* to_string(Archetype a);
const char* to_string(InjectedError e);
Archetype archetype_from_string(const std::string& s);
InjectedError injected_error_from_string(const std::string& s);

struct SynthSpec {
    Archetype archetype = Archetype::ArmRaiseRotate;
    double duration = 10.0;  // seconds
    double fps = 30.0;
    /// Std of additive noise; position noise is in spine lengths, orientation
    /// noise in tangent radians.
    double noise = 0.0;
    InjectedError error = InjectedError::None;
    /// ArmsTooLow: wrist height drop in spine lengths during holds.
    /// ArmOffset: joint angle offset in radians, applied as a bump over every hold.
    double magnitude = 0.3;
    /// ArmOffset target: ShoulderLeft/Right (elevation) or ElbowLeft/Right (flexion).
    std::string joint = "ElbowLeft";
    /// Relative per-run jitter of phase durations and movement amplitudes.
    double variation = 0.0;
    std::uint64_t seed = 1;
    std::string subject = "synthetic";

    /// Throws UsageError on out-of-range fields.
    void validate() const;
};

struct PhaseMarker {
    std::string name;
    std::size_t start = 0;  // first frame
    std::size_t end = 0;    // one past the last frame
    bool moving = false;
};

struct SynthResult {
    RawSequence sequence;
    std::vector<PhaseMarker> phases;

    /// Frames where motion starts or stops.
    std::vector<std::size_t> boundaries() const;
    /// Sidecar JSON: spec fields, phase table and boundary frames.
    std::string metadata_json(const SynthSpec& spec) const;
};

SynthResult synthesize(const SynthSpec& spec);

}  // namespace posecoach
