#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "posecoach/pose_manifold.hpp"

namespace posecoach {

/// The 25 joint names exported by Kinect v2 skeleton tracking.
const std::vector<std::string>& kinect_joint_names();

/// Ordered joint selection plus a partition of it into named body parts.
class JointSet {
public:
    using Part = std::pair<std::string, std::vector<std::string>>;

    JointSet() = default;
    /// Throws DataError on duplicate names or when the parts do not partition
    /// `names`.
    JointSet(std::vector<std::string> names, std::vector<Part> parts);

    /// SpineBase..Head plus both arms down to the wrists (J = 11), split into
    /// LeftArm, Spine and RightArm.
    static JointSet upper_body();

    const std::vector<std::string>& names() const { return names_; }
    const std::vector<Part>& parts() const { return parts_; }
    std::size_t size() const { return names_.size(); }

    /// Index of `name` in canonical order; throws DataError if absent.
    std::size_t index_of(std::string_view name) const;
    bool contains(std::string_view name) const;
    bool has_part(std::string_view part) const;
    /// Canonical indices of the part's joints, in joint-set order.
    std::vector<std::size_t> part_indices(std::string_view part) const;
    std::vector<std::string> part_names() const;

    /// Subset in canonical order. Parts fully covered by the subset are kept,
    /// partially covered ones are trimmed to the overlap.
    JointSet subset(const std::vector<std::size_t>& indices) const;

    friend bool operator==(const JointSet&, const JointSet&) = default;

private:
    std::vector<std::string> names_;
    std::vector<Part> parts_;
};

/// Human-readable name used in advice sentences: "LeftArm" -> "left arm".
std::string display_part_name(std::string_view part);

struct RawJoint {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    UnitQuaternion orientation;
    bool tracked = true;
};

struct RawFrame {
    double timestamp = 0.0;
    std::map<std::string, RawJoint> joints;
};

/// Frames as read from disk, camera coordinates in meters.
struct RawSequence {
    std::string subject;
    std::string exercise;
    double fps = 30.0;
    /// Positions already expressed in spine-normalized units (written by
    /// `posecoach generate`); normalization is skipped on ingestion.
    bool normalized = false;
    std::vector<RawFrame> frames;
    /// Number of frames containing at least one untracked joint.
    std::size_t untracked_frames = 0;
};

enum class SequenceFormat { Json, Csv };

/// Picks the format from the file extension (".csv" -> Csv, otherwise Json).
SequenceFormat format_from_path(const std::filesystem::path& path);

/// CSV rows carry joints positionally, so CSV parsing needs the joint set.
RawSequence parse_sequence(const std::filesystem::path& path, SequenceFormat format,
                           const JointSet& joints = JointSet::upper_body());
RawSequence parse_sequence_json(std::string_view text);
RawSequence parse_sequence_csv(std::string_view text, const JointSet& joints);

/// Positions relative to SpineShoulder, divided by the SpineShoulder-SpineMid
/// bone length. Throws DataError on a missing joint or a degenerate spine.
HumanPose normalize_pose(const RawFrame& frame, const JointSet& joints);

struct PoseSequence {
    std::string subject;
    std::string exercise;
    double fps = 30.0;
    JointSet joint_set;
    std::vector<double> timestamps;
    std::vector<HumanPose> poses;

    std::size_t size() const { return poses.size(); }
    bool empty() const { return poses.empty(); }
};

/// Per joint, replaces q_t by -q_t whenever <q_{t-1}, q_t> < 0, so the
/// orientation path never jumps between the two covers.
PoseSequence hemisphere_align(PoseSequence seq);

/// Fills untracked joints with the last tracked value (leading frames that
/// cannot be filled are dropped), normalizes and hemisphere-aligns.
PoseSequence to_pose_sequence(const RawSequence& raw, const JointSet& joints);

PoseSequence load_pose_sequence(const std::filesystem::path& path,
                                const JointSet& joints = JointSet::upper_body());

/// Keeps only the frames in [begin, end).
PoseSequence slice(const PoseSequence& seq, std::size_t begin, std::size_t end);

/// Restricts every pose to the joints of `target` (matched by name).
PoseSequence select_joints(const PoseSequence& seq, const JointSet& target);
HumanPose select_joints(const HumanPose& pose, const std::vector<std::size_t>& indices);

/// Canonical JSON text; byte-stable for identical input.
std::string sequence_to_json(const RawSequence& seq);
/// Writes a normalized pose sequence (`"normalized": true`).
RawSequence to_raw_sequence(const PoseSequence& seq);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace posecoach
