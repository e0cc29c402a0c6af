#pragma once

#include <optional>
#include <string>
#include <vector>

#include "poselift/geometry.hpp"
#include "poselift/synth.hpp"

namespace poselift {

/// JSON-lines pose container. The first line is a header
/// {version, joint_count, joint_names?, units}; every following line is one
/// record. Units are fixed: pixels for 2D, millimeters for 3D.
struct PoseFileHeader {
  int version = 1;
  int joint_count = 0;
  std::vector<std::string> joint_names;  // optional
  std::string units = "px/mm";
};

struct PoseRecord {
  std::string id;
  int root_index = 0;
  std::optional<Pose2D> pose2d;
  std::optional<Pose3D> pose3d;                  // root_index mirrored into it on read
  std::optional<CameraIntrinsics> camera;
  std::optional<double> canonical_depth;         // written by the lift command
  std::optional<std::vector<Vec3>> relative;     // root-relative pose, mm
};

struct PoseFile {
  PoseFileHeader header;
  std::vector<PoseRecord> records;
};

/// Reads and validates a pose file. Throws std::runtime_error with the
/// offending line number on malformed input, version mismatch, or array
/// lengths that contradict the header.
PoseFile read_pose_file(const std::string& path);

/// Writes header + records. Floating point values round-trip exactly.
void write_pose_file(const PoseFile& file, const std::string& path);

/// Conversions for generated data. to_pose_file keeps full 2D/3D/camera
/// information; scene_samples_from requires each record to carry pose2d,
/// pose3d, and camera, and recomputes the canonical depth.
PoseFile to_pose_file(const std::vector<SceneSample>& samples, const std::string& id_prefix,
                      int joint_count);
std::vector<SceneSample> scene_samples_from(const PoseFile& file);

}  // namespace poselift
