#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "poselift/geometry.hpp"

namespace poselift {

/// Articulated skeleton: a tree of joints with fixed rest offsets (bone
/// direction times length, mm) and per-joint Euler XYZ angle limits in
/// radians. pairing[i] names the laterally mirrored joint (self for midline
/// joints).
struct SkeletonSpec {
  int joint_count = 0;
  int root_index = 0;
  std::vector<int> parents;                            // -1 for the root
  std::vector<Vec3> offsets;                           // rest offset from parent, mm
  std::vector<std::array<Vec2, 3>> angle_limits;       // per joint: (lo, hi) per Euler axis
  std::vector<int> pairing;                            // involution over joints

  double bone_length(int joint) const { return offsets[static_cast<size_t>(joint)].norm(); }
  void validate() const;  // throws std::domain_error on a malformed spec
};

/// 17-joint human-like skeleton (pelvis root, paired limbs) with plausible
/// bone lengths and moderate angle ranges.
SkeletonSpec default_skeleton();

/// Skeleton JSON round trip (used by the CLI's --spec file).
std::string skeleton_to_json(const SkeletonSpec& spec);
SkeletonSpec skeleton_from_json(const std::string& text);

/// One generated training/evaluation sample. pose2d is the exact projection
/// of pose3d under cam, and canonical_depth equals root depth / alpha.
struct SceneSample {
  Pose3D pose3d;
  CameraIntrinsics cam;
  Pose2D pose2d;
  CanonicalDepth canonical_depth;
};

struct SynthConfig {
  int n = 0;
  std::uint64_t seed = 0;
  Vec2 depth_range = Vec2(2000.0, 8000.0);  // root depth bounds, mm
  Vec2 alpha_range = Vec2(1000.0, 1000.0);  // focal length bounds, px (lo==hi fixes it)
  Vec2 principal = Vec2(500.0, 500.0);      // principal point, px
  Vec2 lateral_tangent = Vec2(0.25, 0.20);  // |X/Z|, |Y/Z| bounds for the root
};

/// Random poses via forward kinematics, random placement, random focal
/// length, exact projection. Sample i draws from a stream seeded by
/// (seed, i), so generation is order- and thread-count-independent.
std::vector<SceneSample> generate_scenes(const SkeletonSpec& spec, const SynthConfig& cfg);

/// Relative pose from forward kinematics only (root at the origin).
std::vector<Vec3> sample_relative_pose(const SkeletonSpec& spec, std::mt19937_64& rng);

/// Places one fixed relative pose at each requested depth (fixed lateral
/// tangents), projecting exactly. Used for depth-sweep evaluations.
std::vector<SceneSample> frozen_posture_scenes(const std::vector<Vec3>& relative,
                                               int root_index,
                                               const std::vector<double>& depths,
                                               double alpha, const Vec2& principal,
                                               const Vec2& lateral_tangent = Vec2(0.05, 0.02));

/// Horizontal mirror: negates camera-frame X, swaps paired joints, and
/// re-derives the 2D pose by projecting the flipped 3D pose so the sample
/// stays exactly self-consistent. Involutive on consistent samples.
SceneSample flip_sample(const SceneSample& sample, const std::vector<int>& pairing);

}  // namespace poselift
