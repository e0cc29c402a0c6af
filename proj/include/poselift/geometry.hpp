#pragma once

#include <Eigen/Core>
#include <vector>

namespace poselift {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Pinhole camera: focal length alpha in pixels, principal point (cx, cy) in pixels.
struct CameraIntrinsics {
  double alpha = 1.0;
  double cx = 0.0;
  double cy = 0.0;
};

/// 2D joints in original-image pixel coordinates.
struct Pose2D {
  std::vector<Vec2> joints;

  int joint_count() const { return static_cast<int>(joints.size()); }
};

/// 3D joints in camera-frame millimeters. root_index selects the reference joint.
struct Pose3D {
  std::vector<Vec3> joints;
  int root_index = 0;

  int joint_count() const { return static_cast<int>(joints.size()); }
  const Vec3& root() const { return joints[static_cast<size_t>(root_index)]; }
};

/// Root coordinates plus root-relative offsets. relative[root_index] is exactly zero.
struct AbsolutePose {
  Vec3 root = Vec3::Zero();
  std::vector<Vec3> relative;
  int root_index = 0;
};

/// Root depth divided by focal length (mm per pixel). Independent of the camera
/// focal length: the same 2D observation pins this value while leaving the
/// metric depth ambiguous until alpha is known.
struct CanonicalDepth {
  double value = 0.0;
};

/// Perspective projection of a camera-frame point. Throws std::domain_error for
/// points at or behind the camera plane (z <= 0).
Vec2 project(const Vec3& point, const CameraIntrinsics& cam);

/// Projects every joint of a pose.
Pose2D project(const Pose3D& pose, const CameraIntrinsics& cam);

/// Recovers the root's lateral camera coordinates from its image position and
/// canonical depth. Needs only the principal point, not the focal length.
Vec2 backproject_root(const Vec2& r, CanonicalDepth depth, const CameraIntrinsics& cam);

/// Promotes a canonical depth to a metric depth: R_z = alpha * value.
/// Throws std::domain_error for alpha <= 0.
double absolute_depth(CanonicalDepth depth, double alpha);

/// Splits a pose into root coordinates and root-relative offsets.
AbsolutePose decompose(const Pose3D& pose);

/// Inverse of decompose. Bit-exact round trip for poses whose joints share the
/// root's magnitude scale (any physically plausible subject).
Pose3D compose(const AbsolutePose& abs);

}  // namespace poselift
