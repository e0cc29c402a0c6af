#include "poselift/geometry.hpp"

#include <stdexcept>

namespace poselift {

Vec2 project(const Vec3& point, const CameraIntrinsics& cam) {
  if (!(point.z() > 0.0)) {
    throw std::domain_error("project: point depth must be positive, got z=" +
                            std::to_string(point.z()));
  }
  return {cam.alpha * point.x() / point.z() + cam.cx,
          cam.alpha * point.y() / point.z() + cam.cy};
}

Pose2D project(const Pose3D& pose, const CameraIntrinsics& cam) {
  Pose2D out;
  out.joints.reserve(pose.joints.size());
  for (const Vec3& p : pose.joints) {
    out.joints.push_back(project(p, cam));
  }
  return out;
}

Vec2 backproject_root(const Vec2& r, CanonicalDepth depth, const CameraIntrinsics& cam) {
  return {(r.x() - cam.cx) * depth.value, (r.y() - cam.cy) * depth.value};
}

double absolute_depth(CanonicalDepth depth, double alpha) {
  if (!(alpha > 0.0)) {
    throw std::domain_error("absolute_depth: focal length must be positive");
  }
  return alpha * depth.value;
}

AbsolutePose decompose(const Pose3D& pose) {
  AbsolutePose out;
  out.root = pose.root();
  out.root_index = pose.root_index;
  out.relative.reserve(pose.joints.size());
  for (const Vec3& p : pose.joints) {
    out.relative.push_back(p - out.root);
  }
  out.relative[static_cast<size_t>(pose.root_index)] = Vec3::Zero();
  return out;
}

Pose3D compose(const AbsolutePose& abs) {
  Pose3D out;
  out.root_index = abs.root_index;
  out.joints.reserve(abs.relative.size());
  for (const Vec3& rel : abs.relative) {
    out.joints.push_back(abs.root + rel);
  }
  return out;
}

}  // namespace poselift
