#include "poselift/normalize.hpp"

#include <cmath>
#include <stdexcept>

namespace poselift {

std::vector<double> NormalizedInput::flatten(bool with_loc_scale) const {
  std::vector<double> out(static_cast<size_t>(2 * joint_count() + (with_loc_scale ? 3 : 0)));
  flatten_into(with_loc_scale, out.data());
  return out;
}

void NormalizedInput::flatten_into(bool with_loc_scale, double* out) const {
  size_t k = 0;
  for (const Vec2& p : normalized) {
    out[k++] = p.x();
    out[k++] = p.y();
  }
  if (with_loc_scale) {
    out[k++] = location.x();
    out[k++] = location.y();
    out[k++] = scale;
  }
}

Pose2D shift_principal(const Pose2D& pose, const Vec2& principal) {
  Pose2D out;
  out.joints.reserve(pose.joints.size());
  for (const Vec2& p : pose.joints) {
    out.joints.push_back(p - principal);
  }
  return out;
}

PoseStats statistics(const Pose2D& pose) {
  if (pose.joints.empty()) {
    throw std::domain_error("statistics: empty pose");
  }
  PoseStats s;
  for (const Vec2& p : pose.joints) {
    s.mean += p;
  }
  s.mean /= static_cast<double>(pose.joints.size());
  double sq = 0.0;
  for (const Vec2& p : pose.joints) {
    sq += (p - s.mean).squaredNorm();
  }
  s.sigma = std::sqrt(sq / static_cast<double>(pose.joints.size()));
  return s;
}

NormalizedInput normalize_layer(const Pose2D& pose, const Vec2& principal) {
  const Pose2D shifted = shift_principal(pose, principal);
  const PoseStats s = statistics(shifted);
  if (s.sigma == 0.0) {
    throw std::domain_error("normalize_layer: degenerate pose with zero scatter");
  }
  NormalizedInput out;
  out.location = s.mean;
  out.scale = s.sigma;
  out.normalized.reserve(shifted.joints.size());
  for (const Vec2& p : shifted.joints) {
    out.normalized.push_back((p - s.mean) / s.sigma);
  }
  return out;
}

}  // namespace poselift
