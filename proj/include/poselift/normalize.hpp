#pragma once

#include <vector>

#include "poselift/geometry.hpp"

namespace poselift {

/// Output of the two-step input normalization: principal-point shift, then
/// zero-mean unit-RMS scaling. location/scale are the removed statistics.
struct NormalizedInput {
  std::vector<Vec2> normalized;  // (p' - u) / sigma, one entry per joint
  Vec2 location = Vec2::Zero();  // mean u of the shifted pose, pixels
  double scale = 0.0;            // RMS radius sigma of the shifted pose, pixels

  int joint_count() const { return static_cast<int>(normalized.size()); }

  /// Flattens to the network input layout
  /// [p1.x, p1.y, ..., pJ.x, pJ.y, u.x, u.y, sigma] (2J+3 values), or just the
  /// first 2J values when with_loc_scale is false. Weight files depend on this
  /// ordering.
  std::vector<double> flatten(bool with_loc_scale) const;

  /// Same as flatten but appends into an existing buffer.
  void flatten_into(bool with_loc_scale, double* out) const;
};

/// Subtracts the principal point from every joint.
Pose2D shift_principal(const Pose2D& pose, const Vec2& principal);

/// Mean vector and scalar RMS radius of a 2D pose. The scale is a single
/// scalar computed from the full 2D scatter, not per axis.
struct PoseStats {
  Vec2 mean = Vec2::Zero();
  double sigma = 0.0;
};
PoseStats statistics(const Pose2D& pose);

/// Full normalization: shift by the principal point, then remove mean and
/// scale. Throws std::domain_error when the shifted pose has zero scatter
/// (sigma == 0), since the division is undefined and such input cannot come
/// from a real detection.
NormalizedInput normalize_layer(const Pose2D& pose, const Vec2& principal);

}  // namespace poselift
