#pragma once

#include <vector>

#include "poselift/geometry.hpp"

namespace poselift {

/// Similarity transform p -> scale * rotation * p + translation with a proper
/// rotation (det = +1, reflections excluded).
struct SimilarityTransform {
  double scale = 1.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }
};

/// Mean per-joint position error after aligning the roots by translation.
/// Averages over all joints; the root contributes zero.
double mpjpe(const Pose3D& pred, const Pose3D& gt);

/// Least-squares similarity alignment of pred onto gt (full Procrustes with
/// scale). Throws std::domain_error for fewer than 3 joints or point sets of
/// rank < 2 (collinear or coincident).
struct ProcrustesResult {
  SimilarityTransform transform;
  Pose3D aligned;  // transform applied to pred
};
ProcrustesResult procrustes_align(const Pose3D& pred, const Pose3D& gt,
                                  bool with_scale = true);

/// Mean per-joint distance after full Procrustes alignment.
double pa_mpjpe(const Pose3D& pred, const Pose3D& gt);

/// Mean Euclidean distance between predicted and ground-truth root positions,
/// plus per-axis mean absolute errors.
struct RootError {
  double mrpe = 0.0;
  Vec3 per_axis = Vec3::Zero();
};
RootError mrpe(const std::vector<Vec3>& pred_roots, const std::vector<Vec3>& gt_roots);

/// Fraction of joints whose distance after root alignment is strictly below
/// the threshold.
double pck3d(const Pose3D& pred, const Pose3D& gt, double threshold_mm);

/// Mean of pck3d over a threshold grid.
double auc(const Pose3D& pred, const Pose3D& gt, const std::vector<double>& thresholds);

/// The conventional grid: 5, 10, ..., 150 mm.
std::vector<double> default_auc_grid();

}  // namespace poselift
