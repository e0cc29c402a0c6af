#include "poselift/metrics.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <stdexcept>

namespace poselift {

namespace {

void check_compatible(const Pose3D& pred, const Pose3D& gt) {
  if (pred.joint_count() != gt.joint_count()) {
    throw std::domain_error("metrics: joint count mismatch");
  }
  if (pred.root_index != gt.root_index) {
    throw std::domain_error("metrics: root index mismatch");
  }
  if (pred.joints.empty()) {
    throw std::domain_error("metrics: empty pose");
  }
}

}  // namespace

double mpjpe(const Pose3D& pred, const Pose3D& gt) {
  check_compatible(pred, gt);
  const Vec3 shift = gt.root() - pred.root();
  double acc = 0.0;
  for (int i = 0; i < pred.joint_count(); ++i) {
    acc += (pred.joints[static_cast<size_t>(i)] + shift - gt.joints[static_cast<size_t>(i)]).norm();
  }
  return acc / pred.joint_count();
}

ProcrustesResult procrustes_align(const Pose3D& pred, const Pose3D& gt, bool with_scale) {
  check_compatible(pred, gt);
  const int J = pred.joint_count();
  if (J < 3) {
    throw std::domain_error("procrustes_align: need at least 3 joints");
  }

  Vec3 pred_mean = Vec3::Zero(), gt_mean = Vec3::Zero();
  for (int i = 0; i < J; ++i) {
    pred_mean += pred.joints[static_cast<size_t>(i)];
    gt_mean += gt.joints[static_cast<size_t>(i)];
  }
  pred_mean /= J;
  gt_mean /= J;

  Eigen::Matrix3Xd P(3, J), G(3, J);
  for (int i = 0; i < J; ++i) {
    P.col(i) = pred.joints[static_cast<size_t>(i)] - pred_mean;
    G.col(i) = gt.joints[static_cast<size_t>(i)] - gt_mean;
  }

  // Cross-covariance of centered sets; rotation from its SVD with the sign of
  // the smallest singular direction corrected so det(R) = +1.
  const Mat3 M = G * P.transpose();
  Eigen::JacobiSVD<Mat3> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);

  const double pred_sq = P.squaredNorm();
  const double gt_sq = G.squaredNorm();
  const double rank_tol = 1e-9;
  const Vec3 sv = svd.singularValues();
  if (!(pred_sq > 0.0) || !(gt_sq > 0.0) || sv(1) <= rank_tol * sv(0)) {
    throw std::domain_error("procrustes_align: degenerate point set (rank < 2)");
  }

  Mat3 D = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) {
    D(2, 2) = -1.0;
  }
  const Mat3 R = svd.matrixU() * D * svd.matrixV().transpose();

  SimilarityTransform t;
  t.rotation = R;
  t.scale = with_scale ? (sv(0) + sv(1) + D(2, 2) * sv(2)) / pred_sq : 1.0;
  t.translation = gt_mean - t.scale * (R * pred_mean);

  ProcrustesResult result;
  result.transform = t;
  result.aligned.root_index = pred.root_index;
  result.aligned.joints.reserve(static_cast<size_t>(J));
  for (const Vec3& p : pred.joints) {
    result.aligned.joints.push_back(t.apply(p));
  }
  return result;
}

double pa_mpjpe(const Pose3D& pred, const Pose3D& gt) {
  const ProcrustesResult r = procrustes_align(pred, gt);
  double acc = 0.0;
  for (int i = 0; i < gt.joint_count(); ++i) {
    acc += (r.aligned.joints[static_cast<size_t>(i)] - gt.joints[static_cast<size_t>(i)]).norm();
  }
  return acc / gt.joint_count();
}

RootError mrpe(const std::vector<Vec3>& pred_roots, const std::vector<Vec3>& gt_roots) {
  if (pred_roots.size() != gt_roots.size()) {
    throw std::domain_error("mrpe: list length mismatch");
  }
  if (pred_roots.empty()) {
    throw std::domain_error("mrpe: empty lists");
  }
  RootError e;
  for (size_t i = 0; i < pred_roots.size(); ++i) {
    const Vec3 d = pred_roots[i] - gt_roots[i];
    e.mrpe += d.norm();
    e.per_axis += d.cwiseAbs();
  }
  e.mrpe /= static_cast<double>(pred_roots.size());
  e.per_axis /= static_cast<double>(pred_roots.size());
  return e;
}

double pck3d(const Pose3D& pred, const Pose3D& gt, double threshold_mm) {
  check_compatible(pred, gt);
  const Vec3 shift = gt.root() - pred.root();
  int correct = 0;
  for (int i = 0; i < pred.joint_count(); ++i) {
    const double d =
        (pred.joints[static_cast<size_t>(i)] + shift - gt.joints[static_cast<size_t>(i)]).norm();
    if (d < threshold_mm) ++correct;
  }
  return static_cast<double>(correct) / pred.joint_count();
}

double auc(const Pose3D& pred, const Pose3D& gt, const std::vector<double>& thresholds) {
  if (thresholds.empty()) {
    throw std::domain_error("auc: empty threshold grid");
  }
  double acc = 0.0;
  for (double t : thresholds) acc += pck3d(pred, gt, t);
  return acc / static_cast<double>(thresholds.size());
}

std::vector<double> default_auc_grid() {
  std::vector<double> grid;
  for (int t = 5; t <= 150; t += 5) grid.push_back(static_cast<double>(t));
  return grid;
}

}  // namespace poselift
