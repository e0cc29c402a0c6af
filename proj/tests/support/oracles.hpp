#pragma once

// Independent oracles used by tests only. Nothing here may call into the
// implementation paths it is checking: the alignment search never touches
// procrustes_align, and the finite-difference gradients never touch
// backward_batch.

#include <Eigen/Geometry>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "poselift/geometry.hpp"
#include "poselift/lifter.hpp"

namespace poselift::oracles {

struct GridAlignResult {
  double mean_distance = 0.0;  // mean per-joint distance at the best transform
  double sum_sq = 0.0;         // squared residual at the best transform
};

// Exhaustive similarity alignment of pred onto gt: ZYZ Euler grid over proper
// rotations with the closed-form optimal scale and translation per rotation,
// followed by recursive local grid refinement around the best cell.
inline GridAlignResult grid_align_search(const std::vector<Vec3>& pred,
                                         const std::vector<Vec3>& gt,
                                         double coarse_step = 2.0 * M_PI / 180.0,
                                         int refine_rounds = 7) {
  const int J = static_cast<int>(pred.size());
  Vec3 pm = Vec3::Zero(), gm = Vec3::Zero();
  for (int i = 0; i < J; ++i) {
    pm += pred[static_cast<size_t>(i)];
    gm += gt[static_cast<size_t>(i)];
  }
  pm /= J;
  gm /= J;
  std::vector<Vec3> P(static_cast<size_t>(J)), G(static_cast<size_t>(J));
  double psq = 0.0, gsq = 0.0;
  for (int i = 0; i < J; ++i) {
    P[static_cast<size_t>(i)] = pred[static_cast<size_t>(i)] - pm;
    G[static_cast<size_t>(i)] = gt[static_cast<size_t>(i)] - gm;
    psq += P[static_cast<size_t>(i)].squaredNorm();
    gsq += G[static_cast<size_t>(i)].squaredNorm();
  }

  auto rot = [](double a, double b, double c) {
    return (Eigen::AngleAxisd(a, Vec3::UnitZ()) * Eigen::AngleAxisd(b, Vec3::UnitY()) *
            Eigen::AngleAxisd(c, Vec3::UnitZ()))
        .toRotationMatrix();
  };
  // squared residual with the optimal non-negative scale for this rotation
  auto cost_at = [&](const Mat3& R) {
    double cross = 0.0;
    for (int i = 0; i < J; ++i) {
      cross += G[static_cast<size_t>(i)].dot(R * P[static_cast<size_t>(i)]);
    }
    const double s = cross > 0.0 ? cross / psq : 0.0;
    return s * s * psq - 2.0 * s * cross + gsq;
  };

  double best = std::numeric_limits<double>::infinity();
  double ba = 0.0, bb = 0.0, bc = 0.0;
  const int na = static_cast<int>(std::ceil(2.0 * M_PI / coarse_step));
  const int nb = static_cast<int>(std::ceil(M_PI / coarse_step)) + 1;
#pragma omp parallel
  {
    double tbest = std::numeric_limits<double>::infinity();
    double ta = 0.0, tb = 0.0, tc = 0.0;
#pragma omp for schedule(static)
    for (int ia = 0; ia < na; ++ia) {
      const double a = -M_PI + ia * coarse_step;
      for (int ib = 0; ib < nb; ++ib) {
        const double b = ib * coarse_step;
        const Mat3 AB = (Eigen::AngleAxisd(a, Vec3::UnitZ()) *
                         Eigen::AngleAxisd(std::min(b, M_PI), Vec3::UnitY()))
                            .toRotationMatrix();
        for (int ic = 0; ic < na; ++ic) {
          const double c = -M_PI + ic * coarse_step;
          const Mat3 R = AB * Eigen::AngleAxisd(c, Vec3::UnitZ()).toRotationMatrix();
          const double cost = cost_at(R);
          if (cost < tbest) {
            tbest = cost;
            ta = a;
            tb = std::min(b, M_PI);
            tc = c;
          }
        }
      }
    }
#pragma omp critical
    {
      if (tbest < best || (tbest == best && ta < ba)) {
        best = tbest;
        ba = ta;
        bb = tb;
        bc = tc;
      }
    }
  }

  double step = coarse_step;
  for (int round = 0; round < refine_rounds; ++round) {
    step /= 6.0;
    double rb = best, ra = ba, rbb = bb, rc = bc;
    for (int ia = -6; ia <= 6; ++ia) {
      for (int ib = -6; ib <= 6; ++ib) {
        for (int ic = -6; ic <= 6; ++ic) {
          const double a = ba + ia * step, b = bb + ib * step, c = bc + ic * step;
          const double cost = cost_at(rot(a, b, c));
          if (cost < rb) {
            rb = cost;
            ra = a;
            rbb = b;
            rc = c;
          }
        }
      }
    }
    best = rb;
    ba = ra;
    bb = rbb;
    bc = rc;
  }

  const Mat3 R = rot(ba, bb, bc);
  double cross = 0.0;
  for (int i = 0; i < J; ++i) {
    cross += G[static_cast<size_t>(i)].dot(R * P[static_cast<size_t>(i)]);
  }
  const double s = cross > 0.0 ? cross / psq : 0.0;
  const Vec3 t = gm - s * (R * pm);
  GridAlignResult result;
  result.sum_sq = best;
  double mean = 0.0;
  for (int i = 0; i < J; ++i) {
    mean += (s * (R * pred[static_cast<size_t>(i)]) + t - gt[static_cast<size_t>(i)]).norm();
  }
  result.mean_distance = mean / J;
  return result;
}

// Central finite-difference check of backward_batch over every learnable
// parameter. loss_of must run a deterministic forward (dropout off, frozen
// batch-norm statistics) and return the scalar loss. Relative error uses a
// unit floor so parameters with exactly zero gradient compare by absolute
// difference.
inline double max_param_gradient_error(LifterWeights& weights,
                                       const LifterGradients& analytic,
                                       const std::function<double()>& loss_of,
                                       double h = 1e-5) {
  auto tensors = [](LifterWeights& w) {
    std::vector<std::vector<double>*> t;
    t.push_back(&w.input.weight);
    t.push_back(&w.input.bias);
    for (auto& b : w.blocks) {
      t.push_back(&b.lin1.weight);
      t.push_back(&b.lin1.bias);
      t.push_back(&b.bn1.scale);
      t.push_back(&b.bn1.shift);
      t.push_back(&b.lin2.weight);
      t.push_back(&b.lin2.bias);
      t.push_back(&b.bn2.scale);
      t.push_back(&b.bn2.shift);
    }
    t.push_back(&w.head.weight);
    t.push_back(&w.head.bias);
    return t;
  };
  auto grad_tensors = [](const LifterGradients& g) {
    std::vector<const std::vector<double>*> t;
    t.push_back(&g.input.weight);
    t.push_back(&g.input.bias);
    for (const auto& b : g.blocks) {
      t.push_back(&b.lin1.weight);
      t.push_back(&b.lin1.bias);
      t.push_back(&b.bn1.scale);
      t.push_back(&b.bn1.shift);
      t.push_back(&b.lin2.weight);
      t.push_back(&b.lin2.bias);
      t.push_back(&b.bn2.scale);
      t.push_back(&b.bn2.shift);
    }
    t.push_back(&g.head.weight);
    t.push_back(&g.head.bias);
    return t;
  };

  const auto wt = tensors(weights);
  const auto gt = grad_tensors(analytic);
  double worst = 0.0;
  for (size_t t = 0; t < wt.size(); ++t) {
    std::vector<double>& w = *wt[t];
    const std::vector<double>& g = *gt[t];
    for (size_t i = 0; i < w.size(); ++i) {
      const double saved = w[i];
      w[i] = saved + h;
      const double up = loss_of();
      w[i] = saved - h;
      const double down = loss_of();
      w[i] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double err = std::abs(fd - g[i]) / std::max({1.0, std::abs(fd), std::abs(g[i])});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace poselift::oracles
