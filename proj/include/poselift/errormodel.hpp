#pragma once

#include <random>
#include <string>
#include <vector>

#include "poselift/geometry.hpp"

namespace poselift {

/// Two-component model of 2D joint detection error: a diagonal Gaussian for
/// inlier scatter plus a uniform box for outliers (confusions and misses).
struct MixtureErrorParams {
  double gamma = 0.9;            // Gaussian mixing weight, in [0, 1]
  Vec2 mu = Vec2::Zero();        // Gaussian mean, px
  Vec2 sigma = Vec2::Ones();     // per-axis Gaussian std, px
  double support = 50.0;         // uniform box half-width per axis, px

  // Uniform normalization constant: the box area (2*support)^2.
  double uniform_v() const { return (2.0 * support) * (2.0 * support); }
};

/// One fitted mixture per joint. All joints share the uniform support.
struct ErrorModelSet {
  std::vector<MixtureErrorParams> per_joint;

  int joint_count() const { return static_cast<int>(per_joint.size()); }
};

/// Mixture density at a 2D error. The uniform component contributes only
/// inside the box [-support, support]^2; outside it the density is purely
/// Gaussian.
double pdf(const Vec2& e, const MixtureErrorParams& params);

/// Marginal density of one axis (0 = x, 1 = y): Gaussian marginal plus the
/// 1/(2*support) uniform marginal inside [-support, support].
double marginal_pdf(int axis, double value, const MixtureErrorParams& params);

/// Negative log likelihood of a data set. Throws std::domain_error naming the
/// first datum with zero density.
double nll(const std::vector<Vec2>& data, const MixtureErrorParams& params);

/// NLL of the data under the single Gaussian N(sample mean, sample cov) --
/// the model the mixture is compared against.
double single_gaussian_nll(const std::vector<Vec2>& data);

/// Initial estimate: a single Gaussian fitted to all data (sample mean and
/// per-axis population std), gamma = 0.9, box from the given support.
/// Throws std::domain_error when any axis has zero variance.
MixtureErrorParams init_params(const std::vector<Vec2>& data, double support);

enum class EmStatus { Converged, MaxIterations, DegenerateUniform };

struct EmResult {
  MixtureErrorParams params;
  std::vector<double> nll_trace;  // NLL before iteration 0, then after each
  int iterations = 0;
  EmStatus status = EmStatus::Converged;
};

struct EmOptions {
  int max_iters = 200;
  double tol = 1e-6;  // absolute NLL improvement below which EM stops
};

/// Expectation-maximization over (gamma, mu, sigma) with the uniform box held
/// fixed. The NLL trace is non-increasing. When the Gaussian loses all
/// responsibility mass the fit reports DegenerateUniform with gamma -> 0
/// instead of dividing by zero.
EmResult fit_em(const std::vector<Vec2>& data, const MixtureErrorParams& init,
                const EmOptions& opts = {});

/// Draws one error: Gaussian with probability gamma, otherwise uniform in the
/// box.
Vec2 sample_error(const MixtureErrorParams& params, std::mt19937_64& rng);

/// Displaces every joint by an independent draw from its per-joint model.
/// Throws std::domain_error on joint-count mismatch.
Pose2D perturb_pose(const Pose2D& pose, const ErrorModelSet& models, std::mt19937_64& rng);

/// Versioned JSON serialization:
/// {version, joint_count, support, per_joint: [{gamma, mu, sigma}]}.
std::string to_json(const ErrorModelSet& set);
ErrorModelSet error_model_from_json(const std::string& text);
void save_error_model(const ErrorModelSet& set, const std::string& path);
ErrorModelSet load_error_model(const std::string& path);

}  // namespace poselift
