#include "poselift/errormodel.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "poselift/kernels.hpp"

namespace poselift {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool inside_box(const Vec2& e, double support) {
  return std::abs(e.x()) <= support && std::abs(e.y()) <= support;
}

double gaussian_density(const Vec2& e, const Vec2& mu, const Vec2& sigma) {
  const double dx = (e.x() - mu.x()) / sigma.x();
  const double dy = (e.y() - mu.y()) / sigma.y();
  return std::exp(-0.5 * (dx * dx + dy * dy)) / (kTwoPi * sigma.x() * sigma.y());
}

void validate(const MixtureErrorParams& p) {
  if (!(p.gamma >= 0.0 && p.gamma <= 1.0)) {
    throw std::domain_error("mixture params: gamma outside [0,1]");
  }
  if (!(p.sigma.x() > 0.0 && p.sigma.y() > 0.0)) {
    throw std::domain_error("mixture params: sigma must be positive");
  }
  if (!(p.support > 0.0)) {
    throw std::domain_error("mixture params: support must be positive");
  }
}

}  // namespace

double pdf(const Vec2& e, const MixtureErrorParams& params) {
  const double g = params.gamma * gaussian_density(e, params.mu, params.sigma);
  const double u = inside_box(e, params.support)
                       ? (1.0 - params.gamma) / params.uniform_v()
                       : 0.0;
  return g + u;
}

double marginal_pdf(int axis, double value, const MixtureErrorParams& params) {
  const double mu = axis == 0 ? params.mu.x() : params.mu.y();
  const double sd = axis == 0 ? params.sigma.x() : params.sigma.y();
  const double d = (value - mu) / sd;
  const double g = params.gamma * std::exp(-0.5 * d * d) / (std::sqrt(kTwoPi) * sd);
  const double u = std::abs(value) <= params.support
                       ? (1.0 - params.gamma) / (2.0 * params.support)
                       : 0.0;
  return g + u;
}

double nll(const std::vector<Vec2>& data, const MixtureErrorParams& params) {
  if (data.empty()) {
    throw std::domain_error("nll: empty data");
  }
  validate(params);
  const std::size_t n = data.size();
  std::vector<double> logp(n);
  std::ptrdiff_t bad = -1;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    const double p = pdf(data[static_cast<std::size_t>(i)], params);
    if (!(p > 0.0) || !std::isfinite(p)) {
#pragma omp critical
      if (bad < 0 || i < bad) bad = i;
      logp[static_cast<std::size_t>(i)] = 0.0;
    } else {
      logp[static_cast<std::size_t>(i)] = std::log(p);
    }
  }
  if (bad >= 0) {
    throw std::domain_error("nll: zero density at datum " + std::to_string(bad));
  }
  return -kernels::deterministic_sum(logp.data(), n);
}

double single_gaussian_nll(const std::vector<Vec2>& data) {
  if (data.size() < 2) {
    throw std::domain_error("single_gaussian_nll: need at least 2 points");
  }
  Vec2 mean = Vec2::Zero();
  for (const Vec2& e : data) mean += e;
  mean /= static_cast<double>(data.size());
  Vec2 var = Vec2::Zero();
  for (const Vec2& e : data) {
    const Vec2 d = e - mean;
    var += d.cwiseProduct(d);
  }
  var /= static_cast<double>(data.size());
  if (!(var.x() > 0.0 && var.y() > 0.0)) {
    throw std::domain_error("single_gaussian_nll: zero variance");
  }
  const Vec2 sigma = var.cwiseSqrt();
  double acc = 0.0;
  for (const Vec2& e : data) {
    const double dx = (e.x() - mean.x()) / sigma.x();
    const double dy = (e.y() - mean.y()) / sigma.y();
    acc += std::log(kTwoPi * sigma.x() * sigma.y()) + 0.5 * (dx * dx + dy * dy);
  }
  return acc;
}

MixtureErrorParams init_params(const std::vector<Vec2>& data, double support) {
  if (data.size() < 2) {
    throw std::domain_error("init_params: need at least 2 points");
  }
  if (!(support > 0.0)) {
    throw std::domain_error("init_params: support must be positive");
  }
  MixtureErrorParams p;
  p.support = support;
  p.gamma = 0.9;
  Vec2 mean = Vec2::Zero();
  for (const Vec2& e : data) mean += e;
  mean /= static_cast<double>(data.size());
  Vec2 var = Vec2::Zero();
  for (const Vec2& e : data) {
    const Vec2 d = e - mean;
    var += d.cwiseProduct(d);
  }
  var /= static_cast<double>(data.size());
  if (!(var.x() > 0.0 && var.y() > 0.0)) {
    throw std::domain_error("init_params: zero variance along an axis");
  }
  p.mu = mean;
  p.sigma = var.cwiseSqrt();
  return p;
}

EmResult fit_em(const std::vector<Vec2>& data, const MixtureErrorParams& init,
                const EmOptions& opts) {
  if (data.empty()) {
    throw std::domain_error("fit_em: empty data");
  }
  validate(init);

  const std::size_t n = data.size();
  std::vector<double> ex(n), ey(n), resp(n);
  for (std::size_t i = 0; i < n; ++i) {
    ex[i] = data[i].x();
    ey[i] = data[i].y();
  }
  EmResult result;
  result.params = init;
  result.nll_trace.push_back(nll(data, result.params));

  for (int it = 0; it < opts.max_iters; ++it) {
    const MixtureErrorParams& p = result.params;
    const double udens = (1.0 - p.gamma) / p.uniform_v();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
      const std::size_t k = static_cast<std::size_t>(i);
      const double gn = p.gamma * gaussian_density(data[k], p.mu, p.sigma);
      const double un = inside_box(data[k], p.support) ? udens : 0.0;
      resp[k] = (gn + un) > 0.0 ? gn / (gn + un) : 0.0;
    }

    const double mass = kernels::deterministic_sum(resp.data(), n);
    if (!(mass > 0.0)) {
      result.params.gamma = 0.0;
      result.status = EmStatus::DegenerateUniform;
      result.iterations = it;
      return result;
    }

    MixtureErrorParams next = p;
    next.gamma = mass / static_cast<double>(n);
    next.mu.x() = kernels::deterministic_weighted_sum(resp.data(), ex.data(), n) / mass;
    next.mu.y() = kernels::deterministic_weighted_sum(resp.data(), ey.data(), n) / mass;
    const double vx = kernels::deterministic_weighted_sq_dev(resp.data(), ex.data(), next.mu.x(), n) / mass;
    const double vy = kernels::deterministic_weighted_sq_dev(resp.data(), ey.data(), next.mu.y(), n) / mass;
    if (!(vx > 0.0 && vy > 0.0)) {
      throw std::domain_error("fit_em: Gaussian variance collapsed to zero");
    }
    next.sigma = Vec2(std::sqrt(vx), std::sqrt(vy));

    result.params = next;
    result.iterations = it + 1;
    const double cur = nll(data, next);
    const double prev = result.nll_trace.back();
    result.nll_trace.push_back(cur);
    if (std::abs(prev - cur) < opts.tol) {
      result.status = EmStatus::Converged;
      return result;
    }
  }
  result.status = EmStatus::MaxIterations;
  return result;
}

Vec2 sample_error(const MixtureErrorParams& params, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < params.gamma) {
    std::normal_distribution<double> nx(params.mu.x(), params.sigma.x());
    std::normal_distribution<double> ny(params.mu.y(), params.sigma.y());
    const double x = nx(rng);
    const double y = ny(rng);
    return {x, y};
  }
  std::uniform_real_distribution<double> box(-params.support, params.support);
  const double x = box(rng);
  const double y = box(rng);
  return {x, y};
}

Pose2D perturb_pose(const Pose2D& pose, const ErrorModelSet& models, std::mt19937_64& rng) {
  if (pose.joint_count() != models.joint_count()) {
    throw std::domain_error("perturb_pose: pose has " + std::to_string(pose.joint_count()) +
                            " joints, model set has " + std::to_string(models.joint_count()));
  }
  Pose2D out;
  out.joints.reserve(pose.joints.size());
  for (std::size_t i = 0; i < pose.joints.size(); ++i) {
    out.joints.push_back(pose.joints[i] + sample_error(models.per_joint[i], rng));
  }
  return out;
}

std::string to_json(const ErrorModelSet& set) {
  nlohmann::json j;
  j["version"] = 1;
  j["joint_count"] = set.joint_count();
  j["support"] = set.per_joint.empty() ? 0.0 : set.per_joint.front().support;
  nlohmann::json arr = nlohmann::json::array();
  for (const MixtureErrorParams& p : set.per_joint) {
    arr.push_back({{"gamma", p.gamma},
                   {"mu", {p.mu.x(), p.mu.y()}},
                   {"sigma", {p.sigma.x(), p.sigma.y()}}});
  }
  j["per_joint"] = std::move(arr);
  return j.dump(2);
}

ErrorModelSet error_model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("error model: invalid JSON: ") + e.what());
  }
  if (!j.contains("version") || j["version"].get<int>() != 1) {
    throw std::runtime_error("error model: unsupported version");
  }
  ErrorModelSet set;
  const double support = j.at("support").get<double>();
  for (const auto& e : j.at("per_joint")) {
    MixtureErrorParams p;
    p.support = support;
    p.gamma = e.at("gamma").get<double>();
    p.mu = Vec2(e.at("mu")[0].get<double>(), e.at("mu")[1].get<double>());
    p.sigma = Vec2(e.at("sigma")[0].get<double>(), e.at("sigma")[1].get<double>());
    validate(p);
    set.per_joint.push_back(p);
  }
  if (set.joint_count() != j.at("joint_count").get<int>()) {
    throw std::runtime_error("error model: joint_count does not match per_joint length");
  }
  return set;
}

void save_error_model(const ErrorModelSet& set, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path);
  }
  out << to_json(set) << '\n';
}

ErrorModelSet load_error_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open: " + path);
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return error_model_from_json(ss.str());
}

}  // namespace poselift
