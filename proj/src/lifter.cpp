#include "poselift/lifter.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "poselift/kernels.hpp"

namespace poselift {

namespace {

double sign(double x) { return (x > 0.0) ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void elementwise_add(std::size_t n, const double* a, const double* b, double* out) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    out[i] = a[i] + b[i];
  }
}

LinearLayer make_linear(int in, int out) {
  LinearLayer l;
  l.in = in;
  l.out = out;
  l.weight.assign(static_cast<std::size_t>(in) * out, 0.0);
  l.bias.assign(static_cast<std::size_t>(out), 0.0);
  return l;
}

BatchNormLayer make_bn(int dim) {
  BatchNormLayer b;
  b.dim = dim;
  b.scale.assign(static_cast<std::size_t>(dim), 1.0);
  b.shift.assign(static_cast<std::size_t>(dim), 0.0);
  b.running_mean.assign(static_cast<std::size_t>(dim), 0.0);
  b.running_var.assign(static_cast<std::size_t>(dim), 1.0);
  return b;
}

void init_linear(LinearLayer& l, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (double& w : l.weight) w = u(rng);
  for (double& b : l.bias) b = u(rng);
}

struct TensorRef {
  std::string name;
  std::vector<double>* data;
  std::vector<int> shape;
};

std::vector<TensorRef> tensor_refs(LifterWeights& w) {
  std::vector<TensorRef> refs;
  auto lin = [&refs](const std::string& prefix, LinearLayer& l) {
    refs.push_back({prefix + ".weight", &l.weight, {l.out, l.in}});
    refs.push_back({prefix + ".bias", &l.bias, {l.out}});
  };
  auto bn = [&refs](const std::string& prefix, BatchNormLayer& b) {
    refs.push_back({prefix + ".scale", &b.scale, {b.dim}});
    refs.push_back({prefix + ".shift", &b.shift, {b.dim}});
    refs.push_back({prefix + ".running_mean", &b.running_mean, {b.dim}});
    refs.push_back({prefix + ".running_var", &b.running_var, {b.dim}});
  };
  lin("input", w.input);
  for (std::size_t i = 0; i < w.blocks.size(); ++i) {
    const std::string p = "block" + std::to_string(i);
    lin(p + ".lin1", w.blocks[i].lin1);
    bn(p + ".bn1", w.blocks[i].bn1);
    lin(p + ".lin2", w.blocks[i].lin2);
    bn(p + ".bn2", w.blocks[i].bn2);
  }
  lin("head", w.head);
  return refs;
}

// Learnable tensors in a fixed order shared by weights and gradient structs.
std::vector<std::vector<double>*> learnable_refs(LifterWeights& w) {
  std::vector<std::vector<double>*> refs;
  refs.push_back(&w.input.weight);
  refs.push_back(&w.input.bias);
  for (auto& b : w.blocks) {
    refs.push_back(&b.lin1.weight);
    refs.push_back(&b.lin1.bias);
    refs.push_back(&b.bn1.scale);
    refs.push_back(&b.bn1.shift);
    refs.push_back(&b.lin2.weight);
    refs.push_back(&b.lin2.bias);
    refs.push_back(&b.bn2.scale);
    refs.push_back(&b.bn2.shift);
  }
  refs.push_back(&w.head.weight);
  refs.push_back(&w.head.bias);
  return refs;
}

std::vector<const std::vector<double>*> grad_refs(const LifterGradients& g) {
  std::vector<const std::vector<double>*> refs;
  refs.push_back(&g.input.weight);
  refs.push_back(&g.input.bias);
  for (const auto& b : g.blocks) {
    refs.push_back(&b.lin1.weight);
    refs.push_back(&b.lin1.bias);
    refs.push_back(&b.bn1.scale);
    refs.push_back(&b.bn1.shift);
    refs.push_back(&b.lin2.weight);
    refs.push_back(&b.lin2.bias);
    refs.push_back(&b.bn2.scale);
    refs.push_back(&b.bn2.shift);
  }
  refs.push_back(&g.head.weight);
  refs.push_back(&g.head.bias);
  return refs;
}

std::vector<std::vector<double>*> grad_refs_mut(LifterGradients& g) {
  std::vector<std::vector<double>*> refs;
  for (const std::vector<double>* p : grad_refs(g)) {
    refs.push_back(const_cast<std::vector<double>*>(p));
  }
  return refs;
}

void update_running(BatchNormLayer& bn, const double* mean, const double* var, double momentum) {
  for (int f = 0; f < bn.dim; ++f) {
    bn.running_mean[static_cast<std::size_t>(f)] =
        (1.0 - momentum) * bn.running_mean[static_cast<std::size_t>(f)] + momentum * mean[f];
    bn.running_var[static_cast<std::size_t>(f)] =
        (1.0 - momentum) * bn.running_var[static_cast<std::size_t>(f)] + momentum * var[f];
  }
}

void fill_mask(std::vector<unsigned char>& mask, std::size_t n, double keep,
               std::mt19937_64& rng) {
  mask.resize(n);
  std::bernoulli_distribution b(keep);
  for (std::size_t i = 0; i < n; ++i) mask[i] = b(rng) ? 1 : 0;
}

}  // namespace

void LifterConfig::validate() const {
  if (joint_count < 2) throw std::domain_error("lifter config: joint_count must be >= 2");
  if (root_index < 0 || root_index >= joint_count) {
    throw std::domain_error("lifter config: root_index out of range");
  }
  if (hidden_dim < 8) throw std::domain_error("lifter config: hidden_dim must be >= 8");
  if (num_blocks < 0) throw std::domain_error("lifter config: num_blocks must be >= 0");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) {
    throw std::domain_error("lifter config: dropout_p must be in [0, 1)");
  }
  if (!(lambda > 0.0)) throw std::domain_error("lifter config: lambda must be positive");
  if (!(bn_momentum > 0.0 && bn_momentum <= 1.0)) {
    throw std::domain_error("lifter config: bn_momentum must be in (0, 1]");
  }
  if (!(bn_epsilon > 0.0)) throw std::domain_error("lifter config: bn_epsilon must be positive");
}

LifterWeights init_weights(const LifterConfig& config, std::mt19937_64& rng) {
  config.validate();
  LifterWeights w;
  w.config = config;
  w.input = make_linear(config.input_dim(), config.hidden_dim);
  init_linear(w.input, rng);
  for (int b = 0; b < config.num_blocks; ++b) {
    ResidualBlock block;
    block.lin1 = make_linear(config.hidden_dim, config.hidden_dim);
    block.bn1 = make_bn(config.hidden_dim);
    block.lin2 = make_linear(config.hidden_dim, config.hidden_dim);
    block.bn2 = make_bn(config.hidden_dim);
    init_linear(block.lin1, rng);
    init_linear(block.lin2, rng);
    w.blocks.push_back(std::move(block));
  }
  w.head = make_linear(config.hidden_dim, config.output_dim());
  init_linear(w.head, rng);
  return w;
}

LifterOutput unpack_output(const double* y, const LifterConfig& config) {
  LifterOutput out;
  out.canonical_depth.value = y[0];
  out.relative.assign(static_cast<std::size_t>(config.joint_count), Vec3::Zero());
  std::size_t k = 1;
  for (int j = 0; j < config.joint_count; ++j) {
    if (j == config.root_index) continue;
    out.relative[static_cast<std::size_t>(j)] = Vec3(y[k], y[k + 1], y[k + 2]);
    k += 3;
  }
  return out;
}

void pack_relative(const std::vector<Vec3>& relative, int root_index, double* out) {
  std::size_t k = 0;
  for (std::size_t j = 0; j < relative.size(); ++j) {
    if (static_cast<int>(j) == root_index) continue;
    out[k++] = relative[j].x();
    out[k++] = relative[j].y();
    out[k++] = relative[j].z();
  }
}

void block_forward(ResidualBlock& block, int B, const double* X, const RunFlags& flags,
                   double dropout_p, double bn_eps, double bn_momentum,
                   std::mt19937_64* rng, double* Y, BlockCache* cache) {
  const int H = block.lin1.in;
  const std::size_t n = static_cast<std::size_t>(B) * H;
  const bool drop = flags.dropout && dropout_p > 0.0;
  if (drop && rng == nullptr) {
    throw std::invalid_argument("block_forward: dropout requires an RNG");
  }
  const double inv_keep = drop ? 1.0 / (1.0 - dropout_p) : 1.0;

  BlockCache local;
  BlockCache& c = cache != nullptr ? *cache : local;
  c.B = B;
  c.batch_stats = flags.batch_stats;
  c.inv_keep = inv_keep;
  c.input.assign(X, X + n);
  c.d1.resize(n);
  c.a1.resize(n);
  c.d2.resize(n);
  c.a2.resize(n);
  c.xhat1.resize(n);
  c.xhat2.resize(n);
  c.mask1.clear();
  c.mask2.clear();

  std::vector<double> z(n), y(n), mean(static_cast<std::size_t>(H)), var(static_cast<std::size_t>(H));

  auto half = [&](LinearLayer& lin, BatchNormLayer& bn, const double* in,
                  std::vector<double>& xhat, std::vector<double>& var_used,
                  std::vector<unsigned char>& mask, std::vector<double>& d,
                  std::vector<double>& a) {
    kernels::linear_forward(B, lin.in, lin.out, in, lin.weight.data(), lin.bias.data(), z.data());
    if (flags.batch_stats) {
      kernels::bn_stats(B, H, z.data(), mean.data(), var.data());
      if (flags.update_running) update_running(bn, mean.data(), var.data(), bn_momentum);
      var_used.assign(var.begin(), var.end());
      kernels::bn_apply(B, H, z.data(), mean.data(), var.data(), bn.scale.data(),
                        bn.shift.data(), bn_eps, y.data(), xhat.data());
    } else {
      var_used.assign(bn.running_var.begin(), bn.running_var.end());
      kernels::bn_apply(B, H, z.data(), bn.running_mean.data(), bn.running_var.data(),
                        bn.scale.data(), bn.shift.data(), bn_eps, y.data(), xhat.data());
    }
    if (drop) {
      fill_mask(mask, n, 1.0 - dropout_p, *rng);
      kernels::dropout_apply(n, y.data(), mask.data(), inv_keep, d.data());
    } else {
      d.assign(y.begin(), y.end());
    }
    kernels::relu_forward(n, d.data(), a.data());
  };

  half(block.lin1, block.bn1, X, c.xhat1, c.var1, c.mask1, c.d1, c.a1);
  half(block.lin2, block.bn2, c.a1.data(), c.xhat2, c.var2, c.mask2, c.d2, c.a2);
  elementwise_add(n, X, c.a2.data(), Y);
}

void block_backward(const ResidualBlock& block, const BlockCache& cache, double bn_eps,
                    const double* dY, double* dX, BlockGrad& grad) {
  const int B = cache.B;
  const int H = block.lin1.in;
  const std::size_t n = static_cast<std::size_t>(B) * H;

  std::vector<double> dd(n), dbn(n), dz(n), da1(n), dres(n);

  // second sub-stack: relu <- dropout <- bn2 <- lin2
  kernels::relu_backward(n, cache.d2.data(), dY, dd.data());
  if (!cache.mask2.empty()) {
    kernels::dropout_apply(n, dd.data(), cache.mask2.data(), cache.inv_keep, dbn.data());
  } else {
    dbn = dd;
  }
  kernels::bn_backward(B, H, dbn.data(), cache.xhat2.data(), cache.var2.data(),
                       block.bn2.scale.data(), bn_eps, cache.batch_stats, dz.data(),
                       grad.bn2.scale.data(), grad.bn2.shift.data());
  kernels::linear_backward(B, H, H, cache.a1.data(), block.lin2.weight.data(), dz.data(),
                           da1.data(), grad.lin2.weight.data(), grad.lin2.bias.data());

  // first sub-stack
  kernels::relu_backward(n, cache.d1.data(), da1.data(), dd.data());
  if (!cache.mask1.empty()) {
    kernels::dropout_apply(n, dd.data(), cache.mask1.data(), cache.inv_keep, dbn.data());
  } else {
    dbn = dd;
  }
  kernels::bn_backward(B, H, dbn.data(), cache.xhat1.data(), cache.var1.data(),
                       block.bn1.scale.data(), bn_eps, cache.batch_stats, dz.data(),
                       grad.bn1.scale.data(), grad.bn1.shift.data());
  kernels::linear_backward(B, H, H, cache.input.data(), block.lin1.weight.data(), dz.data(),
                           dres.data(), grad.lin1.weight.data(), grad.lin1.bias.data());

  elementwise_add(n, dY, dres.data(), dX);
}

void forward_batch(LifterWeights& weights, int B, const double* X, const RunFlags& flags,
                   std::mt19937_64* rng, double* Y, ForwardCache* cache) {
  const LifterConfig& cfg = weights.config;
  if (B <= 0) throw std::invalid_argument("forward_batch: batch must be positive");
  const int din = cfg.input_dim();
  const int H = cfg.hidden_dim;
  const int dout = cfg.output_dim();
  const std::size_t nh = static_cast<std::size_t>(B) * H;

  if (cache != nullptr) {
    cache->B = B;
    cache->flags = flags;
    cache->X.assign(X, X + static_cast<std::size_t>(B) * din);
    cache->blocks.resize(weights.blocks.size());
  }

  std::vector<double> cur(nh), next(nh);
  kernels::linear_forward(B, din, H, X, weights.input.weight.data(), weights.input.bias.data(),
                          cur.data());
  if (cache != nullptr) cache->z0 = cur;

  for (std::size_t b = 0; b < weights.blocks.size(); ++b) {
    block_forward(weights.blocks[b], B, cur.data(), flags, cfg.dropout_p, cfg.bn_epsilon,
                  cfg.bn_momentum, rng, next.data(),
                  cache != nullptr ? &cache->blocks[b] : nullptr);
    cur.swap(next);
  }

  if (cache != nullptr) cache->hin = cur;
  kernels::linear_forward(B, H, dout, cur.data(), weights.head.weight.data(),
                          weights.head.bias.data(), Y);
  if (cache != nullptr) cache->Y.assign(Y, Y + static_cast<std::size_t>(B) * dout);
}

LifterOutput forward(const NormalizedInput& input, const LifterWeights& weights) {
  const LifterConfig& cfg = weights.config;
  if (input.joint_count() != cfg.joint_count) {
    throw std::domain_error("forward: input joint count does not match the model");
  }
  const std::vector<double> x = input.flatten(cfg.use_loc_scale);
  std::vector<double> y(static_cast<std::size_t>(cfg.output_dim()));
  // Evaluation mode touches no mutable state.
  forward_batch(const_cast<LifterWeights&>(weights), 1, x.data(), eval_flags(), nullptr,
                y.data(), nullptr);
  return unpack_output(y.data(), cfg);
}

LifterGradients make_gradients(const LifterConfig& config) {
  LifterGradients g;
  auto lin = [](int in, int out) {
    LinearGrad l;
    l.weight.assign(static_cast<std::size_t>(in) * out, 0.0);
    l.bias.assign(static_cast<std::size_t>(out), 0.0);
    return l;
  };
  auto bn = [](int dim) {
    BnGrad b;
    b.scale.assign(static_cast<std::size_t>(dim), 0.0);
    b.shift.assign(static_cast<std::size_t>(dim), 0.0);
    return b;
  };
  g.input = lin(config.input_dim(), config.hidden_dim);
  for (int b = 0; b < config.num_blocks; ++b) {
    BlockGrad bg;
    bg.lin1 = lin(config.hidden_dim, config.hidden_dim);
    bg.bn1 = bn(config.hidden_dim);
    bg.lin2 = lin(config.hidden_dim, config.hidden_dim);
    bg.bn2 = bn(config.hidden_dim);
    g.blocks.push_back(std::move(bg));
  }
  g.head = lin(config.hidden_dim, config.output_dim());
  return g;
}

void backward_batch(const LifterWeights& weights, const ForwardCache& cache,
                    const double* dY, LifterGradients& grads) {
  if (cache.B <= 0 || cache.X.empty()) {
    throw std::logic_error("backward_batch: missing forward cache");
  }
  const LifterConfig& cfg = weights.config;
  const int B = cache.B;
  const int H = cfg.hidden_dim;
  const std::size_t nh = static_cast<std::size_t>(B) * H;

  std::vector<double> dcur(nh), dprev(nh);
  kernels::linear_backward(B, H, cfg.output_dim(), cache.hin.data(), weights.head.weight.data(),
                           dY, dcur.data(), grads.head.weight.data(), grads.head.bias.data());

  for (std::size_t b = weights.blocks.size(); b-- > 0;) {
    block_backward(weights.blocks[b], cache.blocks[b], cfg.bn_epsilon, dcur.data(),
                   dprev.data(), grads.blocks[b]);
    dcur.swap(dprev);
  }

  kernels::linear_backward(B, cfg.input_dim(), H, cache.X.data(), weights.input.weight.data(),
                           dcur.data(), nullptr, grads.input.weight.data(),
                           grads.input.bias.data());
}

double lift_loss(const LifterOutput& pred, double gt_root_depth_mm, double alpha,
                 const std::vector<Vec3>& gt_relative, double lambda) {
  if (!(alpha > 0.0)) throw std::domain_error("lift_loss: alpha must be positive");
  if (pred.relative.size() != gt_relative.size()) {
    throw std::domain_error("lift_loss: joint count mismatch");
  }
  double loss = std::abs(pred.canonical_depth.value - gt_root_depth_mm / alpha);
  double pose = 0.0;
  for (std::size_t j = 0; j < gt_relative.size(); ++j) {
    pose += (pred.relative[j] - gt_relative[j]).cwiseAbs().sum();
  }
  return loss + lambda * pose;
}

double batch_loss_grad(int B, int output_dim, const double* Y, const double* targets,
                       double lambda, double* dY) {
  std::vector<double> per_sample(static_cast<std::size_t>(B));
#pragma omp parallel for schedule(static)
  for (int n = 0; n < B; ++n) {
    const std::size_t row = static_cast<std::size_t>(n) * output_dim;
    const double d0 = Y[row] - targets[row];
    double acc = std::abs(d0);
    if (dY != nullptr) dY[row] = sign(d0) / B;
    for (int k = 1; k < output_dim; ++k) {
      const double d = Y[row + k] - targets[row + k];
      acc += lambda * std::abs(d);
      if (dY != nullptr) dY[row + k] = lambda * sign(d) / B;
    }
    per_sample[static_cast<std::size_t>(n)] = acc;
  }
  return kernels::deterministic_sum(per_sample.data(), static_cast<std::size_t>(B)) / B;
}

RmspropState make_rmsprop_state(const LifterConfig& config) {
  return RmspropState{make_gradients(config)};
}

void rmsprop_step(LifterWeights& weights, const LifterGradients& grads, RmspropState& state,
                  double lr, double rho, double eps) {
  const auto wr = learnable_refs(weights);
  const auto gr = grad_refs(grads);
  const auto vr = grad_refs_mut(state.v);
  if (wr.size() != gr.size() || wr.size() != vr.size()) {
    throw std::logic_error("rmsprop_step: tensor list mismatch");
  }
  for (std::size_t t = 0; t < wr.size(); ++t) {
    std::vector<double>& w = *wr[t];
    const std::vector<double>& g = *gr[t];
    std::vector<double>& v = *vr[t];
    if (w.size() != g.size() || w.size() != v.size()) {
      throw std::logic_error("rmsprop_step: tensor shape mismatch");
    }
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(w.size()); ++i) {
      v[i] = rho * v[i] + (1.0 - rho) * g[i] * g[i];
      w[i] -= lr * g[i] / (std::sqrt(v[i]) + eps);
    }
  }
}

double TrainSchedule::lr_at(int epoch, int total_epochs) const {
  const int drop = lr_drop_epoch >= 0 ? lr_drop_epoch : (2 * total_epochs) / 3;
  double base = epoch >= drop ? lr_late : lr;
  if (lr_exp_decay != 1.0) base *= std::pow(lr_exp_decay, epoch);
  return base;
}

namespace {

// Normalized input row and target row for one (possibly augmented) sample.
void fill_rows(const SceneSample& s, const LifterConfig& cfg, double* xrow, double* trow) {
  const NormalizedInput ni =
      normalize_layer(s.pose2d, Vec2(s.cam.cx, s.cam.cy));
  ni.flatten_into(cfg.use_loc_scale, xrow);
  if (trow != nullptr) {
    trow[0] = s.pose3d.root().z() / s.cam.alpha;
    pack_relative(decompose(s.pose3d).relative, cfg.root_index, trow + 1);
  }
}

double eval_epoch_loss(LifterWeights& weights, const std::vector<double>& X,
                       const std::vector<double>& targets, int N, int batch, double lambda) {
  const int din = weights.config.input_dim();
  const int dout = weights.config.output_dim();
  std::vector<double> losses(static_cast<std::size_t>(N));
  std::vector<double> Y(static_cast<std::size_t>(batch) * dout);
  for (int lo = 0; lo < N; lo += batch) {
    const int b = std::min(batch, N - lo);
    forward_batch(weights, b, X.data() + static_cast<std::size_t>(lo) * din, eval_flags(),
                  nullptr, Y.data(), nullptr);
    for (int n = 0; n < b; ++n) {
      const std::size_t yrow = static_cast<std::size_t>(n) * dout;
      const std::size_t trow = static_cast<std::size_t>(lo + n) * dout;
      double acc = std::abs(Y[yrow] - targets[trow]);
      for (int k = 1; k < dout; ++k) {
        acc += lambda * std::abs(Y[yrow + k] - targets[trow + k]);
      }
      losses[static_cast<std::size_t>(lo + n)] = acc;
    }
  }
  return kernels::deterministic_sum(losses.data(), static_cast<std::size_t>(N)) / N;
}

}  // namespace

TrainResult train(const std::vector<SceneSample>& data, const LifterConfig& config,
                  const TrainSchedule& schedule) {
  config.validate();
  if (data.empty()) throw std::domain_error("train: empty dataset");
  if (schedule.epochs <= 0 || schedule.batch_size <= 0) {
    throw std::domain_error("train: epochs and batch_size must be positive");
  }
  for (const SceneSample& s : data) {
    if (s.pose3d.joint_count() != config.joint_count ||
        s.pose2d.joint_count() != config.joint_count) {
      throw std::domain_error("train: sample joint count does not match the config");
    }
    if (s.pose3d.root_index != config.root_index) {
      throw std::domain_error("train: sample root index does not match the config");
    }
    if (!(s.cam.alpha > 0.0)) throw std::domain_error("train: sample without focal length");
  }
  if (schedule.flip_augment &&
      static_cast<int>(config.flip_pairing.size()) != config.joint_count) {
    throw std::domain_error("train: flip augmentation requires a full pairing table");
  }
  if (schedule.perturb_model != nullptr &&
      schedule.perturb_model->joint_count() != config.joint_count) {
    throw std::domain_error("train: error model joint count does not match the config");
  }

  const int N = static_cast<int>(data.size());
  const int din = config.input_dim();
  const int dout = config.output_dim();
  const int batch = schedule.batch_size;

  std::mt19937_64 rng(config.seed);
  TrainResult result;
  result.weights = init_weights(config, rng);
  LifterGradients grads = make_gradients(config);
  RmspropState state = make_rmsprop_state(config);

  // Clean (unaugmented) inputs and targets, reused for the per-epoch loss log
  // and for batches that need no recomputation.
  std::vector<double> clean_X(static_cast<std::size_t>(N) * din);
  std::vector<double> targets(static_cast<std::size_t>(N) * dout);
  for (int i = 0; i < N; ++i) {
    fill_rows(data[static_cast<std::size_t>(i)], config,
              clean_X.data() + static_cast<std::size_t>(i) * din,
              targets.data() + static_cast<std::size_t>(i) * dout);
  }

  const bool augment = schedule.flip_augment || schedule.perturb_model != nullptr;
  std::vector<int> order(static_cast<std::size_t>(N));
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> Xb(static_cast<std::size_t>(batch) * din);
  std::vector<double> Tb(static_cast<std::size_t>(batch) * dout);
  std::vector<double> Yb(static_cast<std::size_t>(batch) * dout);
  std::vector<double> dYb(static_cast<std::size_t>(batch) * dout);
  ForwardCache cache;
  std::bernoulli_distribution coin(0.5);

  for (int epoch = 0; epoch < schedule.epochs; ++epoch) {
    result.log.epoch_loss.push_back(
        eval_epoch_loss(result.weights, clean_X, targets, N, batch, config.lambda));
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = schedule.lr_at(epoch, schedule.epochs);

    for (int lo = 0; lo < N; lo += batch) {
      const int b = std::min(batch, N - lo);
      for (int n = 0; n < b; ++n) {
        const int idx = order[static_cast<std::size_t>(lo + n)];
        double* xrow = Xb.data() + static_cast<std::size_t>(n) * din;
        double* trow = Tb.data() + static_cast<std::size_t>(n) * dout;
        if (!augment) {
          std::memcpy(xrow, clean_X.data() + static_cast<std::size_t>(idx) * din,
                      sizeof(double) * static_cast<std::size_t>(din));
          std::memcpy(trow, targets.data() + static_cast<std::size_t>(idx) * dout,
                      sizeof(double) * static_cast<std::size_t>(dout));
          continue;
        }
        SceneSample s = data[static_cast<std::size_t>(idx)];
        if (schedule.flip_augment && coin(rng)) {
          s = flip_sample(s, config.flip_pairing);
        }
        if (schedule.perturb_model != nullptr) {
          s.pose2d = perturb_pose(s.pose2d, *schedule.perturb_model, rng);
        }
        fill_rows(s, config, xrow, trow);
      }

      forward_batch(result.weights, b, Xb.data(), train_flags(), &rng, Yb.data(), &cache);
      const double loss =
          batch_loss_grad(b, dout, Yb.data(), Tb.data(), config.lambda, dYb.data());
      if (!std::isfinite(loss)) {
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                 ", batch " + std::to_string(lo / batch));
      }
      backward_batch(result.weights, cache, dYb.data(), grads);
      rmsprop_step(result.weights, grads, state, lr, schedule.rho, schedule.eps);
    }
  }
  result.log.epoch_loss.push_back(
      eval_epoch_loss(result.weights, clean_X, targets, N, batch, config.lambda));
  return result;
}

LifterOutput lift_pose(const Pose2D& pose, const Vec2& principal, const LifterWeights& weights) {
  return forward(normalize_layer(pose, principal), weights);
}

AbsolutePose lift_absolute(const Pose2D& pose, const CameraIntrinsics& cam,
                           const LifterWeights& weights) {
  const LifterOutput out = lift_pose(pose, Vec2(cam.cx, cam.cy), weights);
  const Vec2 root2d = pose.joints[static_cast<std::size_t>(weights.config.root_index)];
  const Vec2 lateral = backproject_root(root2d, out.canonical_depth, cam);
  AbsolutePose abs;
  abs.root = Vec3(lateral.x(), lateral.y(), absolute_depth(out.canonical_depth, cam.alpha));
  abs.relative = out.relative;
  abs.root_index = weights.config.root_index;
  return abs;
}

// ------------------------------------------------------------- weight files

namespace {
constexpr char kMagic[4] = {'P', 'L', 'W', 'T'};
constexpr std::uint32_t kWeightVersion = 1;

nlohmann::json config_to_json(const LifterConfig& c) {
  return {{"joint_count", c.joint_count},
          {"root_index", c.root_index},
          {"hidden_dim", c.hidden_dim},
          {"num_blocks", c.num_blocks},
          {"dropout_p", c.dropout_p},
          {"use_loc_scale", c.use_loc_scale},
          {"lambda", c.lambda},
          {"bn_momentum", c.bn_momentum},
          {"bn_epsilon", c.bn_epsilon},
          {"seed", c.seed},
          {"flip_pairing", c.flip_pairing}};
}

LifterConfig config_from_json(const nlohmann::json& j) {
  LifterConfig c;
  c.joint_count = j.at("joint_count").get<int>();
  c.root_index = j.at("root_index").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.num_blocks = j.at("num_blocks").get<int>();
  c.dropout_p = j.at("dropout_p").get<double>();
  c.use_loc_scale = j.at("use_loc_scale").get<bool>();
  c.lambda = j.at("lambda").get<double>();
  c.bn_momentum = j.at("bn_momentum").get<double>();
  c.bn_epsilon = j.at("bn_epsilon").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.flip_pairing = j.at("flip_pairing").get<std::vector<int>>();
  return c;
}
}  // namespace

void save_weights(const LifterWeights& weights, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);

  auto& mutable_weights = const_cast<LifterWeights&>(weights);
  const std::vector<TensorRef> refs = tensor_refs(mutable_weights);

  nlohmann::json header;
  header["config"] = config_to_json(weights.config);
  nlohmann::json tensors = nlohmann::json::array();
  for (const TensorRef& r : refs) {
    tensors.push_back({{"name", r.name}, {"shape", r.shape}});
  }
  header["tensors"] = std::move(tensors);
  const std::string htext = header.dump();

  out.write(kMagic, 4);
  const std::uint32_t version = kWeightVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const std::uint64_t hlen = htext.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
  for (const TensorRef& r : refs) {
    out.write(reinterpret_cast<const char*>(r.data->data()),
              static_cast<std::streamsize>(r.data->size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("failed writing weight file: " + path);
}

LifterWeights load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);

  char magic[4];
  std::uint32_t version = 0;
  std::uint64_t hlen = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("not a weight file: " + path);
  }
  if (version != kWeightVersion) {
    throw std::runtime_error("unsupported weight file version " + std::to_string(version));
  }
  std::string htext(hlen, '\0');
  in.read(htext.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw std::runtime_error("truncated weight file header: " + path);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(htext);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("corrupt weight file header: ") + e.what());
  }

  LifterWeights w;
  w.config = config_from_json(header.at("config"));
  w.config.validate();
  std::mt19937_64 dummy(0);
  w = init_weights(w.config, dummy);  // allocates the right shapes

  const std::vector<TensorRef> refs = tensor_refs(w);
  const auto& tensors = header.at("tensors");
  if (tensors.size() != refs.size()) {
    throw std::runtime_error("weight file does not match its config (tensor count)");
  }
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const std::string name = tensors[i].at("name").get<std::string>();
    const std::vector<int> shape = tensors[i].at("shape").get<std::vector<int>>();
    if (name != refs[i].name || shape != refs[i].shape) {
      throw std::runtime_error("weight file does not match its config at tensor " + name);
    }
    in.read(reinterpret_cast<char*>(refs[i].data->data()),
            static_cast<std::streamsize>(refs[i].data->size() * sizeof(double)));
  }
  if (!in) throw std::runtime_error("truncated weight file: " + path);
  in.peek();
  if (!in.eof()) throw std::runtime_error("trailing bytes in weight file: " + path);
  return w;
}

}  // namespace poselift
