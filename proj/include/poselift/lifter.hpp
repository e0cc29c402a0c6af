#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "poselift/errormodel.hpp"
#include "poselift/geometry.hpp"
#include "poselift/normalize.hpp"
#include "poselift/synth.hpp"

namespace poselift {

/// Architecture and loss hyperparameters. The input is the flattened
/// normalization output: 2J+3 values with location/scale, 2J without.
struct LifterConfig {
  int joint_count = 17;
  int root_index = 0;
  int hidden_dim = 256;
  int num_blocks = 2;
  double dropout_p = 0.5;
  bool use_loc_scale = true;
  double lambda = 1e3;        // pose-term weight in the composite L1 loss
  double bn_momentum = 0.1;   // running = (1-m)*running + m*batch
  double bn_epsilon = 1e-5;
  std::uint64_t seed = 0;
  std::vector<int> flip_pairing;  // required when flip augmentation is enabled

  int input_dim() const { return 2 * joint_count + (use_loc_scale ? 3 : 0); }
  int output_dim() const { return 3 * joint_count - 2; }
  void validate() const;
};

struct LinearLayer {
  int in = 0, out = 0;
  std::vector<double> weight;  // row-major [out x in]
  std::vector<double> bias;    // [out]
};

struct BatchNormLayer {
  int dim = 0;
  std::vector<double> scale, shift, running_mean, running_var;
};

/// One residual block: x + f(x) with f = [linear, batch-norm, dropout, ReLU]
/// applied twice. The sub-layer order is fixed; weight files depend on it.
struct ResidualBlock {
  LinearLayer lin1;
  BatchNormLayer bn1;
  LinearLayer lin2;
  BatchNormLayer bn2;
};

struct LifterWeights {
  LifterConfig config;
  LinearLayer input;                 // input_dim -> hidden
  std::vector<ResidualBlock> blocks;
  LinearLayer head;                  // hidden -> 3J-2
};

/// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for linear layers;
/// batch-norm starts as identity with running stats (0, 1).
LifterWeights init_weights(const LifterConfig& config, std::mt19937_64& rng);

/// First output element is the canonical root depth; the remaining 3(J-1)
/// values are the root-relative pose, root omitted. unpack restores a J-entry
/// offset list with an exact zero at the root.
struct LifterOutput {
  CanonicalDepth canonical_depth;
  std::vector<Vec3> relative;  // J entries, relative[root_index] == 0
};
LifterOutput unpack_output(const double* y, const LifterConfig& config);

/// Flattens a ground-truth root-relative pose to the output layout (root
/// skipped), for loss targets.
void pack_relative(const std::vector<Vec3>& relative, int root_index, double* out);

/// Execution mode. Training uses batch statistics, dropout, and running-stat
/// updates; evaluation uses none of them. Tests exercise other combinations
/// (e.g. frozen statistics with live dropout).
struct RunFlags {
  bool batch_stats = false;
  bool dropout = false;
  bool update_running = false;
};
inline RunFlags train_flags() { return {true, true, true}; }
inline RunFlags eval_flags() { return {false, false, false}; }

struct BlockCache {
  int B = 0;
  bool batch_stats = false;
  double inv_keep = 1.0;  // dropout rescale used in the forward pass
  std::vector<double> input;
  std::vector<double> d1, a1, d2, a2;    // relu inputs / outputs per sub-stack
  std::vector<double> xhat1, xhat2;      // batch-norm normalized values
  std::vector<double> var1, var2;        // variances the forward actually used
  std::vector<unsigned char> mask1, mask2;  // dropout masks; empty = identity
};

struct ForwardCache {
  int B = 0;
  RunFlags flags;
  std::vector<double> X;    // input matrix copy [B x input_dim]
  std::vector<double> z0;   // input linear output [B x hidden]
  std::vector<BlockCache> blocks;
  std::vector<double> hin;  // head input (last block output) [B x hidden]
  std::vector<double> Y;    // output matrix [B x output_dim]
};

/// Batched forward pass over a row-major input matrix X [B x input_dim].
/// rng is consumed only when flags.dropout is set. The cache may be null in
/// evaluation-only use.
void forward_batch(LifterWeights& weights, int B, const double* X, const RunFlags& flags,
                   std::mt19937_64* rng, double* Y, ForwardCache* cache);

/// Single-pose evaluation forward (deterministic).
LifterOutput forward(const NormalizedInput& input, const LifterWeights& weights);

/// One residual block, exposed for gradient tests.
void block_forward(ResidualBlock& block, int B, const double* X, const RunFlags& flags,
                   double dropout_p, double bn_eps, double bn_momentum,
                   std::mt19937_64* rng, double* Y, BlockCache* cache);

struct LinearGrad {
  std::vector<double> weight, bias;
};
struct BnGrad {
  std::vector<double> scale, shift;
};
struct BlockGrad {
  LinearGrad lin1, lin2;
  BnGrad bn1, bn2;
};
struct LifterGradients {
  LinearGrad input;
  std::vector<BlockGrad> blocks;
  LinearGrad head;
};
LifterGradients make_gradients(const LifterConfig& config);

void block_backward(const ResidualBlock& block, const BlockCache& cache, double bn_eps,
                    const double* dY, double* dX, BlockGrad& grad);

/// Reverse-mode gradients of every learnable parameter given the output
/// gradient dY [B x output_dim]. Requires a cache from a forward pass.
void backward_batch(const LifterWeights& weights, const ForwardCache& cache,
                    const double* dY, LifterGradients& grads);

/// Composite L1 loss for one sample: |canonical depth error| + lambda * L1 of
/// the root-relative pose error.
double lift_loss(const LifterOutput& pred, double gt_root_depth_mm, double alpha,
                 const std::vector<Vec3>& gt_relative, double lambda);

/// Batched loss and output gradient. targets is [B x output_dim] holding
/// [canonical depth, packed relative] per row. Returns the batch-mean loss and
/// writes dY scaled by 1/B (the same normalization the loss uses).
double batch_loss_grad(int B, int output_dim, const double* Y, const double* targets,
                       double lambda, double* dY);

/// RMSprop: v <- rho*v + (1-rho)*g^2; w <- w - lr*g/(sqrt(v)+eps).
struct RmspropState {
  LifterGradients v;  // second-moment accumulators, same shapes as gradients
};
RmspropState make_rmsprop_state(const LifterConfig& config);
void rmsprop_step(LifterWeights& weights, const LifterGradients& grads, RmspropState& state,
                  double lr, double rho, double eps);

struct TrainSchedule {
  int epochs = 60;
  int batch_size = 64;
  double lr = 1e-3;
  double lr_late = 1e-4;
  int lr_drop_epoch = -1;      // < 0 picks 2/3 of epochs
  double lr_exp_decay = 1.0;   // extra multiplicative per-epoch factor
  double rho = 0.99;
  double eps = 1e-8;
  bool flip_augment = true;
  const ErrorModelSet* perturb_model = nullptr;

  double lr_at(int epoch, int total_epochs) const;
};

struct TrainLog {
  // epoch_loss[e] is the deterministic evaluation-mode loss over the clean
  // training set with the weights at the start of epoch e; the final entry is
  // the loss of the returned weights.
  std::vector<double> epoch_loss;
};

struct TrainResult {
  LifterWeights weights;
  TrainLog log;
};

/// Deterministic training given config.seed: fixed shuffles, dropout masks,
/// and augmentation draws. Aborts with std::runtime_error when the loss stops
/// being finite.
TrainResult train(const std::vector<SceneSample>& data, const LifterConfig& config,
                  const TrainSchedule& schedule);

/// Evaluation-mode lift of one 2D pose.
LifterOutput lift_pose(const Pose2D& pose, const Vec2& principal, const LifterWeights& weights);

/// Full lift to an absolute pose when the focal length is known: metric root
/// depth via the canonical depth, lateral root via back-projection of the
/// root's 2D coordinates.
AbsolutePose lift_absolute(const Pose2D& pose, const CameraIntrinsics& cam,
                           const LifterWeights& weights);

/// Versioned binary weight container (config echo + shaped tensors, including
/// batch-norm running statistics). Loading verifies every shape against the
/// stored config and refuses mismatches.
void save_weights(const LifterWeights& weights, const std::string& path);
LifterWeights load_weights(const std::string& path);

}  // namespace poselift
