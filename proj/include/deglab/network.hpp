#pragma once

// Fully-connected plain / residual / hyper-residual networks.
//
// Layer convention (row-per-example batches):
//   x_1     = f(x_0 W_0 + b_1)
//   x_{l+1} = f(x_l W_l + b_{l+1}) [+ x_l S^T] [+ sum_{k=1}^{l-1} x_k Q_k^T],  l = 1..L-1
//   logits  = x_L W_L + b_out
// W_0 is d x n, hidden W_l are n x n, W_L is n x C; weights are stored
// fan_in x fan_out, so column j of W_{l-1} holds the incoming weights of unit j
// in layer l and row j of W_l its outgoing weights. The adjacent skip S is the
// identity unless an explicit matrix is given; there is no skip out of x_0.

#include "deglab/data.hpp"
#include "deglab/linalg.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace deglab {

enum class SkipMode { plain, residual, hyper_residual };
enum class Activation { relu, tanh };
enum class LossKind { cross_entropy, squared_error };
enum class InitScheme { glorot, malicious };

std::string to_string(SkipMode m);
SkipMode parse_skip_mode(std::string_view s);

struct ArchitectureConfig {
  int hidden_layers = 1;  // L
  int width = 1;          // n
  int input_dim = 1;      // d
  int class_count = 1;    // C
  SkipMode skip_mode = SkipMode::plain;
  std::optional<Matrix> skip_matrix;  // adjacent skip S; identity when empty
  std::vector<Matrix> hyper_skips;    // Q_1 .. Q_{L-2}
  Activation activation = Activation::relu;
  bool mid_norm = false;  // batch standardization of x_{floor(L/2)}
  LossKind loss = LossKind::cross_entropy;

  void validate() const;
  int mid_norm_layer() const noexcept { return hidden_layers / 2; }
};

/// Weights W_0..W_L and biases b_1..b_L, b_out (biases[L] is the output bias).
struct ModelParams {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  std::size_t size() const noexcept;
  /// Per layer: weights row-major, then the bias.
  Vector flatten() const;
  void assign(const Vector& flat);
  ModelParams zeros_like() const;
  bool all_finite() const;
};

ModelParams zero_params(const ArchitectureConfig& arch);
ModelParams unflatten(const Vector& flat, const ArchitectureConfig& arch);

/// N = (d n + n) + (L - 1)(n^2 + n) + (n C + C), independent of skip mode.
std::size_t param_count(const ArchitectureConfig& arch);

/// Glorot normal weights, zero biases. Malicious additionally subtracts the
/// identity from every hidden n x n matrix (residual nets only).
ModelParams init_params(const ArchitectureConfig& arch, InitScheme scheme, Rng& rng);

struct Batch {
  Matrix inputs;
  std::vector<int> labels;  // cross-entropy targets
  Matrix targets;           // squared-error targets (rows x C)

  Eigen::Index size() const noexcept { return inputs.rows(); }
};

Batch make_batch(const Dataset& d, std::span<const std::size_t> indices);
Batch make_batch(const Dataset& d);

/// Random target biases b*_l ~ N(mean, stddev) for hidden layers 1..L and an
/// l2 penalty strength * sum_l ||b_l - b*_l||^2. mean = stddev = 0 is plain
/// bias decay.
struct BiasRegConfig {
  double mean = 0.0;
  double stddev = 0.0;
  double strength = 0.0;
  std::vector<Vector> targets;
};

BiasRegConfig make_bias_reg(const ArchitectureConfig& arch, double mean, double stddev, double strength, Rng& rng);

struct ForwardTrace {
  Matrix input;             // x_0
  std::vector<Matrix> pre;  // h_1..h_L at [l - 1]
  std::vector<Matrix> act;  // x_1..x_L at [l - 1], as consumed by the layers above
  Matrix logits;
  Vector loss;              // per-example data loss
  // Batch standardization at the mid layer (when enabled).
  Matrix mid_raw;
  RowVector mid_mean;
  RowVector mid_std;

  const Matrix& x(int layer) const { return layer == 0 ? input : act[static_cast<std::size_t>(layer - 1)]; }
};

ForwardTrace forward(const ModelParams& params, const ArchitectureConfig& arch, const Batch& batch);

struct BackwardResult {
  ModelParams grads;
  Matrix logit_grad;               // dE/dlogits (already divided by the batch size)
  std::vector<Matrix> act_grad;    // dE/dx_l at [l - 1] (pre-standardization at the mid layer)
  std::vector<Matrix> pre_grad;    // dE/dh_l at [l - 1]
};

/// Backward pass of the mean data loss through a trace (no bias penalty).
BackwardResult backward(const ForwardTrace& trace, const ModelParams& params, const ArchitectureConfig& arch,
                        const Batch& batch);

struct LossAndGrads {
  double loss = 0.0;       // mean data loss + bias penalty
  double data_loss = 0.0;  // mean data loss
  ModelParams grads;
  std::vector<double> activity_grad_norms;  // layers 1..L: batch mean of per-example ||dE_i/dx_l||
};

/// Throws numeric_overflow (with `context`) when the loss is not finite.
LossAndGrads loss_and_grads(const ModelParams& params, const ArchitectureConfig& arch, const Batch& batch,
                            const BiasRegConfig* bias_reg = nullptr, const std::string& context = {});

double bias_penalty(const ModelParams& params, const BiasRegConfig& reg);

struct TrainConfig {
  double learning_rate = 0.0005;
  int batch_size = 500;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int epochs = 0;
  std::uint64_t shuffle_seed = 0;
  std::size_t monitor_examples = 1000;  // prefix used for per-epoch activity-gradient norms

  void validate() const;
};

struct AdamState {
  ModelParams m;
  ModelParams v;
  long step = 0;
};

AdamState make_adam_state(const ModelParams& params);

/// Bias-corrected Adam update at step t (t >= 1).
void adam_step(AdamState& state, ModelParams& params, const ModelParams& grads, long t, const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double train_accuracy = 0.0;
  double train_loss = 0.0;
  std::vector<double> grad_norms;  // layers 1..L
};

struct RunHistory {
  std::vector<EpochRecord> epochs;

  double mean_accuracy(int first_epoch = 1, int last_epoch = -1) const;
};

void write_history_csv(std::ostream& out, const RunHistory& h, int hidden_layers);
RunHistory read_history_csv(std::istream& in);

struct Evaluation {
  double accuracy = 0.0;
  double loss = 0.0;
};

/// Accuracy and mean data loss over the whole dataset, in chunks.
Evaluation evaluate(const ModelParams& params, const ArchitectureConfig& arch, const Dataset& d,
                    std::size_t chunk = 1000);

struct TrainCallbacks {
  /// Invoked at epoch 0 (before any update) and after each epoch.
  std::function<void(int epoch, const ModelParams& params)> on_epoch;
};

/// Seeded-shuffle minibatch Adam. Accuracy and loss are recomputed on the full
/// training set after every epoch.
RunHistory train(const ArchitectureConfig& arch, ModelParams& params, const Dataset& d, const TrainConfig& cfg,
                 const BiasRegConfig* bias_reg = nullptr, const TrainCallbacks& callbacks = {});

}  // namespace deglab
