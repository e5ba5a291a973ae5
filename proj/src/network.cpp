#include "deglab/network.hpp"

#include "deglab/error.hpp"
#include "deglab/numfmt.hpp"
#include "network_internal.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace deglab {

std::string to_string(SkipMode m) {
  switch (m) {
    case SkipMode::plain: return "plain";
    case SkipMode::residual: return "residual";
    case SkipMode::hyper_residual: return "hyper_residual";
  }
  return "plain";
}

SkipMode parse_skip_mode(std::string_view s) {
  if (s == "plain") return SkipMode::plain;
  if (s == "residual") return SkipMode::residual;
  if (s == "hyper_residual" || s == "hyper-residual") return SkipMode::hyper_residual;
  throw Error(ErrorKind::config, "unknown skip mode '" + std::string(s) + "'");
}

void ArchitectureConfig::validate() const {
  if (hidden_layers < 1 || width < 1 || input_dim < 1 || class_count < 1)
    throw Error(ErrorKind::config, "architecture sizes must all be >= 1");
  if (skip_matrix && (skip_matrix->rows() != width || skip_matrix->cols() != width))
    throw Error(ErrorKind::config, "skip matrix must be width x width");
  if (skip_matrix && skip_mode == SkipMode::plain)
    throw Error(ErrorKind::config, "a skip matrix needs a residual or hyper-residual network");
  if (skip_mode == SkipMode::hyper_residual) {
    const auto expected = static_cast<std::size_t>(std::max(hidden_layers - 2, 0));
    if (hyper_skips.size() != expected)
      throw Error(ErrorKind::config, "hyper-residual needs " + std::to_string(expected) + " skip matrices, got " +
                                         std::to_string(hyper_skips.size()));
    for (const auto& q : hyper_skips)
      if (q.rows() != width || q.cols() != width) throw Error(ErrorKind::config, "hyper skips must be width x width");
  } else if (!hyper_skips.empty()) {
    throw Error(ErrorKind::config, "hyper skips given for a non hyper-residual network");
  }
  if (mid_norm && mid_norm_layer() < 1) throw Error(ErrorKind::config, "mid-layer normalization needs L >= 2");
}

std::size_t ModelParams::size() const noexcept {
  std::size_t n = 0;
  for (const auto& w : weights) n += static_cast<std::size_t>(w.size());
  for (const auto& b : biases) n += static_cast<std::size_t>(b.size());
  return n;
}

Vector ModelParams::flatten() const {
  Vector flat(static_cast<Eigen::Index>(size()));
  Eigen::Index pos = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const auto& w = weights[l];
    flat.segment(pos, w.size()) = Eigen::Map<const Vector>(w.data(), w.size());
    pos += w.size();
    flat.segment(pos, biases[l].size()) = biases[l];
    pos += biases[l].size();
  }
  return flat;
}

void ModelParams::assign(const Vector& flat) {
  if (static_cast<std::size_t>(flat.size()) != size()) throw Error(ErrorKind::shape, "parameter vector length mismatch");
  Eigen::Index pos = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    auto& w = weights[l];
    Eigen::Map<Vector>(w.data(), w.size()) = flat.segment(pos, w.size());
    pos += w.size();
    biases[l] = flat.segment(pos, biases[l].size());
    pos += biases[l].size();
  }
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z;
  for (const auto& w : weights) z.weights.push_back(Matrix::Zero(w.rows(), w.cols()));
  for (const auto& b : biases) z.biases.push_back(Vector::Zero(b.size()));
  return z;
}

bool ModelParams::all_finite() const {
  for (const auto& w : weights)
    if (!w.allFinite()) return false;
  for (const auto& b : biases)
    if (!b.allFinite()) return false;
  return true;
}

ModelParams zero_params(const ArchitectureConfig& arch) {
  ModelParams p;
  const int L = arch.hidden_layers;
  p.weights.push_back(Matrix::Zero(arch.input_dim, arch.width));
  p.biases.push_back(Vector::Zero(arch.width));
  for (int l = 1; l < L; ++l) {
    p.weights.push_back(Matrix::Zero(arch.width, arch.width));
    p.biases.push_back(Vector::Zero(arch.width));
  }
  p.weights.push_back(Matrix::Zero(arch.width, arch.class_count));
  p.biases.push_back(Vector::Zero(arch.class_count));
  return p;
}

ModelParams unflatten(const Vector& flat, const ArchitectureConfig& arch) {
  ModelParams p = zero_params(arch);
  p.assign(flat);
  return p;
}

std::size_t param_count(const ArchitectureConfig& arch) {
  const auto L = static_cast<std::size_t>(arch.hidden_layers);
  const auto n = static_cast<std::size_t>(arch.width);
  const auto d = static_cast<std::size_t>(arch.input_dim);
  const auto c = static_cast<std::size_t>(arch.class_count);
  return (d * n + n) + (L - 1) * (n * n + n) + (n * c + c);
}

ModelParams init_params(const ArchitectureConfig& arch, InitScheme scheme, Rng& rng) {
  arch.validate();
  if (scheme == InitScheme::malicious && arch.skip_mode != SkipMode::residual)
    throw Error(ErrorKind::unsupported_scheme, "malicious initialization is defined for residual networks only");
  ModelParams p = zero_params(arch);
  for (auto& w : p.weights) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(w.rows() + w.cols()));
    w = gaussian_matrix(w.rows(), w.cols(), rng, stddev);
  }
  if (scheme == InitScheme::malicious)
    for (int l = 1; l < arch.hidden_layers; ++l)
      p.weights[static_cast<std::size_t>(l)] -= Matrix::Identity(arch.width, arch.width);
  return p;
}

Batch make_batch(const Dataset& d, std::span<const std::size_t> indices) {
  Batch b;
  b.inputs.resize(static_cast<Eigen::Index>(indices.size()), d.dim());
  b.labels.resize(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    b.inputs.row(static_cast<Eigen::Index>(i)) = d.features.row(static_cast<Eigen::Index>(indices[i]));
    b.labels[i] = d.labels[indices[i]];
  }
  return b;
}

Batch make_batch(const Dataset& d) {
  Batch b;
  b.inputs = d.features;
  b.labels = d.labels;
  return b;
}

BiasRegConfig make_bias_reg(const ArchitectureConfig& arch, double mean, double stddev, double strength, Rng& rng) {
  if (stddev < 0.0 || strength < 0.0) throw Error(ErrorKind::config, "bias regularization needs stddev, strength >= 0");
  BiasRegConfig reg{mean, stddev, strength, {}};
  for (int l = 0; l < arch.hidden_layers; ++l) {
    Vector t(arch.width);
    for (int j = 0; j < arch.width; ++j) t[j] = rng.normal(mean, stddev);
    reg.targets.push_back(std::move(t));
  }
  return reg;
}

namespace detail {

Matrix activation_slope(const Matrix& pre, Activation a) {
  if (a == Activation::relu) return (pre.array() > 0.0).cast<double>().matrix();
  return (1.0 - pre.array().tanh().square()).matrix();
}

Matrix activation_curvature(const Matrix& pre, Activation a) {
  if (a == Activation::relu) return Matrix::Zero(pre.rows(), pre.cols());
  const auto t = pre.array().tanh();
  return (-2.0 * t * (1.0 - t.square())).matrix();
}

Matrix activate(const Matrix& pre, Activation a) {
  if (a == Activation::relu) return pre.cwiseMax(0.0);
  return pre.array().tanh().matrix();
}

void add_skip_inputs(Matrix& out, const std::vector<Matrix>& xs, int l, const ArchitectureConfig& arch) {
  if (arch.skip_mode == SkipMode::plain) return;
  const Matrix& prev = xs[static_cast<std::size_t>(l - 1)];
  if (arch.skip_matrix)
    out.noalias() += prev * arch.skip_matrix->transpose();
  else
    out += prev;
  if (arch.skip_mode == SkipMode::hyper_residual)
    for (int k = 1; k <= l - 1; ++k)
      out.noalias() += xs[static_cast<std::size_t>(k - 1)] * arch.hyper_skips[static_cast<std::size_t>(k - 1)].transpose();
}

void add_skip_adjoints(std::vector<Matrix>& grads, int l, const ArchitectureConfig& arch) {
  if (arch.skip_mode == SkipMode::plain) return;
  const Matrix& g = grads[static_cast<std::size_t>(l - 1)];
  Matrix& prev = grads[static_cast<std::size_t>(l - 2)];
  if (arch.skip_matrix)
    prev.noalias() += g * (*arch.skip_matrix);
  else
    prev += g;
  if (arch.skip_mode == SkipMode::hyper_residual)
    for (int k = 1; k <= l - 2; ++k)
      grads[static_cast<std::size_t>(k - 1)].noalias() += g * arch.hyper_skips[static_cast<std::size_t>(k - 1)];
}

}  // namespace detail

namespace {

void check_shapes(const ModelParams& params, const ArchitectureConfig& arch, const Batch& batch) {
  const auto L = static_cast<std::size_t>(arch.hidden_layers);
  if (params.weights.size() != L + 1 || params.biases.size() != L + 1)
    throw Error(ErrorKind::shape, "parameter layer count does not match the architecture");
  if (params.weights[0].rows() != arch.input_dim || params.weights[L].cols() != arch.class_count)
    throw Error(ErrorKind::shape, "parameter shapes do not match the architecture");
  if (batch.inputs.cols() != arch.input_dim)
    throw Error(ErrorKind::shape, "batch feature dimension " + std::to_string(batch.inputs.cols()) +
                                      " != input_dim " + std::to_string(arch.input_dim));
  if (arch.loss == LossKind::cross_entropy) {
    if (static_cast<Eigen::Index>(batch.labels.size()) != batch.size())
      throw Error(ErrorKind::shape, "batch labels and inputs differ in length");
    for (int y : batch.labels)
      if (y < 0 || y >= arch.class_count) throw Error(ErrorKind::shape, "label out of range for class count");
  } else if (batch.targets.rows() != batch.size() || batch.targets.cols() != arch.class_count) {
    throw Error(ErrorKind::shape, "squared-error targets must be batch x class_count");
  }
}

void standardize_columns(ForwardTrace& t, Matrix& x) {
  const auto B = static_cast<double>(x.rows());
  t.mid_raw = x;
  t.mid_mean = x.colwise().sum() / B;
  x.rowwise() -= t.mid_mean;
  t.mid_std = (x.array().square().colwise().sum() / B).sqrt().matrix();
  const RowVector inv = (t.mid_std.array() + detail::kMidNormEpsilon).inverse().matrix();
  x.array().rowwise() *= inv.array();
}

Matrix standardize_adjoint(const ForwardTrace& t, const Matrix& g) {
  const auto B = static_cast<double>(g.rows());
  Matrix centred = t.mid_raw;
  centred.rowwise() -= t.mid_mean;
  const RowVector s = (t.mid_std.array() + detail::kMidNormEpsilon).matrix();
  const RowVector g_mean = g.colwise().sum() / B;
  const RowVector gx_mean = (g.array() * centred.array()).colwise().sum().matrix() / B;
  Matrix out = g;
  out.rowwise() -= g_mean;
  out.array().rowwise() /= s.array();
  for (Eigen::Index j = 0; j < g.cols(); ++j) {
    const double sigma = t.mid_std[j];
    if (sigma > 0.0) out.col(j) -= centred.col(j) * (gx_mean[j] / (sigma * s[j] * s[j]));
  }
  return out;
}

}  // namespace

ForwardTrace forward(const ModelParams& params, const ArchitectureConfig& arch, const Batch& batch) {
  check_shapes(params, arch, batch);
  const int L = arch.hidden_layers;
  const int mid = arch.mid_norm ? arch.mid_norm_layer() : -1;
  ForwardTrace t;
  t.input = batch.inputs;
  t.pre.reserve(static_cast<std::size_t>(L));
  t.act.reserve(static_cast<std::size_t>(L));

  for (int l = 0; l < L; ++l) {
    const auto li = static_cast<std::size_t>(l);
    Matrix h = t.x(l) * params.weights[li];
    h.rowwise() += params.biases[li].transpose();
    Matrix x = detail::activate(h, arch.activation);
    if (l >= 1) detail::add_skip_inputs(x, t.act, l, arch);
    t.pre.push_back(std::move(h));
    if (l + 1 == mid) standardize_columns(t, x);
    t.act.push_back(std::move(x));
  }
  t.logits = t.act.back() * params.weights.back();
  t.logits.rowwise() += params.biases.back().transpose();

  const Eigen::Index B = batch.size();
  t.loss.resize(B);
  if (arch.loss == LossKind::cross_entropy) {
    for (Eigen::Index r = 0; r < B; ++r) {
      const double mx = t.logits.row(r).maxCoeff();
      const double lse = mx + std::log((t.logits.row(r).array() - mx).exp().sum());
      t.loss[r] = lse - t.logits(r, batch.labels[static_cast<std::size_t>(r)]);
    }
  } else {
    t.loss = 0.5 * (t.logits - batch.targets).rowwise().squaredNorm();
  }
  return t;
}

BackwardResult backward(const ForwardTrace& trace, const ModelParams& params, const ArchitectureConfig& arch,
                        const Batch& batch) {
  const int L = arch.hidden_layers;
  const Eigen::Index B = trace.logits.rows();
  const int mid = arch.mid_norm ? arch.mid_norm_layer() : -1;
  BackwardResult r;
  r.grads = params.zeros_like();

  if (arch.loss == LossKind::cross_entropy) {
    r.logit_grad.resize(B, arch.class_count);
    for (Eigen::Index i = 0; i < B; ++i) {
      const double mx = trace.logits.row(i).maxCoeff();
      RowVector p = (trace.logits.row(i).array() - mx).exp().matrix();
      p /= p.sum();
      p[batch.labels[static_cast<std::size_t>(i)]] -= 1.0;
      r.logit_grad.row(i) = p;
    }
  } else {
    r.logit_grad = trace.logits - batch.targets;
  }
  r.logit_grad /= static_cast<double>(B);

  const auto top = static_cast<std::size_t>(L);
  r.grads.weights[top].noalias() = trace.act.back().transpose() * r.logit_grad;
  r.grads.biases[top] = r.logit_grad.colwise().sum().transpose();

  r.act_grad.assign(static_cast<std::size_t>(L), Matrix());
  for (auto& g : r.act_grad) g = Matrix::Zero(B, arch.width);
  r.pre_grad.assign(static_cast<std::size_t>(L), Matrix());
  r.act_grad.back().noalias() = r.logit_grad * params.weights[top].transpose();

  for (int l = L; l >= 1; --l) {
    const auto i = static_cast<std::size_t>(l - 1);
    if (l == mid) r.act_grad[i] = standardize_adjoint(trace, r.act_grad[i]);
    Matrix gh = detail::activation_slope(trace.pre[i], arch.activation).cwiseProduct(r.act_grad[i]);
    r.grads.weights[i].noalias() = trace.x(l - 1).transpose() * gh;
    r.grads.biases[i] = gh.colwise().sum().transpose();
    if (l >= 2) {
      r.act_grad[i - 1].noalias() += gh * params.weights[i].transpose();
      detail::add_skip_adjoints(r.act_grad, l, arch);
    }
    r.pre_grad[i] = std::move(gh);
  }
  return r;
}

double bias_penalty(const ModelParams& params, const BiasRegConfig& reg) {
  double p = 0.0;
  for (std::size_t l = 0; l < reg.targets.size(); ++l) p += (params.biases[l] - reg.targets[l]).squaredNorm();
  return reg.strength * p;
}

LossAndGrads loss_and_grads(const ModelParams& params, const ArchitectureConfig& arch, const Batch& batch,
                            const BiasRegConfig* bias_reg, const std::string& context) {
  const ForwardTrace trace = forward(params, arch, batch);
  BackwardResult back = backward(trace, params, arch, batch);
  LossAndGrads out;
  out.data_loss = trace.loss.mean();
  out.loss = out.data_loss;
  if (bias_reg && bias_reg->strength > 0.0) {
    if (bias_reg->targets.size() != static_cast<std::size_t>(arch.hidden_layers))
      throw Error(ErrorKind::config, "bias targets do not match the hidden layer count");
    out.loss += bias_penalty(params, *bias_reg);
    for (std::size_t l = 0; l < bias_reg->targets.size(); ++l)
      back.grads.biases[l] += 2.0 * bias_reg->strength * (params.biases[l] - bias_reg->targets[l]);
  }
  if (!std::isfinite(out.loss))
    throw Error(ErrorKind::numeric_overflow, "non-finite loss" + (context.empty() ? std::string() : " at " + context));
  const auto B = static_cast<double>(batch.size());
  for (const auto& g : back.act_grad) out.activity_grad_norms.push_back(g.rowwise().norm().mean() * B);
  out.grads = std::move(back.grads);
  return out;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::config, "learning_rate must be > 0");
  if (batch_size < 1) throw Error(ErrorKind::config, "batch_size must be >= 1");
  if (epochs < 0) throw Error(ErrorKind::config, "epochs must be >= 0");
}

AdamState make_adam_state(const ModelParams& params) { return {params.zeros_like(), params.zeros_like(), 0}; }

void adam_step(AdamState& state, ModelParams& params, const ModelParams& grads, long t, const TrainConfig& cfg) {
  if (t < 1) throw Error(ErrorKind::config, "Adam step index must be >= 1");
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = (cfg.beta2 * v.array() + (1.0 - cfg.beta2) * g.array().square()).matrix();
    p.array() -= cfg.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.epsilon);
  };
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    update(params.weights[l], state.m.weights[l], state.v.weights[l], grads.weights[l]);
    update(params.biases[l], state.m.biases[l], state.v.biases[l], grads.biases[l]);
  }
  state.step = t;
}

double RunHistory::mean_accuracy(int first_epoch, int last_epoch) const {
  double sum = 0.0;
  int count = 0;
  for (const auto& e : epochs)
    if (e.epoch >= first_epoch && (last_epoch < 0 || e.epoch <= last_epoch)) {
      sum += e.train_accuracy;
      ++count;
    }
  return count ? sum / count : 0.0;
}

void write_history_csv(std::ostream& out, const RunHistory& h, int hidden_layers) {
  out << "epoch,train_accuracy,train_loss";
  for (int l = 1; l <= hidden_layers; ++l) out << ",grad_norm_layer_" << l;
  out << '\n';
  for (const auto& e : h.epochs) {
    out << e.epoch << ',' << format_double(e.train_accuracy) << ',' << format_double(e.train_loss);
    for (double g : e.grad_norms) out << ',' << format_double(g);
    out << '\n';
  }
}

RunHistory read_history_csv(std::istream& in) {
  RunHistory h;
  std::string line;
  if (!std::getline(in, line)) return h;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() < 3) throw Error(ErrorKind::format, "history row has too few fields");
    EpochRecord e;
    e.epoch = static_cast<int>(parse_int(f[0]));
    e.train_accuracy = parse_double(f[1]);
    e.train_loss = parse_double(f[2]);
    for (std::size_t j = 3; j < f.size(); ++j) e.grad_norms.push_back(parse_double(f[j]));
    h.epochs.push_back(std::move(e));
  }
  return h;
}

Evaluation evaluate(const ModelParams& params, const ArchitectureConfig& arch, const Dataset& d, std::size_t chunk) {
  Evaluation ev;
  if (d.size() == 0) return ev;
  std::size_t correct = 0;
  double loss = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < d.size(); start += chunk) {
    const std::size_t end = std::min(d.size(), start + chunk);
    idx.resize(end - start);
    for (std::size_t i = start; i < end; ++i) idx[i - start] = i;
    const Batch b = make_batch(d, idx);
    const ForwardTrace t = forward(params, arch, b);
    loss += t.loss.sum();
    for (Eigen::Index r = 0; r < t.logits.rows(); ++r) {
      Eigen::Index arg = 0;
      t.logits.row(r).maxCoeff(&arg);
      if (arg == b.labels[static_cast<std::size_t>(r)]) ++correct;
    }
  }
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(d.size());
  ev.loss = loss / static_cast<double>(d.size());
  return ev;
}

RunHistory train(const ArchitectureConfig& arch, ModelParams& params, const Dataset& d, const TrainConfig& cfg,
                 const BiasRegConfig* bias_reg, const TrainCallbacks& callbacks) {
  arch.validate();
  cfg.validate();
  if (d.class_count != arch.class_count)
    throw Error(ErrorKind::config, "dataset has " + std::to_string(d.class_count) + " classes, network " +
                                       std::to_string(arch.class_count));
  RunHistory history;
  if (callbacks.on_epoch) callbacks.on_epoch(0, params);
  if (cfg.epochs == 0 || d.size() == 0) return history;

  Rng shuffle(cfg.shuffle_seed);
  AdamState opt = make_adam_state(params);
  const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
  const Dataset monitor_set = head(d, cfg.monitor_examples);
  const Batch monitor = make_batch(monitor_set);

  long step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto perm = shuffle.permutation(d.size());
    for (std::size_t start = 0; start < perm.size(); start += batch_size) {
      const std::size_t end = std::min(perm.size(), start + batch_size);
      const Batch b = make_batch(d, std::span<const std::size_t>(perm.data() + start, end - start));
      const auto lg = loss_and_grads(params, arch, b, bias_reg,
                                     "epoch " + std::to_string(epoch) + " step " + std::to_string(step + 1));
      adam_step(opt, params, lg.grads, ++step, cfg);
    }
    if (!params.all_finite())
      throw Error(ErrorKind::numeric_overflow, "non-finite parameters after epoch " + std::to_string(epoch));
    const Evaluation ev = evaluate(params, arch, d);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_accuracy = ev.accuracy;
    rec.train_loss = ev.loss;
    rec.grad_norms = loss_and_grads(params, arch, monitor, nullptr, "monitor").activity_grad_norms;
    history.epochs.push_back(std::move(rec));
    if (callbacks.on_epoch) callbacks.on_epoch(epoch, params);
  }
  return history;
}

}  // namespace deglab
