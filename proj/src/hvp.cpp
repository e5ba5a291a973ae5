#include "deglab/hvp.hpp"

#include "deglab/error.hpp"
#include "network_internal.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>

namespace deglab {

HvpOracle::HvpOracle(ModelParams params, ArchitectureConfig arch, Batch batch, std::optional<BiasRegConfig> bias_reg)
    : params_(std::move(params)), arch_(std::move(arch)), batch_(std::move(batch)), bias_reg_(std::move(bias_reg)) {
  arch_.validate();
  if (arch_.mid_norm)
    throw Error(ErrorKind::unsupported_scheme, "Hessian-vector products are not implemented with mid-layer normalization");
  if (params_.size() != param_count(arch_)) throw Error(ErrorKind::shape, "parameters do not match the architecture");
}

PassCounts HvpOracle::passes() const noexcept {
  return {forward_.load(), backward_.load(), r_forward_.load(), r_backward_.load(), calls_.load()};
}

void HvpOracle::reset_counters() noexcept {
  forward_ = 0;
  backward_ = 0;
  r_forward_ = 0;
  r_backward_ = 0;
  calls_ = 0;
}

Vector HvpOracle::gradient() const {
  const auto lg = loss_and_grads(params_, arch_, batch_, bias_reg_ ? &*bias_reg_ : nullptr);
  return lg.grads.flatten();
}

Vector HvpOracle::apply(const Vector& v) const {
  if (v.size() != dim())
    throw Error(ErrorKind::shape, "direction has length " + std::to_string(v.size()) + ", expected " +
                                      std::to_string(dim()));
  ++calls_;
  const int L = arch_.hidden_layers;
  const ModelParams dir = unflatten(v, arch_);
  const auto& W = params_.weights;
  const auto& V = dir.weights;

  const ForwardTrace t = forward(params_, arch_, batch_);
  ++forward_;
  const BackwardResult g = backward(t, params_, arch_, batch_);
  ++backward_;

  // R-forward: directional derivatives of pre-activations and activities.
  std::vector<Matrix> rh(static_cast<std::size_t>(L)), rx(static_cast<std::size_t>(L));
  std::vector<Matrix> slope(static_cast<std::size_t>(L));
  for (int l = 1; l <= L; ++l) {
    const auto i = static_cast<std::size_t>(l - 1);
    Matrix h = t.x(l - 1) * V[i];
    if (l >= 2) h.noalias() += rx[i - 1] * W[i];
    h.rowwise() += dir.biases[i].transpose();
    slope[i] = detail::activation_slope(t.pre[i], arch_.activation);
    Matrix x = slope[i].cwiseProduct(h);
    if (l >= 2) detail::add_skip_inputs(x, rx, l - 1, arch_);
    rh[i] = std::move(h);
    rx[i] = std::move(x);
  }
  const auto top = static_cast<std::size_t>(L);
  Matrix rz = rx.back() * W[top] + t.act.back() * V[top];
  rz.rowwise() += dir.biases[top].transpose();
  ++r_forward_;

  // R{dE/dz}.
  const auto B = static_cast<double>(batch_.size());
  Matrix rgz(rz.rows(), rz.cols());
  if (arch_.loss == LossKind::cross_entropy) {
    for (Eigen::Index r = 0; r < rz.rows(); ++r) {
      const double mx = t.logits.row(r).maxCoeff();
      RowVector p = (t.logits.row(r).array() - mx).exp().matrix();
      p /= p.sum();
      const double pr = p.dot(rz.row(r));
      rgz.row(r) = (p.array() * (rz.row(r).array() - pr)).matrix();
    }
  } else {
    rgz = rz;
  }
  rgz /= B;

  // R-backward.
  ModelParams hv = params_.zeros_like();
  hv.weights[top].noalias() = rx.back().transpose() * g.logit_grad + t.act.back().transpose() * rgz;
  hv.biases[top] = rgz.colwise().sum().transpose();

  std::vector<Matrix> rgx(static_cast<std::size_t>(L));
  for (auto& m : rgx) m = Matrix::Zero(batch_.size(), arch_.width);
  rgx.back().noalias() = rgz * W[top].transpose() + g.logit_grad * V[top].transpose();

  for (int l = L; l >= 1; --l) {
    const auto i = static_cast<std::size_t>(l - 1);
    Matrix rgh = slope[i].cwiseProduct(rgx[i]);
    if (arch_.activation != Activation::relu)
      rgh += detail::activation_curvature(t.pre[i], arch_.activation).cwiseProduct(rh[i]).cwiseProduct(g.act_grad[i]);
    const Matrix& gh = g.pre_grad[i];
    hv.weights[i].noalias() = t.x(l - 1).transpose() * rgh;
    if (l >= 2) hv.weights[i].noalias() += rx[i - 1].transpose() * gh;
    hv.biases[i] = rgh.colwise().sum().transpose();
    if (l >= 2) {
      rgx[i - 1].noalias() += rgh * W[i].transpose() + gh * V[i].transpose();
      detail::add_skip_adjoints(rgx, l, arch_);
    }
  }
  ++r_backward_;

  if (bias_reg_ && bias_reg_->strength > 0.0)
    for (int l = 0; l < L; ++l) hv.biases[static_cast<std::size_t>(l)] += 2.0 * bias_reg_->strength * dir.biases[static_cast<std::size_t>(l)];
  return hv.flatten();
}

Matrix fd_hessian(const std::function<Vector(const Vector&)>& grad, const Vector& theta, double eps,
                  std::size_t max_dim) {
  const auto n = static_cast<std::size_t>(theta.size());
  if (n > max_dim)
    throw Error(ErrorKind::size_guard, "finite-difference Hessian limited to " + std::to_string(max_dim) +
                                           " parameters, got " + std::to_string(n));
  Matrix h(theta.size(), theta.size());
  Vector probe = theta;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    probe[j] = theta[j] + eps;
    const Vector gp = grad(probe);
    probe[j] = theta[j] - eps;
    const Vector gm = grad(probe);
    probe[j] = theta[j];
    h.col(j) = (gp - gm) / (2.0 * eps);
  }
  return 0.5 * (h + h.transpose());
}

Matrix full_hessian_fd(const ModelParams& params, const ArchitectureConfig& arch, const Batch& batch,
                       const BiasRegConfig* bias_reg, double eps) {
  ModelParams work = params;
  auto grad = [&](const Vector& theta) {
    work.assign(theta);
    return loss_and_grads(work, arch, batch, bias_reg).grads.flatten();
  };
  return fd_hessian(grad, params.flatten(), eps);
}

Matrix hessian_from_operator(const LinearOperator& op, std::size_t max_dim) {
  const Eigen::Index n = op.dim();
  if (static_cast<std::size_t>(n) > max_dim)
    throw Error(ErrorKind::size_guard, "explicit Hessian limited to " + std::to_string(max_dim) + " parameters");
  Matrix h(n, n);
  Vector e = Vector::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    e[j] = 1.0;
    h.col(j) = op.apply(e);
    e[j] = 0.0;
  }
  return h;
}

std::size_t flat_weight_index(const ArchitectureConfig& arch, int layer, Eigen::Index row, Eigen::Index col) {
  const auto n = static_cast<std::size_t>(arch.width);
  const auto d = static_cast<std::size_t>(arch.input_dim);
  std::size_t offset = 0;
  std::size_t cols = n;
  if (layer >= 1) {
    offset = d * n + n + static_cast<std::size_t>(layer - 1) * (n * n + n);
    if (layer == arch.hidden_layers) cols = static_cast<std::size_t>(arch.class_count);
  }
  return offset + static_cast<std::size_t>(row) * cols + static_cast<std::size_t>(col);
}

namespace {

ArchitectureConfig tiny_arch(SkipMode mode) {
  ArchitectureConfig a;
  a.hidden_layers = kTinyLayers;
  a.width = kTinyWidth;
  a.input_dim = kTinyInput;
  a.class_count = kTinyClasses;
  a.skip_mode = mode;
  a.activation = Activation::relu;
  a.loss = LossKind::squared_error;
  if (mode == SkipMode::hyper_residual)
    a.hyper_skips.assign(static_cast<std::size_t>(kTinyLayers - 2), Matrix::Identity(kTinyWidth, kTinyWidth));
  return a;
}

void check_case(const DegeneracyCase& c, bool pair) {
  if (c.layer < 1 || c.layer > kTinyLayers)
    throw Error(ErrorKind::config, "degeneracy layer must be in 1.." + std::to_string(kTinyLayers));
  auto bad = [](int u) { return u < 0 || u >= kTinyWidth; };
  if (bad(c.unit_a) || (pair && (bad(c.unit_b) || c.unit_b == c.unit_a)))
    throw Error(ErrorKind::config, "degeneracy units must be distinct indices in 0.." + std::to_string(kTinyWidth - 1));
}

DegeneracySetup base_setup(const DegeneracyCase& c) {
  DegeneracySetup s;
  s.arch = tiny_arch(c.skip_mode);
  Rng init(derive_seed(c.seed, 1));
  s.params = init_params(s.arch, InitScheme::glorot, init);
  Rng bias(derive_seed(c.seed, 2));
  for (int l = 0; l < kTinyLayers; ++l) s.params.biases[static_cast<std::size_t>(l)] = gaussian_vector(kTinyWidth, bias, 0.1);
  Rng data(derive_seed(c.seed, 3));
  s.batch.inputs = gaussian_matrix(kTinyBatch, kTinyInput, data);
  s.batch.targets = gaussian_matrix(kTinyBatch, kTinyClasses, data);
  return s;
}

double smallest_abs_eigenvalue(const Matrix& h) {
  const Vector ev = symmetric_eigenvalues(0.5 * (h + h.transpose()));
  return ev.cwiseAbs().minCoeff();
}

struct Hessians {
  Matrix exact;
  double min_exact = 0.0;
  double min_fd = 0.0;
};

Hessians both_hessians(const DegeneracySetup& s) {
  Hessians h;
  const HvpOracle oracle(s.params, s.arch, s.batch);
  h.exact = hessian_from_operator(oracle);
  h.min_exact = smallest_abs_eigenvalue(h.exact);
  h.min_fd = smallest_abs_eigenvalue(full_hessian_fd(s.params, s.arch, s.batch));
  return h;
}

}  // namespace

DegeneracySetup overlap_setup(const DegeneracyCase& c) {
  check_case(c, true);
  DegeneracySetup s = base_setup(c);
  const auto in = static_cast<std::size_t>(c.layer - 1);
  auto& w = s.params.weights[in];
  w.col(c.unit_b) = w.col(c.unit_a);
  s.params.biases[in][c.unit_b] = s.params.biases[in][c.unit_a];
  w(0, c.unit_b) += c.perturbation;
  // Zero residual makes H = J^T J, where the duplicated columns are exact. The
  // skip-net counterpart keeps random targets: at zero residual its J^T J has
  // a null space of its own that would mask the comparison.
  if (c.skip_mode == SkipMode::plain) s.batch.targets = forward(s.params, s.arch, s.batch).logits;
  return s;
}

DegeneracySetup elimination_setup(const DegeneracyCase& c) {
  check_case(c, false);
  DegeneracySetup s = base_setup(c);
  const auto in = static_cast<std::size_t>(c.layer - 1);
  auto& w = s.params.weights[in];
  w.col(c.unit_a).setZero();
  s.params.biases[in][c.unit_a] = 0.0;
  if (c.keep_one_incoming) w(0, c.unit_a) = 0.5;
  return s;
}

DegeneracyReport verify_overlap_degeneracy(const DegeneracyCase& c) {
  const DegeneracySetup s = overlap_setup(c);
  const Hessians h = both_hessians(s);
  DegeneracyReport r;
  r.check = "overlap";
  r.skip_mode = c.skip_mode;
  r.layer = c.layer;
  r.units = {c.unit_a, c.unit_b};
  r.parameter_count = s.params.size();
  const auto& out = s.params.weights[static_cast<std::size_t>(c.layer)];
  for (Eigen::Index k = 0; k < out.cols(); ++k) {
    const auto a = static_cast<Eigen::Index>(flat_weight_index(s.arch, c.layer, c.unit_a, k));
    const auto b = static_cast<Eigen::Index>(flat_weight_index(s.arch, c.layer, c.unit_b, k));
    r.max_column_mismatch = std::max(r.max_column_mismatch, (h.exact.col(a) - h.exact.col(b)).cwiseAbs().maxCoeff());
  }
  r.min_abs_eigenvalue = h.min_fd;
  r.min_abs_eigenvalue_exact = h.min_exact;
  r.expected_degenerate = c.skip_mode == SkipMode::plain && c.perturbation == 0.0;
  r.degenerate = r.max_column_mismatch == 0.0;
  if (r.expected_degenerate) {
    r.passed = r.degenerate && r.min_abs_eigenvalue_exact < 1e-8;
    r.detail = "outgoing-weight columns must match bit for bit and H must have a zero eigenvalue (< 1e-8)";
  } else if (c.perturbation == 0.0) {
    r.passed = !r.degenerate && r.min_abs_eigenvalue > 1e-6;
    r.detail = "skip path must separate the column pair and lift the zero mode (FD min |eigenvalue| > 1e-6)";
  } else {
    r.passed = !r.degenerate;
    r.detail = "perturbed copy must give distinct columns";
  }
  return r;
}

DegeneracyReport verify_elimination_degeneracy(const DegeneracyCase& c) {
  const DegeneracySetup s = elimination_setup(c);
  const Hessians h = both_hessians(s);
  DegeneracyReport r;
  r.check = "elimination";
  r.skip_mode = c.skip_mode;
  r.layer = c.layer;
  r.units = {c.unit_a};
  r.parameter_count = s.params.size();
  const auto& out = s.params.weights[static_cast<std::size_t>(c.layer)];
  for (Eigen::Index k = 0; k < out.cols(); ++k) {
    const auto a = static_cast<Eigen::Index>(flat_weight_index(s.arch, c.layer, c.unit_a, k));
    r.max_column_mismatch = std::max(r.max_column_mismatch, h.exact.col(a).cwiseAbs().maxCoeff());
  }
  r.min_abs_eigenvalue = h.min_fd;
  r.min_abs_eigenvalue_exact = h.min_exact;
  r.expected_degenerate = c.skip_mode == SkipMode::plain && !c.keep_one_incoming;
  r.degenerate = r.max_column_mismatch == 0.0;
  r.passed = r.degenerate == r.expected_degenerate;
  r.detail = r.expected_degenerate ? "outgoing-weight columns must be exactly zero"
                                   : "outgoing-weight columns must be nonzero";
  return r;
}

std::string to_json(const DegeneracyReport& r) {
  nlohmann::ordered_json j;
  j["check"] = r.check;
  j["skip_mode"] = to_string(r.skip_mode);
  j["layer"] = r.layer;
  j["units"] = r.units;
  j["parameter_count"] = r.parameter_count;
  j["max_column_mismatch"] = r.max_column_mismatch;
  j["min_abs_eigenvalue"] = r.min_abs_eigenvalue;
  j["min_abs_eigenvalue_exact"] = r.min_abs_eigenvalue_exact;
  j["expected_degenerate"] = r.expected_degenerate;
  j["degenerate"] = r.degenerate;
  j["passed"] = r.passed;
  j["detail"] = r.detail;
  return j.dump(2);
}

}  // namespace deglab
