#include "deglab/metrics.hpp"

#include "deglab/error.hpp"
#include "deglab/numfmt.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <string>

namespace deglab {

std::vector<double> incoming_norms(const ModelParams& params, const ArchitectureConfig& arch) {
  std::vector<double> out;
  for (int l = 0; l < arch.hidden_layers; ++l)
    out.push_back(params.weights[static_cast<std::size_t>(l)].colwise().norm().mean());
  return out;
}

double mean_positive_overlap(const Matrix& incoming, OverlapKind kind) {
  const Eigen::Index n = incoming.cols();
  if (n < 2) return 0.0;
  Matrix w = incoming;
  if (kind == OverlapKind::pearson) w.rowwise() -= w.colwise().mean();
  const Matrix gram = w.transpose() * w;
  const Vector norms = gram.diagonal().cwiseSqrt();
  double sum = 0.0;
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const bool za = norms[a] == 0.0, zb = norms[b] == 0.0;
      if (za || zb)
        sum += (za && zb) ? 1.0 : 0.0;
      else
        sum += std::max(0.0, gram(a, b) / (norms[a] * norms[b]));
    }
  return sum / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

std::vector<double> weight_overlap(const ModelParams& params, const ArchitectureConfig& arch, OverlapKind kind) {
  std::vector<double> out;
  for (int l = 0; l < arch.hidden_layers; ++l)
    out.push_back(mean_positive_overlap(params.weights[static_cast<std::size_t>(l)], kind));
  return out;
}

ZeroCount count_zero_responses(const ForwardTrace& trace) {
  ZeroCount c;
  for (const auto& x : trace.act) {
    c.zeros += static_cast<std::size_t>((x.array() == 0.0).count());
    c.total += static_cast<std::size_t>(x.size());
  }
  return c;
}

double zero_response_prob(const ModelParams& params, const ArchitectureConfig& arch, const Dataset& d,
                          std::size_t chunk) {
  ZeroCount total;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < d.size(); start += chunk) {
    const std::size_t end = std::min(d.size(), start + chunk);
    idx.resize(end - start);
    for (std::size_t i = start; i < end; ++i) idx[i - start] = i;
    const ZeroCount c = count_zero_responses(forward(params, arch, make_batch(d, idx)));
    total.zeros += c.zeros;
    total.total += c.total;
  }
  return total.probability();
}

std::vector<double> activity_gradient_norms(const BackwardResult& back) {
  std::vector<double> out;
  for (const auto& g : back.act_grad) out.push_back(g.rowwise().norm().mean() * static_cast<double>(g.rows()));
  return out;
}

SingularitySnapshot take_snapshot(int epoch, const ModelParams& params, const ArchitectureConfig& arch,
                                  const Dataset& d, const Batch& monitor, OverlapKind kind) {
  SingularitySnapshot s;
  s.epoch = epoch;
  s.incoming_norm = incoming_norms(params, arch);
  s.overlap = weight_overlap(params, arch, kind);
  s.zero_response_prob = zero_response_prob(params, arch, d);
  s.grad_norm = loss_and_grads(params, arch, monitor).activity_grad_norms;
  return s;
}

void write_metrics_csv(std::ostream& out, const std::vector<SingularitySnapshot>& snaps) {
  out << "epoch,layer,mean_incoming_norm,mean_overlap,grad_norm,zero_response_prob\n";
  for (const auto& s : snaps)
    for (std::size_t l = 0; l < s.incoming_norm.size(); ++l)
      out << s.epoch << ',' << l + 1 << ',' << format_double(s.incoming_norm[l]) << ','
          << format_double(s.overlap[l]) << ',' << format_double(l < s.grad_norm.size() ? s.grad_norm[l] : 0.0)
          << ',' << format_double(s.zero_response_prob) << '\n';
}

std::vector<SingularitySnapshot> read_metrics_csv(std::istream& in) {
  std::vector<SingularitySnapshot> out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 6) throw Error(ErrorKind::format, "metrics row needs 6 fields: " + line);
    const int epoch = static_cast<int>(parse_int(f[0]));
    if (out.empty() || out.back().epoch != epoch) {
      out.emplace_back();
      out.back().epoch = epoch;
    }
    auto& s = out.back();
    s.incoming_norm.push_back(parse_double(f[2]));
    s.overlap.push_back(parse_double(f[3]));
    s.grad_norm.push_back(parse_double(f[4]));
    s.zero_response_prob = parse_double(f[5]);
  }
  return out;
}

}  // namespace deglab
