#pragma once

// Distance-to-singularity instrumentation: incoming-weight norms, positive
// overlaps between incoming weight vectors, zero-response probability and
// activity-gradient norms.

#include "deglab/network.hpp"

#include <iosfwd>
#include <vector>

namespace deglab {

/// Per hidden layer: mean over units of the l2 norm of the unit's incoming
/// weights (bias excluded).
std::vector<double> incoming_norms(const ModelParams& params, const ArchitectureConfig& arch);

enum class OverlapKind { cosine, pearson };

/// Per hidden layer: mean over unordered unit pairs of max(0, cos) between the
/// incoming weight vectors. Two zero vectors overlap 1, a zero vector and a
/// nonzero one overlap 0. `pearson` centres each vector first. Layers with one
/// unit report 0.
std::vector<double> weight_overlap(const ModelParams& params, const ArchitectureConfig& arch,
                                   OverlapKind kind = OverlapKind::cosine);

/// Same statistic for the columns of one matrix.
double mean_positive_overlap(const Matrix& incoming, OverlapKind kind = OverlapKind::cosine);

struct ZeroCount {
  std::size_t zeros = 0;
  std::size_t total = 0;

  double probability() const noexcept { return total ? static_cast<double>(zeros) / static_cast<double>(total) : 0.0; }
};

/// Exact zeros among the hidden activities of a trace (post-skip values).
ZeroCount count_zero_responses(const ForwardTrace& trace);

/// Fraction of (hidden unit, example) pairs with activity exactly 0 over the
/// whole dataset.
double zero_response_prob(const ModelParams& params, const ArchitectureConfig& arch, const Dataset& d,
                          std::size_t chunk = 1000);

/// Per layer: batch mean of per-example ||dE_i/dx_l||.
std::vector<double> activity_gradient_norms(const BackwardResult& back);

struct SingularitySnapshot {
  int epoch = 0;
  std::vector<double> incoming_norm;
  std::vector<double> overlap;
  double zero_response_prob = 0.0;
  std::vector<double> grad_norm;
};

/// `monitor` supplies the activity gradients, `d` the zero-response pass.
SingularitySnapshot take_snapshot(int epoch, const ModelParams& params, const ArchitectureConfig& arch,
                                  const Dataset& d, const Batch& monitor, OverlapKind kind = OverlapKind::cosine);

/// CSV: epoch,layer,mean_incoming_norm,mean_overlap,grad_norm,zero_response_prob
void write_metrics_csv(std::ostream& out, const std::vector<SingularitySnapshot>& snaps);
std::vector<SingularitySnapshot> read_metrics_csv(std::istream& in);

}  // namespace deglab
