#pragma once

// Experiment orchestration: JSON configs, seeded multi-run campaigns with
// snapshot hooks, resumable on-disk results, best/worst analysis and the
// bias-regularization random search.

#include "deglab/data.hpp"
#include "deglab/metrics.hpp"
#include "deglab/network.hpp"
#include "deglab/skipdesign.hpp"
#include "deglab/spectrum.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace deglab {

inline constexpr int kConfigSchemaVersion = 1;

/// Root for dataset paths: $DEGLAB_DATA_DIR, or ./data when unset.
std::filesystem::path data_root();

struct DatasetSpec {
  std::string kind = "synthetic_images";  // cifar10 | cifar100 | synthetic_images | synthetic_clusters | csv
  std::string path;                       // relative paths resolve against data_root()
  std::size_t examples = 0;               // 0 = all
  bool mirror = false;
  int classes = 10;       // synthetic kinds
  int per_class = 100;    // synthetic kinds
  int dim = 16;           // synthetic_clusters
  double spread = 0.1;    // synthetic_clusters
  std::uint64_t seed = 0; // synthetic kinds
};

/// Loads (or generates) the dataset and applies mirror / example limits.
Dataset load_dataset(const DatasetSpec& spec);

struct ArchitectureSpec {
  int hidden_layers = 16;
  int width = 32;
  SkipMode skip_mode = SkipMode::plain;
  SkipKind skip_kind = SkipKind::identity;  // adjacent skip
  int skip_k = 0;
  double skip_tau = 0.0;
  bool hyper_bank = true;  // hyper-residual: degraded(n/4) bank, else identity Q_k
  Activation activation = Activation::relu;
  bool mid_norm = false;
  InitScheme init = InitScheme::glorot;
};

struct SnapshotSpec {
  std::vector<int> epochs;  // snapshot epochs (0 = before training)
  bool metrics = true;
  bool spectrum = false;
  int probes = 10;
  std::size_t hessian_examples = 500;
  int grid_points = 54;
  OverlapKind overlap = OverlapKind::cosine;
};

struct BiasRegSpec {
  double mean = 0.0;
  double stddev = 0.0;
  double strength = 0.0;
};

struct ExperimentConfig {
  std::string name = "experiment";
  DatasetSpec dataset;
  ArchitectureSpec architecture;
  TrainConfig train;  // shuffle_seed is derived per run
  std::optional<BiasRegSpec> bias_reg;
  int runs = 1;
  std::uint64_t seed_base = 0;
  SnapshotSpec snapshots;

  void validate() const;
};

ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const ExperimentConfig& cfg);
/// FNV-1a of the canonical JSON form, as 16 hex digits.
std::string config_digest(const ExperimentConfig& cfg);

/// Run seed = seed_base + run index; per-purpose seeds derive from it.
std::uint64_t run_seed(const ExperimentConfig& cfg, int run);
enum class SeedStream : std::uint64_t { init = 1, shuffle = 2, skip = 3, bias_targets = 4, probes = 5, hyper = 6 };
std::uint64_t stream_seed(std::uint64_t run_seed, SeedStream s);

/// Builds the network architecture (skip matrices drawn from the run seed).
ArchitectureConfig build_architecture(const ArchitectureSpec& spec, int input_dim, int class_count,
                                      std::uint64_t run_seed);

struct SpectrumRecord {
  int epoch = 0;
  SpectralMoments moments;
  FitResult fit;
};

struct RunResult {
  int run = 0;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  RunHistory history;
  std::vector<SingularitySnapshot> snapshots;
  std::vector<SpectrumRecord> spectra;

  double mean_accuracy(int first_epoch = 1, int last_epoch = -1) const { return history.mean_accuracy(first_epoch, last_epoch); }
};

/// One seeded run, in memory. Numeric failures are captured in the result.
RunResult run_single(const ExperimentConfig& cfg, const Dataset& d, int run);

/// history.csv, metrics.csv, spectrum.csv and run.json (last) for one run.
void write_run_files(const std::filesystem::path& dir, const RunResult& r, const ExperimentConfig& cfg);

struct EpochSummary {
  int epoch = 0;
  double mean_accuracy = 0.0;
  double stderr_accuracy = 0.0;
  double mean_loss = 0.0;
  double stderr_loss = 0.0;
  int runs = 0;
};

struct CampaignResult {
  ExperimentConfig config;
  std::vector<RunResult> runs;  // ordered by run index
  std::vector<EpochSummary> summary;

  std::size_t ok_runs() const;
};

struct CampaignOptions {
  int jobs = 1;
  bool resume = true;
  /// Execute at most this many new runs, then return (simulated interruption).
  int stop_after = -1;
};

/// Runs (or resumes) a campaign. With a non-empty out_dir every finished run
/// is written to out_dir/run_XXX/ and summary.csv / campaign.json are
/// rewritten; a run whose run.json exists with the same config digest is
/// loaded instead of recomputed. Throws numeric_overflow if all runs failed.
CampaignResult run_campaign(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                            const CampaignOptions& opts = {});

/// Reads a campaign directory written by run_campaign.
CampaignResult load_campaign(const std::filesystem::path& dir);

std::vector<EpochSummary> summarize(const std::vector<RunResult>& runs);

/// Mean and standard error (sample sd / sqrt(n)) of a list.
std::pair<double, double> mean_stderr(const std::vector<double>& xs);

struct GroupStats {
  std::vector<int> runs;
  double mean_accuracy = 0.0;
  double mean_incoming_norm = 0.0;  // over layers and snapshot epochs >= 1
  double mean_overlap = 0.0;
  std::vector<double> incoming_by_layer;
  std::vector<double> overlap_by_layer;
};

struct BestWorstReport {
  int k = 0;
  int first_epoch = 1;
  int last_epoch = -1;
  GroupStats best;
  GroupStats worst;
  std::vector<std::pair<int, double>> ranking;  // (run, mean accuracy), best first
};

/// Ranks successful runs by mean training accuracy over [first, last] epochs
/// (ties by run index) and compares the top and bottom k groups.
BestWorstReport best_worst_analysis(const CampaignResult& r, int k, int first_epoch = 1, int last_epoch = -1);
nlohmann::ordered_json to_json(const BestWorstReport& r);

struct SearchSpace {
  double mean_lo = 0.0, mean_hi = 1.0;
  double stddev_lo = 0.0, stddev_hi = 1.0;
  double strength_lo = 1e-5, strength_hi = 1e-1;  // sampled log-uniformly
};

struct SearchTrial {
  int trial = 0;
  BiasRegSpec reg;
  double mean_accuracy = 0.0;
};

struct SearchResult {
  std::vector<SearchTrial> trials;       // in trial order
  std::vector<SearchTrial> leaderboard;  // best first, ties by trial index
  SearchTrial best;
};

/// Samples (mu, sigma, lambda), trains `cfg.runs` runs per trial for
/// budget_epochs and ranks by mean training accuracy.
SearchResult random_search_biasreg(const ExperimentConfig& cfg, const Dataset& d, const SearchSpace& space, int trials,
                                   int budget_epochs, std::uint64_t seed, int jobs = 1);
nlohmann::ordered_json to_json(const SearchResult& r);

}  // namespace deglab
