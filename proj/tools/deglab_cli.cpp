// deglab command-line tool.

#include "deglab/error.hpp"
#include "deglab/harness.hpp"
#include "deglab/hvp.hpp"
#include "deglab/lineardyn.hpp"
#include "deglab/numfmt.hpp"
#include "deglab/plotdata.hpp"
#include "deglab/skipdesign.hpp"
#include "deglab/spectrum.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using deglab::Error;
using deglab::ErrorKind;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  int jobs = 1;
};

void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw Error(ErrorKind::io, "cannot create " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) throw Error(ErrorKind::io, "cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

deglab::ExperimentConfig experiment(const Globals& g) {
  deglab::ExperimentConfig cfg;
  if (!g.config.empty()) cfg = deglab::load_experiment_config(g.config);
  if (g.seed) cfg.seed_base = *g.seed;
  cfg.validate();
  return cfg;
}

void require_jobs(const Globals& g) {
  if (g.jobs < 1) throw Error(ErrorKind::config, "--jobs must be >= 1");
}

// train ---------------------------------------------------------------------

struct TrainArgs {
  int run = 0;
};

int cmd_train(const Globals& g, const TrainArgs& a) {
  const auto cfg = experiment(g);
  if (a.run < 0 || a.run >= cfg.runs) throw Error(ErrorKind::config, "--run must be in [0, runs)");
  const auto d = deglab::load_dataset(cfg.dataset);
  const auto r = deglab::run_single(cfg, d, a.run);
  deglab::write_run_files(g.out, r, cfg);
  if (!r.ok) {
    std::cerr << "run " << a.run << " failed: " << r.error << '\n';
    return 3;
  }
  const auto& last = r.history.epochs.back();
  std::cout << "run " << a.run << " seed " << r.seed << ": epoch " << last.epoch << " accuracy "
            << deglab::format_double(last.train_accuracy) << " loss " << deglab::format_double(last.train_loss)
            << '\n';
  return 0;
}

// campaign ------------------------------------------------------------------

struct CampaignArgs {
  bool fresh = false;
  int stop_after = -1;
  int best_worst = 0;
};

int cmd_campaign(const Globals& g, const CampaignArgs& a) {
  require_jobs(g);
  const auto cfg = experiment(g);
  deglab::CampaignOptions opts;
  opts.jobs = g.jobs;
  opts.resume = !a.fresh;
  opts.stop_after = a.stop_after;
  const auto c = deglab::run_campaign(cfg, g.out, opts);
  std::cout << "epoch,mean_accuracy,stderr_accuracy,runs\n";
  for (const auto& s : c.summary)
    std::cout << s.epoch << ',' << deglab::format_double(s.mean_accuracy) << ','
              << deglab::format_double(s.stderr_accuracy) << ',' << s.runs << '\n';
  std::cout << c.ok_runs() << '/' << c.runs.size() << " runs ok\n";
  if (a.best_worst > 0) {
    const auto report = deglab::best_worst_analysis(c, a.best_worst);
    write_text(fs::path(g.out) / "best_worst.json", deglab::to_json(report).dump(2) + "\n");
  }
  return 0;
}

// spectrum / fit ------------------------------------------------------------

struct SpectrumArgs {
  int run = 0;
  int epoch = 0;
  int probes = 0;
  std::size_t examples = 0;
  int grid_points = 0;
};

int cmd_spectrum(const Globals& g, const SpectrumArgs& a) {
  auto cfg = experiment(g);
  if (a.epoch < 0) throw Error(ErrorKind::config, "--epoch must be >= 0");
  if (cfg.architecture.mid_norm)
    throw Error(ErrorKind::unsupported_scheme, "Hessian-vector products are not available with mid_norm");
  if (a.run < 0 || a.run >= cfg.runs) throw Error(ErrorKind::config, "--run must be in [0, runs)");
  cfg.train.epochs = a.epoch;
  cfg.snapshots.epochs = {a.epoch};
  cfg.snapshots.metrics = false;
  cfg.snapshots.spectrum = true;
  if (a.probes > 0) cfg.snapshots.probes = a.probes;
  if (a.examples > 0) cfg.snapshots.hessian_examples = a.examples;
  if (a.grid_points > 0) cfg.snapshots.grid_points = a.grid_points;
  cfg.validate();
  const auto d = deglab::load_dataset(cfg.dataset);
  const auto r = deglab::run_single(cfg, d, a.run);
  if (!r.ok || r.spectra.empty()) throw Error(ErrorKind::numeric_overflow, "run failed: " + r.error);
  const auto& s = r.spectra.front();
  const std::string text = deglab::to_json(s.moments, s.fit, s.epoch) + "\n";
  write_text(fs::path(g.out) / "spectrum.json", text);
  std::cout << text;
  return 0;
}

struct FitArgs {
  std::string moments;
  int grid_points = 54;
  int row = 0;
};

// Accepts {"m1": .., "m4": ..} (optionally with "epoch") or {"moments": [m1, m2, m3, m4]},
// or a CSV whose header names m1..m4 (and optionally epoch).
std::pair<deglab::Moments, int> read_moments(const fs::path& path, int row) {
  const std::string text = read_text(path);
  deglab::Moments m{};
  int epoch = 0;
  if (path.extension() == ".json") {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
      if (j.contains("moments")) {
        const auto v = j.at("moments").get<std::vector<double>>();
        if (v.size() != 4) throw Error(ErrorKind::format, "\"moments\" needs 4 entries");
        for (int k = 0; k < 4; ++k) m[k] = v[k];
      } else {
        for (int k = 0; k < 4; ++k) m[k] = j.at("m" + std::to_string(k + 1)).get<double>();
      }
      epoch = j.value("epoch", 0);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::format, path.string() + ": " + e.what());
    }
    return {m, epoch};
  }
  std::istringstream in(text);
  std::string header;
  if (!std::getline(in, header)) throw Error(ErrorKind::format, path.string() + ": empty file");
  const auto names = deglab::split(header, ',');
  auto column = [&](std::string_view name) -> int {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<int>(i);
    return -1;
  };
  int cols[4];
  for (int k = 0; k < 4; ++k) {
    cols[k] = column("m" + std::to_string(k + 1));
    if (cols[k] < 0) throw Error(ErrorKind::format, path.string() + ": missing column m" + std::to_string(k + 1));
  }
  const int epoch_col = column("epoch");
  std::string line;
  int seen = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (seen++ != row) continue;
    const auto f = deglab::split(line, ',');
    if (f.size() != names.size()) throw Error(ErrorKind::format, path.string() + ": ragged row");
    for (int k = 0; k < 4; ++k) m[k] = deglab::parse_double(f[static_cast<std::size_t>(cols[k])]);
    if (epoch_col >= 0) epoch = static_cast<int>(deglab::parse_int(f[static_cast<std::size_t>(epoch_col)]));
    return {m, epoch};
  }
  throw Error(ErrorKind::format, path.string() + ": no data row " + std::to_string(row));
}

int cmd_fit(const Globals& g, const FitArgs& a) {
  require_jobs(g);
  const auto [m, epoch] = read_moments(a.moments, a.row);
  const auto grid = deglab::GridSpec::standard(a.grid_points);
  const auto fit = deglab::fit_mixture(m, grid, g.jobs);
  deglab::SpectralMoments sm;
  sm.m = m;
  const std::string text = deglab::to_json(sm, fit, epoch) + "\n";
  write_text(fs::path(g.out) / "fit.json", text);
  std::cout << text;
  return 0;
}

// metrics -------------------------------------------------------------------

struct MetricsArgs {
  std::string campaign;
  int best_worst = 0;
  int first = 1;
  int last = -1;
  int run = 0;
  int epoch = 0;
};

int cmd_metrics(const Globals& g, const MetricsArgs& a) {
  if (!a.campaign.empty()) {
    if (a.best_worst < 1) throw Error(ErrorKind::config, "--best-worst k (>= 1) is required with --campaign");
    const auto c = deglab::load_campaign(a.campaign);
    const auto report = deglab::best_worst_analysis(c, a.best_worst, a.first, a.last);
    const std::string text = deglab::to_json(report).dump(2) + "\n";
    write_text(fs::path(g.out) / "best_worst.json", text);
    std::cout << text;
    return 0;
  }
  auto cfg = experiment(g);
  if (a.epoch < 0) throw Error(ErrorKind::config, "--epoch must be >= 0");
  if (a.run < 0 || a.run >= cfg.runs) throw Error(ErrorKind::config, "--run must be in [0, runs)");
  cfg.train.epochs = a.epoch;
  cfg.snapshots.epochs = {a.epoch};
  cfg.snapshots.metrics = true;
  cfg.snapshots.spectrum = false;
  const auto d = deglab::load_dataset(cfg.dataset);
  const auto r = deglab::run_single(cfg, d, a.run);
  if (!r.ok) throw Error(ErrorKind::numeric_overflow, "run failed: " + r.error);
  std::ostringstream out;
  deglab::write_metrics_csv(out, r.snapshots);
  write_text(fs::path(g.out) / "metrics.csv", out.str());
  std::cout << out.str();
  return 0;
}

// design-skip ---------------------------------------------------------------

struct SkipArgs {
  std::string kind = "identity";
  int n = 128;
  int k = 0;
  double tau = 0.0;
};

int cmd_design_skip(const Globals& g, const SkipArgs& a) {
  deglab::SkipSpec spec;
  spec.kind = deglab::parse_skip_kind(a.kind);
  spec.n = a.n;
  spec.k = a.k;
  spec.tau = a.tau;
  spec.seed = g.seed.value_or(0);
  spec.validate();

  nlohmann::ordered_json report;
  report["kind"] = deglab::to_string(spec.kind);
  report["n"] = spec.n;
  report["k"] = spec.k;
  report["tau"] = spec.tau;
  report["seed"] = spec.seed;
  deglab::Matrix sigma;
  if (spec.kind == deglab::SkipKind::designed) {
    const auto ds = deglab::designed_skip(spec.n, spec.tau, spec.seed);
    sigma = ds.sigma;
    report["similarity"] = nlohmann::ordered_json::parse(deglab::to_json(deglab::verify_similarity(ds.sigma, ds.t, ds.o)));
  } else {
    sigma = deglab::build_skip(spec);
  }
  const deglab::Matrix gram = sigma.transpose() * sigma;
  report["rank"] = deglab::numerical_rank(sigma);
  report["orthogonality_error"] = deglab::max_abs(gram - deglab::Matrix::Identity(spec.n, spec.n));
  report["determinant"] = deglab::determinant(sigma);

  std::ostringstream csv;
  for (Eigen::Index i = 0; i < sigma.rows(); ++i) {
    for (Eigen::Index j = 0; j < sigma.cols(); ++j) csv << (j ? "," : "") << deglab::format_double(sigma(i, j));
    csv << '\n';
  }
  write_text(fs::path(g.out) / "skip.csv", csv.str());
  const std::string text = report.dump(2) + "\n";
  write_text(fs::path(g.out) / "skip_report.json", text);
  std::cout << text;
  return 0;
}

// lineardyn -----------------------------------------------------------------

struct DynArgs {
  std::string system = "two-mode";
  std::string arch = "plain";
  int layers = 10;
  double step = 0.1;
  int iters = 1000;
  double init_std = 1e-4;
  double s = 3.0;
  double lo = -3.0;
  double hi = 3.0;
  int points = 25;
};

int cmd_lineardyn(const Globals& g, const DynArgs& a) {
  const deglab::SkipMode arch = deglab::parse_skip_mode(a.arch);
  deglab::Rng rng(g.seed.value_or(0));
  std::ostringstream out;
  fs::path file;
  if (a.system == "two-mode") {
    const auto sys = deglab::TwoModeSystem::standard();
    const auto init = deglab::TwoModeState::random(sys.hidden(), a.init_std, rng);
    const auto traj = deglab::integrate_two_mode(init, sys, arch, a.step, a.iters);
    deglab::write_two_mode_csv(out, traj, sys, arch);
    file = "two_mode.csv";
    std::cout << "iterations to 90% of s1: " << deglab::iterations_to_threshold(traj, sys, arch) << '\n';
  } else if (a.system == "mode-strength") {
    if (a.layers < 2) throw Error(ErrorKind::config, "--layers must be >= 2");
    deglab::ModeStrengthState st{deglab::gaussian_vector(a.layers - 1, rng, a.init_std), a.s, arch};
    const auto traj = deglab::integrate_mode_strength(st, a.step, a.iters);
    deglab::write_mode_csv(out, traj);
    file = "mode_strength.csv";
    std::cout << "final u: " << deglab::format_double(traj.u.back()) << '\n';
  } else if (a.system == "portrait") {
    deglab::write_portrait_csv(out, deglab::phase_portrait(arch, a.s, a.lo, a.hi, a.points));
    file = "portrait.csv";
  } else {
    throw Error(ErrorKind::config, "unknown --system '" + a.system + "'");
  }
  write_text(fs::path(g.out) / file, out.str());
  return 0;
}

// hessian-check -------------------------------------------------------------

struct CheckArgs {
  std::string check = "overlap";
  std::string arch = "plain";
  int layer = 2;
  int unit_a = 0;
  int unit_b = 1;
  double perturbation = 0.0;
  bool keep_one_incoming = false;
};

int cmd_hessian_check(const Globals& g, const CheckArgs& a) {
  deglab::DegeneracyCase c;
  c.skip_mode = deglab::parse_skip_mode(a.arch);
  c.layer = a.layer;
  c.unit_a = a.unit_a;
  c.unit_b = a.unit_b;
  c.perturbation = a.perturbation;
  c.keep_one_incoming = a.keep_one_incoming;
  c.seed = g.seed.value_or(deglab::DegeneracyCase{}.seed);
  deglab::DegeneracyReport r;
  if (a.check == "overlap")
    r = deglab::verify_overlap_degeneracy(c);
  else if (a.check == "elimination")
    r = deglab::verify_elimination_degeneracy(c);
  else
    throw Error(ErrorKind::config, "unknown --check '" + a.check + "'");
  const std::string text = deglab::to_json(r) + "\n";
  write_text(fs::path(g.out) / "hessian_check.json", text);
  std::cout << text;
  return 0;
}

// search --------------------------------------------------------------------

struct SearchArgs {
  int trials = 20;
  int budget = 2;
  deglab::SearchSpace space;
};

int cmd_search(const Globals& g, const SearchArgs& a) {
  require_jobs(g);
  const auto cfg = experiment(g);
  if (a.trials < 1) throw Error(ErrorKind::config, "--trials must be >= 1");
  if (a.budget < 1) throw Error(ErrorKind::config, "--budget must be >= 1");
  const auto d = deglab::load_dataset(cfg.dataset);
  const auto r = deglab::random_search_biasreg(cfg, d, a.space, a.trials, a.budget, cfg.seed_base, g.jobs);
  write_text(fs::path(g.out) / "search.json", deglab::to_json(r).dump(2) + "\n");
  std::ostringstream csv;
  csv << "rank,trial,mean,stddev,strength,mean_accuracy\n";
  for (std::size_t i = 0; i < r.leaderboard.size(); ++i) {
    const auto& t = r.leaderboard[i];
    csv << i + 1 << ',' << t.trial << ',' << deglab::format_double(t.reg.mean) << ','
        << deglab::format_double(t.reg.stddev) << ',' << deglab::format_double(t.reg.strength) << ','
        << deglab::format_double(t.mean_accuracy) << '\n';
  }
  write_text(fs::path(g.out) / "leaderboard.csv", csv.str());
  std::cout << csv.str();
  return 0;
}

// plotdata ------------------------------------------------------------------

struct PlotArgs {
  std::string kind = "accuracy";
  std::vector<std::string> campaigns;  // label=dir or dir
};

int cmd_plotdata(const Globals& g, const PlotArgs& a) {
  const auto kind = deglab::parse_plot_kind(a.kind);
  std::vector<deglab::LabeledCampaign> results;
  for (const auto& spec : a.campaigns) {
    const auto eq = spec.find('=');
    const fs::path dir = eq == std::string::npos ? spec : spec.substr(eq + 1);
    auto c = deglab::load_campaign(dir);
    std::string label = eq == std::string::npos ? c.config.name : spec.substr(0, eq);
    results.push_back({std::move(label), std::move(c)});
  }
  for (const auto& p : deglab::emit_plot_data(results, kind, g.out)) std::cout << p.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deglab: skip connections and degenerate manifolds in deep networks"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config, "Experiment configuration (JSON)");
  app.add_option("--seed", g.seed, "Seed (overrides the config seed base)");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Worker threads")->capture_default_str();

  int status = 0;

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train one seeded run");
  c_train->add_option("--run", train.run, "Run index")->capture_default_str();
  c_train->callback([&] { status = cmd_train(g, train); });

  CampaignArgs camp;
  auto* c_camp = app.add_subcommand("campaign", "Run or resume a multi-run campaign");
  c_camp->add_flag("--fresh", camp.fresh, "Ignore finished runs on disk");
  c_camp->add_option("--stop-after", camp.stop_after, "Stop after this many new runs");
  c_camp->add_option("--best-worst", camp.best_worst, "Also write a best/worst-k report");
  c_camp->callback([&] { status = cmd_campaign(g, camp); });

  SpectrumArgs spec;
  auto* c_spec = app.add_subcommand("spectrum", "Hessian spectral moments and mixture fit");
  c_spec->add_option("--run", spec.run, "Run index")->capture_default_str();
  c_spec->add_option("--epoch", spec.epoch, "Train this many epochs first")->capture_default_str();
  c_spec->add_option("--probes", spec.probes, "Random probes (overrides config)");
  c_spec->add_option("--examples", spec.examples, "Examples in the Hessian batch (overrides config)");
  c_spec->add_option("--grid-points", spec.grid_points, "Grid points per axis (overrides config)");
  c_spec->callback([&] { status = cmd_spectrum(g, spec); });

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "Fit the tail mixture to moments from a CSV or JSON file");
  c_fit->add_option("--moments", fit.moments, "Moments file")->required();
  c_fit->add_option("--grid-points", fit.grid_points, "Grid points per axis")->capture_default_str();
  c_fit->add_option("--row", fit.row, "CSV data row")->capture_default_str();
  c_fit->callback([&] { status = cmd_fit(g, fit); });

  MetricsArgs met;
  auto* c_met = app.add_subcommand("metrics", "Singularity metrics or best/worst analysis");
  c_met->add_option("--campaign", met.campaign, "Campaign directory for best/worst analysis");
  c_met->add_option("--best-worst", met.best_worst, "Group size k");
  c_met->add_option("--first", met.first, "First epoch of the ranking window")->capture_default_str();
  c_met->add_option("--last", met.last, "Last epoch of the ranking window (-1 = final)")->capture_default_str();
  c_met->add_option("--run", met.run, "Run index")->capture_default_str();
  c_met->add_option("--epoch", met.epoch, "Train this many epochs first")->capture_default_str();
  c_met->callback([&] { status = cmd_metrics(g, met); });

  SkipArgs skip;
  auto* c_skip = app.add_subcommand("design-skip", "Build a skip-connectivity matrix");
  c_skip->add_option("--kind", skip.kind, "identity | dense_orthogonal | degraded | designed")->capture_default_str();
  c_skip->add_option("--n", skip.n, "Width")->capture_default_str();
  c_skip->add_option("--k", skip.k, "Distinct columns (degraded)");
  c_skip->add_option("--tau", skip.tau, "Eigenvector correlation decay (designed)");
  c_skip->callback([&] { status = cmd_design_skip(g, skip); });

  DynArgs dyn;
  auto* c_dyn = app.add_subcommand("lineardyn", "Linear-network learning dynamics");
  c_dyn->add_option("--system", dyn.system, "two-mode | mode-strength | portrait")->capture_default_str();
  c_dyn->add_option("--arch", dyn.arch, "plain | residual | hyper_residual")->capture_default_str();
  c_dyn->add_option("--layers", dyn.layers, "Layers (mode-strength)")->capture_default_str();
  c_dyn->add_option("--step", dyn.step, "Euler step")->capture_default_str();
  c_dyn->add_option("--iters", dyn.iters, "Iterations")->capture_default_str();
  c_dyn->add_option("--init-std", dyn.init_std, "Initial weight scale")->capture_default_str();
  c_dyn->add_option("--s", dyn.s, "Target mode strength (mode-strength, portrait)")->capture_default_str();
  c_dyn->add_option("--lo", dyn.lo, "Portrait lower bound")->capture_default_str();
  c_dyn->add_option("--hi", dyn.hi, "Portrait upper bound")->capture_default_str();
  c_dyn->add_option("--points", dyn.points, "Portrait points per axis")->capture_default_str();
  c_dyn->callback([&] { status = cmd_lineardyn(g, dyn); });

  CheckArgs chk;
  auto* c_chk = app.add_subcommand("hessian-check", "Overlap / elimination degeneracy check on a tiny net");
  c_chk->add_option("--check", chk.check, "overlap | elimination")->capture_default_str();
  c_chk->add_option("--arch", chk.arch, "plain | residual")->capture_default_str();
  c_chk->add_option("--layer", chk.layer, "Hidden layer")->capture_default_str();
  c_chk->add_option("--unit-a", chk.unit_a, "Unit")->capture_default_str();
  c_chk->add_option("--unit-b", chk.unit_b, "Overlap partner")->capture_default_str();
  c_chk->add_option("--perturbation", chk.perturbation, "Overlap control perturbation")->capture_default_str();
  c_chk->add_flag("--keep-one-incoming", chk.keep_one_incoming, "Elimination control");
  c_chk->callback([&] { status = cmd_hessian_check(g, chk); });

  SearchArgs srch;
  auto* c_srch = app.add_subcommand("search", "Random search over bias-regularization settings");
  c_srch->add_option("--trials", srch.trials, "Trials")->capture_default_str();
  c_srch->add_option("--budget", srch.budget, "Epochs per trial")->capture_default_str();
  c_srch->add_option("--mean-lo", srch.space.mean_lo)->capture_default_str();
  c_srch->add_option("--mean-hi", srch.space.mean_hi)->capture_default_str();
  c_srch->add_option("--stddev-lo", srch.space.stddev_lo)->capture_default_str();
  c_srch->add_option("--stddev-hi", srch.space.stddev_hi)->capture_default_str();
  c_srch->add_option("--strength-lo", srch.space.strength_lo)->capture_default_str();
  c_srch->add_option("--strength-hi", srch.space.strength_hi)->capture_default_str();
  c_srch->callback([&] { status = cmd_search(g, srch); });

  PlotArgs plot;
  auto* c_plot = app.add_subcommand("plotdata", "Emit figure-ready CSV files and a manifest");
  c_plot->add_option("--kind", plot.kind, "accuracy | tails | metrics | gradients | portrait")->capture_default_str();
  c_plot->add_option("--campaign", plot.campaigns, "Campaign directory, optionally label=dir");
  c_plot->callback([&] { status = cmd_plotdata(g, plot); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const Error& e) {
    std::cerr << "deglab: " << e.what() << '\n';
    return deglab::exit_code(e.kind());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "deglab: config: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "deglab: io: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "deglab: internal error: " << e.what() << '\n';
    return 1;
  }
  return status;
}
