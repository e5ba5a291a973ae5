#include "deglab/harness.hpp"

#include "deglab/error.hpp"
#include "deglab/hvp.hpp"
#include "deglab/numfmt.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace deglab {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

fs::path data_root() {
  const char* env = std::getenv("DEGLAB_DATA_DIR");
  return env && *env ? fs::path(env) : fs::path("data");
}

Dataset load_dataset(const DatasetSpec& spec) {
  auto resolve = [](const std::string& p, const char* fallback) {
    const fs::path path = p.empty() ? fs::path(fallback) : fs::path(p);
    return path.is_absolute() ? path : data_root() / path;
  };
  Dataset d;
  if (spec.kind == "cifar10") {
    d = load_cifar10(resolve(spec.path, "cifar-10-batches-bin/data_batch_1.bin"));
  } else if (spec.kind == "cifar100") {
    d = load_cifar100_coarse(resolve(spec.path, "cifar-100-binary/train.bin"));
  } else if (spec.kind == "synthetic_images") {
    Rng rng(spec.seed);
    d = synthetic_images(spec.classes, spec.per_class, rng);
  } else if (spec.kind == "synthetic_clusters") {
    Rng rng(spec.seed);
    d = synthetic_clusters(spec.classes, spec.dim, spec.per_class, spec.spread, rng);
  } else if (spec.kind == "csv") {
    if (spec.path.empty()) throw Error(ErrorKind::config, "csv dataset needs a path");
    d = read_csv(resolve(spec.path, ""));
  } else {
    throw Error(ErrorKind::config, "unknown dataset kind '" + spec.kind + "'");
  }
  if (spec.examples > 0) d = head(d, spec.examples);
  if (spec.mirror) d = augment_mirror(d, kCifarSide, kCifarSide, kCifarChannels);
  d.validate();
  return d;
}

void ExperimentConfig::validate() const {
  if (runs < 1) throw Error(ErrorKind::config, "runs must be >= 1");
  train.validate();
  if (architecture.hidden_layers < 1 || architecture.width < 1)
    throw Error(ErrorKind::config, "hidden_layers and width must be >= 1");
  if (architecture.init == InitScheme::malicious && architecture.skip_mode != SkipMode::residual)
    throw Error(ErrorKind::config, "malicious initialization needs a residual network");
  for (int e : snapshots.epochs)
    if (e < 0 || e > train.epochs)
      throw Error(ErrorKind::config, "snapshot epoch " + std::to_string(e) + " outside 0.." + std::to_string(train.epochs));
  if (snapshots.probes < 1) throw Error(ErrorKind::config, "snapshot probes must be >= 1");
  if (snapshots.grid_points < 2) throw Error(ErrorKind::config, "grid_points must be >= 2");
  if (bias_reg && (bias_reg->stddev < 0.0 || bias_reg->strength < 0.0))
    throw Error(ErrorKind::config, "bias_reg stddev and strength must be >= 0");
}

namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config, std::string("config field '") + key + "': " + e.what());
  }
}

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw Error(ErrorKind::config, "unknown activation '" + s + "'");
}

InitScheme parse_init(const std::string& s) {
  if (s == "glorot") return InitScheme::glorot;
  if (s == "malicious") return InitScheme::malicious;
  throw Error(ErrorKind::config, "unknown init scheme '" + s + "'");
}

OverlapKind parse_overlap(const std::string& s) {
  if (s == "cosine") return OverlapKind::cosine;
  if (s == "pearson") return OverlapKind::pearson;
  throw Error(ErrorKind::config, "unknown overlap kind '" + s + "'");
}

// Typos in a config would otherwise fall back to defaults silently.
void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorKind::config, where + " must be a JSON object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || item.key() == k;
    if (!ok) throw Error(ErrorKind::config, "unknown key '" + item.key() + "' in " + where);
  }
}

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

}  // namespace

ExperimentConfig parse_experiment_config(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::config, "config must be a JSON object");
  const int version = get_or(j, "schema_version", -1);
  if (version != kConfigSchemaVersion)
    throw Error(ErrorKind::config, "config schema_version must be " + std::to_string(kConfigSchemaVersion));
  ExperimentConfig c;
  c.name = get_or<std::string>(j, "name", c.name);
  c.runs = get_or(j, "runs", c.runs);
  c.seed_base = get_or<std::uint64_t>(j, "seed_base", c.seed_base);

  reject_unknown(j, {"schema_version", "name", "runs", "seed_base", "dataset", "architecture", "train", "bias_reg", "snapshots"},
                 "config");
  const json ds = get_or(j, "dataset", json::object());
  reject_unknown(ds, {"kind", "path", "examples", "mirror", "classes", "per_class", "dim", "spread", "seed"}, "dataset");
  c.dataset.kind = get_or<std::string>(ds, "kind", c.dataset.kind);
  c.dataset.path = get_or<std::string>(ds, "path", c.dataset.path);
  c.dataset.examples = get_or<std::size_t>(ds, "examples", c.dataset.examples);
  c.dataset.mirror = get_or(ds, "mirror", c.dataset.mirror);
  c.dataset.classes = get_or(ds, "classes", c.dataset.classes);
  c.dataset.per_class = get_or(ds, "per_class", c.dataset.per_class);
  c.dataset.dim = get_or(ds, "dim", c.dataset.dim);
  c.dataset.spread = get_or(ds, "spread", c.dataset.spread);
  c.dataset.seed = get_or<std::uint64_t>(ds, "seed", c.dataset.seed);

  const json a = get_or(j, "architecture", json::object());
  reject_unknown(a, {"hidden_layers", "width", "skip_mode", "skip", "hyper_bank", "activation", "mid_norm", "init"},
                 "architecture");
  auto& arch = c.architecture;
  arch.hidden_layers = get_or(a, "hidden_layers", arch.hidden_layers);
  arch.width = get_or(a, "width", arch.width);
  arch.skip_mode = parse_skip_mode(get_or<std::string>(a, "skip_mode", to_string(arch.skip_mode)));
  const json skip = get_or(a, "skip", json::object());
  reject_unknown(skip, {"kind", "k", "tau"}, "architecture.skip");
  arch.skip_kind = parse_skip_kind(get_or<std::string>(skip, "kind", to_string(arch.skip_kind)));
  arch.skip_k = get_or(skip, "k", arch.skip_k);
  arch.skip_tau = get_or(skip, "tau", arch.skip_tau);
  arch.hyper_bank = get_or(a, "hyper_bank", arch.hyper_bank);
  arch.activation = parse_activation(get_or<std::string>(a, "activation", "relu"));
  arch.mid_norm = get_or(a, "mid_norm", arch.mid_norm);
  arch.init = parse_init(get_or<std::string>(a, "init", "glorot"));

  const json t = get_or(j, "train", json::object());
  reject_unknown(t, {"learning_rate", "batch_size", "beta1", "beta2", "epsilon", "epochs", "monitor_examples"}, "train");
  c.train.learning_rate = get_or(t, "learning_rate", c.train.learning_rate);
  c.train.batch_size = get_or(t, "batch_size", c.train.batch_size);
  c.train.beta1 = get_or(t, "beta1", c.train.beta1);
  c.train.beta2 = get_or(t, "beta2", c.train.beta2);
  c.train.epsilon = get_or(t, "epsilon", c.train.epsilon);
  c.train.epochs = get_or(t, "epochs", c.train.epochs);
  c.train.monitor_examples = get_or<std::size_t>(t, "monitor_examples", c.train.monitor_examples);

  if (j.contains("bias_reg") && !j.at("bias_reg").is_null()) {
    const json& b = j.at("bias_reg");
    reject_unknown(b, {"mean", "stddev", "strength"}, "bias_reg");
    c.bias_reg = BiasRegSpec{get_or(b, "mean", 0.0), get_or(b, "stddev", 0.0), get_or(b, "strength", 0.0)};
  }

  const json s = get_or(j, "snapshots", json::object());
  reject_unknown(s, {"epochs", "metrics", "spectrum", "probes", "hessian_examples", "grid_points", "overlap"}, "snapshots");
  c.snapshots.epochs = get_or(s, "epochs", c.snapshots.epochs);
  c.snapshots.metrics = get_or(s, "metrics", c.snapshots.metrics);
  c.snapshots.spectrum = get_or(s, "spectrum", c.snapshots.spectrum);
  c.snapshots.probes = get_or(s, "probes", c.snapshots.probes);
  c.snapshots.hessian_examples = get_or<std::size_t>(s, "hessian_examples", c.snapshots.hessian_examples);
  c.snapshots.grid_points = get_or(s, "grid_points", c.snapshots.grid_points);
  c.snapshots.overlap = parse_overlap(get_or<std::string>(s, "overlap", "cosine"));

  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::config, path.string() + ": " + e.what());
  }
  return parse_experiment_config(j);
}

ordered_json to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["name"] = c.name;
  j["runs"] = c.runs;
  j["seed_base"] = c.seed_base;
  j["dataset"] = {{"kind", c.dataset.kind},        {"path", c.dataset.path},   {"examples", c.dataset.examples},
                  {"mirror", c.dataset.mirror},    {"classes", c.dataset.classes}, {"per_class", c.dataset.per_class},
                  {"dim", c.dataset.dim},          {"spread", c.dataset.spread}, {"seed", c.dataset.seed}};
  const auto& a = c.architecture;
  j["architecture"] = {{"hidden_layers", a.hidden_layers},
                       {"width", a.width},
                       {"skip_mode", to_string(a.skip_mode)},
                       {"skip", {{"kind", to_string(a.skip_kind)}, {"k", a.skip_k}, {"tau", a.skip_tau}}},
                       {"hyper_bank", a.hyper_bank},
                       {"activation", a.activation == Activation::relu ? "relu" : "tanh"},
                       {"mid_norm", a.mid_norm},
                       {"init", a.init == InitScheme::glorot ? "glorot" : "malicious"}};
  j["train"] = {{"learning_rate", c.train.learning_rate}, {"batch_size", c.train.batch_size},
                {"beta1", c.train.beta1},                 {"beta2", c.train.beta2},
                {"epsilon", c.train.epsilon},             {"epochs", c.train.epochs},
                {"monitor_examples", c.train.monitor_examples}};
  if (c.bias_reg)
    j["bias_reg"] = {{"mean", c.bias_reg->mean}, {"stddev", c.bias_reg->stddev}, {"strength", c.bias_reg->strength}};
  else
    j["bias_reg"] = nullptr;
  j["snapshots"] = {{"epochs", c.snapshots.epochs},
                    {"metrics", c.snapshots.metrics},
                    {"spectrum", c.snapshots.spectrum},
                    {"probes", c.snapshots.probes},
                    {"hessian_examples", c.snapshots.hessian_examples},
                    {"grid_points", c.snapshots.grid_points},
                    {"overlap", c.snapshots.overlap == OverlapKind::cosine ? "cosine" : "pearson"}};
  return j;
}

std::string config_digest(const ExperimentConfig& cfg) { return hex64(fnv1a(to_json(cfg).dump())); }

std::uint64_t run_seed(const ExperimentConfig& cfg, int run) { return cfg.seed_base + static_cast<std::uint64_t>(run); }

std::uint64_t stream_seed(std::uint64_t seed, SeedStream s) { return derive_seed(seed, static_cast<std::uint64_t>(s)); }

ArchitectureConfig build_architecture(const ArchitectureSpec& spec, int input_dim, int class_count,
                                      std::uint64_t seed) {
  ArchitectureConfig a;
  a.hidden_layers = spec.hidden_layers;
  a.width = spec.width;
  a.input_dim = input_dim;
  a.class_count = class_count;
  a.skip_mode = spec.skip_mode;
  a.activation = spec.activation;
  a.mid_norm = spec.mid_norm;
  a.loss = LossKind::cross_entropy;
  if (spec.skip_mode != SkipMode::plain && spec.skip_kind != SkipKind::identity)
    a.skip_matrix = build_skip({spec.skip_kind, spec.width, spec.skip_k, spec.skip_tau, stream_seed(seed, SeedStream::skip)});
  if (spec.skip_mode == SkipMode::hyper_residual) {
    if (spec.hyper_bank)
      a.hyper_skips = hyper_skip_bank(spec.width, spec.hidden_layers, stream_seed(seed, SeedStream::hyper));
    else
      a.hyper_skips.assign(static_cast<std::size_t>(std::max(spec.hidden_layers - 2, 0)),
                           Matrix::Identity(spec.width, spec.width));
  }
  a.validate();
  return a;
}

RunResult run_single(const ExperimentConfig& cfg, const Dataset& d, int run) {
  RunResult r;
  r.run = run;
  r.seed = run_seed(cfg, run);
  const ArchitectureConfig arch = build_architecture(cfg.architecture, static_cast<int>(d.dim()), d.class_count, r.seed);
  Rng init(stream_seed(r.seed, SeedStream::init));
  ModelParams params = init_params(arch, cfg.architecture.init, init);
  std::optional<BiasRegConfig> reg;
  if (cfg.bias_reg) {
    Rng rb(stream_seed(r.seed, SeedStream::bias_targets));
    reg = make_bias_reg(arch, cfg.bias_reg->mean, cfg.bias_reg->stddev, cfg.bias_reg->strength, rb);
  }
  TrainConfig tc = cfg.train;
  tc.shuffle_seed = stream_seed(r.seed, SeedStream::shuffle);

  const auto& snap = cfg.snapshots;
  const bool any_snapshots = !snap.epochs.empty() && (snap.metrics || snap.spectrum);
  Batch monitor, hessian_batch;
  GridSpec grid;
  if (any_snapshots) {
    monitor = make_batch(head(d, tc.monitor_examples));
    if (snap.spectrum) {
      hessian_batch = make_batch(head(d, snap.hessian_examples));
      grid = GridSpec::standard(snap.grid_points);
    }
  }
  TrainCallbacks cb;
  if (any_snapshots)
    cb.on_epoch = [&](int epoch, const ModelParams& p) {
      if (std::find(snap.epochs.begin(), snap.epochs.end(), epoch) == snap.epochs.end()) return;
      if (snap.metrics) r.snapshots.push_back(take_snapshot(epoch, p, arch, d, monitor, snap.overlap));
      if (snap.spectrum && !arch.mid_norm) {
        const HvpOracle oracle(p, arch, hessian_batch, reg);
        SpectrumRecord rec;
        rec.epoch = epoch;
        rec.moments = estimate_moments(oracle, snap.probes,
                                       derive_seed(stream_seed(r.seed, SeedStream::probes), static_cast<std::uint64_t>(epoch)));
        rec.fit = fit_mixture(rec.moments.m, grid);
        r.spectra.push_back(rec);
      }
    };
  try {
    r.history = train(arch, params, d, tc, reg ? &*reg : nullptr, cb);
  } catch (const Error& e) {
    if (exit_code(e.kind()) != 3) throw;
    r.ok = false;
    r.error = e.what();
  }
  return r;
}

std::size_t CampaignResult::ok_runs() const {
  return static_cast<std::size_t>(std::count_if(runs.begin(), runs.end(), [](const RunResult& r) { return r.ok; }));
}

std::pair<double, double> mean_stderr(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size() - 1);
  return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

std::vector<EpochSummary> summarize(const std::vector<RunResult>& runs) {
  std::map<int, std::pair<std::vector<double>, std::vector<double>>> by_epoch;
  for (const auto& r : runs)
    if (r.ok)
      for (const auto& e : r.history.epochs) {
        by_epoch[e.epoch].first.push_back(e.train_accuracy);
        by_epoch[e.epoch].second.push_back(e.train_loss);
      }
  std::vector<EpochSummary> out;
  for (const auto& [epoch, vals] : by_epoch) {
    EpochSummary s;
    s.epoch = epoch;
    std::tie(s.mean_accuracy, s.stderr_accuracy) = mean_stderr(vals.first);
    std::tie(s.mean_loss, s.stderr_loss) = mean_stderr(vals.second);
    s.runs = static_cast<int>(vals.first.size());
    out.push_back(s);
  }
  return out;
}

namespace {

std::string run_dir_name(int run) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run_%03d", run);
  return buf;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write " + p.string());
  return out;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot read " + p.string());
  return in;
}

void write_spectrum_csv(std::ostream& out, const std::vector<SpectrumRecord>& spectra) {
  out << "epoch,m1,m2,m3,m4,se_m1,se_m2,se_m3,se_m4,w,xi,omega,alpha,objective,probes,dim\n";
  for (const auto& s : spectra) {
    out << s.epoch;
    for (double m : s.moments.m) out << ',' << format_double(m);
    for (double e : s.moments.stderr_) out << ',' << format_double(e);
    out << ',' << format_double(s.fit.params.w) << ',' << format_double(s.fit.params.xi) << ','
        << format_double(s.fit.params.omega) << ',' << format_double(s.fit.params.alpha) << ','
        << format_double(s.fit.objective) << ',' << s.moments.probes << ',' << s.moments.dim << '\n';
  }
}

std::vector<SpectrumRecord> read_spectrum_csv(std::istream& in) {
  std::vector<SpectrumRecord> out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 16) throw Error(ErrorKind::format, "spectrum row needs 16 fields");
    SpectrumRecord s;
    s.epoch = static_cast<int>(parse_int(f[0]));
    for (int k = 0; k < 4; ++k) {
      s.moments.m[k] = parse_double(f[1 + k]);
      s.moments.stderr_[k] = parse_double(f[5 + k]);
    }
    s.fit.params = {parse_double(f[9]), parse_double(f[10]), parse_double(f[11]), parse_double(f[12])};
    s.fit.objective = parse_double(f[13]);
    s.moments.probes = static_cast<int>(parse_int(f[14]));
    s.moments.dim = static_cast<Eigen::Index>(parse_int(f[15]));
    out.push_back(s);
  }
  return out;
}

void write_run(const fs::path& dir, const RunResult& r, int hidden_layers, const std::string& digest) {
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "history.csv");
    write_history_csv(out, r.history, hidden_layers);
  }
  {
    auto out = open_out(dir / "metrics.csv");
    write_metrics_csv(out, r.snapshots);
  }
  {
    auto out = open_out(dir / "spectrum.csv");
    write_spectrum_csv(out, r.spectra);
  }
  ordered_json j;
  j["run"] = r.run;
  j["seed"] = r.seed;
  j["status"] = r.ok ? "ok" : "failed";
  j["error"] = r.error;
  j["config_digest"] = digest;
  j["mean_accuracy"] = r.ok ? r.mean_accuracy() : 0.0;
  auto out = open_out(dir / "run.json");
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::io, "failed writing " + (dir / "run.json").string());
}

std::optional<RunResult> load_run(const fs::path& dir, const std::string* expected_digest) {
  if (!fs::exists(dir / "run.json")) return std::nullopt;
  json j;
  try {
    auto in = open_in(dir / "run.json");
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::format, (dir / "run.json").string() + ": " + e.what());
  }
  if (expected_digest && j.value("config_digest", std::string()) != *expected_digest) return std::nullopt;
  RunResult r;
  r.run = j.at("run").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.ok = j.at("status").get<std::string>() == "ok";
  r.error = j.value("error", std::string());
  {
    auto in = open_in(dir / "history.csv");
    r.history = read_history_csv(in);
  }
  {
    auto in = open_in(dir / "metrics.csv");
    r.snapshots = read_metrics_csv(in);
  }
  {
    auto in = open_in(dir / "spectrum.csv");
    r.spectra = read_spectrum_csv(in);
  }
  return r;
}

void write_summary(const fs::path& dir, const CampaignResult& c, bool complete, const std::string& digest) {
  {
    auto out = open_out(dir / "summary.csv");
    out << "epoch,mean_accuracy,stderr_accuracy,mean_loss,stderr_loss,runs\n";
    for (const auto& s : c.summary)
      out << s.epoch << ',' << format_double(s.mean_accuracy) << ',' << format_double(s.stderr_accuracy) << ','
          << format_double(s.mean_loss) << ',' << format_double(s.stderr_loss) << ',' << s.runs << '\n';
  }
  ordered_json j;
  j["name"] = c.config.name;
  j["config_digest"] = digest;
  j["complete"] = complete;
  j["runs"] = c.config.runs;
  j["finished_runs"] = c.runs.size();
  j["ok_runs"] = c.ok_runs();
  std::vector<int> failed;
  for (const auto& r : c.runs)
    if (!r.ok) failed.push_back(r.run);
  j["failed_runs"] = failed;
  j["config"] = to_json(c.config);
  auto out = open_out(dir / "campaign.json");
  out << j.dump(2) << '\n';
}

}  // namespace

CampaignResult run_campaign(const ExperimentConfig& cfg, const fs::path& out_dir, const CampaignOptions& opts) {
  cfg.validate();
  const std::string digest = config_digest(cfg);
  const bool to_disk = !out_dir.empty();
  if (to_disk) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create " + out_dir.string() + ": " + ec.message());
  }

  std::vector<std::optional<RunResult>> slots(static_cast<std::size_t>(cfg.runs));
  std::vector<int> pending;
  for (int run = 0; run < cfg.runs; ++run) {
    if (to_disk && opts.resume)
      slots[static_cast<std::size_t>(run)] = load_run(out_dir / run_dir_name(run), &digest);
    if (!slots[static_cast<std::size_t>(run)]) pending.push_back(run);
  }
  if (opts.stop_after >= 0 && static_cast<std::size_t>(opts.stop_after) < pending.size())
    pending.resize(static_cast<std::size_t>(opts.stop_after));

  if (!pending.empty()) {
    const Dataset d = load_dataset(cfg.dataset);
    detail::parallel_for(pending.size(), opts.jobs, [&](std::size_t i) {
      const int run = pending[i];
      RunResult r = run_single(cfg, d, run);
      if (to_disk) write_run(out_dir / run_dir_name(run), r, cfg.architecture.hidden_layers, digest);
      slots[static_cast<std::size_t>(run)] = std::move(r);
    });
  }

  CampaignResult c;
  c.config = cfg;
  bool complete = true;
  for (auto& s : slots) {
    if (s)
      c.runs.push_back(std::move(*s));
    else
      complete = false;
  }
  c.summary = summarize(c.runs);
  if (to_disk) write_summary(out_dir, c, complete, digest);
  if (complete && c.ok_runs() == 0) throw Error(ErrorKind::numeric_overflow, "all runs of the campaign failed");
  return c;
}

CampaignResult load_campaign(const fs::path& dir) {
  json j;
  try {
    auto in = open_in(dir / "campaign.json");
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::format, (dir / "campaign.json").string() + ": " + e.what());
  }
  CampaignResult c;
  c.config = parse_experiment_config(j.at("config"));
  for (int run = 0; run < c.config.runs; ++run)
    if (auto r = load_run(dir / run_dir_name(run), nullptr)) c.runs.push_back(std::move(*r));
  c.summary = summarize(c.runs);
  return c;
}

namespace {

GroupStats group_stats(const CampaignResult& c, const std::vector<std::pair<int, double>>& picks) {
  GroupStats g;
  std::vector<std::vector<double>> inc, ovl;
  double acc = 0.0;
  for (const auto& [run, mean] : picks) {
    g.runs.push_back(run);
    acc += mean;
    const auto it = std::find_if(c.runs.begin(), c.runs.end(), [run = run](const RunResult& r) { return r.run == run; });
    bool has_trained = false;
    for (const auto& s : it->snapshots) has_trained |= s.epoch >= 1;
    std::vector<double> run_inc, run_ovl;
    int count = 0;
    for (const auto& s : it->snapshots) {
      if (has_trained && s.epoch < 1) continue;
      if (run_inc.empty()) {
        run_inc.assign(s.incoming_norm.size(), 0.0);
        run_ovl.assign(s.overlap.size(), 0.0);
      }
      for (std::size_t l = 0; l < s.incoming_norm.size(); ++l) {
        run_inc[l] += s.incoming_norm[l];
        run_ovl[l] += s.overlap[l];
      }
      ++count;
    }
    for (auto& v : run_inc) v /= std::max(count, 1);
    for (auto& v : run_ovl) v /= std::max(count, 1);
    if (count) {
      inc.push_back(run_inc);
      ovl.push_back(run_ovl);
    }
  }
  g.mean_accuracy = picks.empty() ? 0.0 : acc / static_cast<double>(picks.size());
  if (!inc.empty()) {
    g.incoming_by_layer.assign(inc[0].size(), 0.0);
    g.overlap_by_layer.assign(ovl[0].size(), 0.0);
    for (std::size_t r = 0; r < inc.size(); ++r)
      for (std::size_t l = 0; l < inc[0].size(); ++l) {
        g.incoming_by_layer[l] += inc[r][l] / static_cast<double>(inc.size());
        g.overlap_by_layer[l] += ovl[r][l] / static_cast<double>(ovl.size());
      }
    for (double v : g.incoming_by_layer) g.mean_incoming_norm += v / static_cast<double>(g.incoming_by_layer.size());
    for (double v : g.overlap_by_layer) g.mean_overlap += v / static_cast<double>(g.overlap_by_layer.size());
  }
  return g;
}

}  // namespace

BestWorstReport best_worst_analysis(const CampaignResult& c, int k, int first_epoch, int last_epoch) {
  if (k < 1) throw Error(ErrorKind::config, "best/worst group size must be >= 1");
  BestWorstReport rep;
  rep.k = k;
  rep.first_epoch = first_epoch;
  rep.last_epoch = last_epoch;
  for (const auto& r : c.runs)
    if (r.ok) rep.ranking.emplace_back(r.run, r.mean_accuracy(first_epoch, last_epoch));
  if (rep.ranking.size() < static_cast<std::size_t>(2 * k))
    throw Error(ErrorKind::config, "best/worst analysis needs at least " + std::to_string(2 * k) +
                                       " successful runs, got " + std::to_string(rep.ranking.size()));
  std::stable_sort(rep.ranking.begin(), rep.ranking.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  const auto kk = static_cast<std::size_t>(k);
  rep.best = group_stats(c, {rep.ranking.begin(), rep.ranking.begin() + static_cast<std::ptrdiff_t>(kk)});
  rep.worst = group_stats(c, {rep.ranking.end() - static_cast<std::ptrdiff_t>(kk), rep.ranking.end()});
  return rep;
}

ordered_json to_json(const BestWorstReport& r) {
  auto group = [](const GroupStats& g) {
    ordered_json j;
    j["runs"] = g.runs;
    j["mean_accuracy"] = g.mean_accuracy;
    j["mean_incoming_norm"] = g.mean_incoming_norm;
    j["mean_overlap"] = g.mean_overlap;
    j["incoming_by_layer"] = g.incoming_by_layer;
    j["overlap_by_layer"] = g.overlap_by_layer;
    return j;
  };
  ordered_json j;
  j["k"] = r.k;
  j["first_epoch"] = r.first_epoch;
  j["last_epoch"] = r.last_epoch;
  j["best"] = group(r.best);
  j["worst"] = group(r.worst);
  ordered_json ranking = ordered_json::array();
  for (const auto& [run, acc] : r.ranking) ranking.push_back({{"run", run}, {"mean_accuracy", acc}});
  j["ranking"] = ranking;
  return j;
}

SearchResult random_search_biasreg(const ExperimentConfig& cfg, const Dataset& d, const SearchSpace& space, int trials,
                                   int budget_epochs, std::uint64_t seed, int jobs) {
  if (trials < 1) throw Error(ErrorKind::config, "search needs at least one trial");
  if (budget_epochs < 1) throw Error(ErrorKind::config, "search budget must be >= 1 epoch");
  if (space.strength_lo <= 0.0 || space.strength_hi < space.strength_lo || space.mean_hi < space.mean_lo ||
      space.stddev_lo < 0.0 || space.stddev_hi < space.stddev_lo)
    throw Error(ErrorKind::config, "invalid search space");
  SearchResult res;
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    SearchTrial tr;
    tr.trial = t;
    tr.reg.mean = rng.uniform(space.mean_lo, space.mean_hi);
    tr.reg.stddev = rng.uniform(space.stddev_lo, space.stddev_hi);
    tr.reg.strength = std::exp(rng.uniform(std::log(space.strength_lo), std::log(space.strength_hi)));
    res.trials.push_back(tr);
  }
  const auto runs = static_cast<std::size_t>(cfg.runs);
  std::vector<double> acc(res.trials.size() * runs, 0.0);
  detail::parallel_for(acc.size(), jobs, [&](std::size_t i) {
    ExperimentConfig c = cfg;
    c.bias_reg = res.trials[i / runs].reg;
    c.train.epochs = budget_epochs;
    c.snapshots.epochs.clear();
    const RunResult r = run_single(c, d, static_cast<int>(i % runs));
    acc[i] = r.ok ? r.mean_accuracy() : 0.0;
  });
  for (std::size_t t = 0; t < res.trials.size(); ++t) {
    double sum = 0.0;
    for (std::size_t r = 0; r < runs; ++r) sum += acc[t * runs + r];
    res.trials[t].mean_accuracy = sum / static_cast<double>(runs);
  }
  res.leaderboard = res.trials;
  std::stable_sort(res.leaderboard.begin(), res.leaderboard.end(), [](const SearchTrial& a, const SearchTrial& b) {
    if (a.mean_accuracy != b.mean_accuracy) return a.mean_accuracy > b.mean_accuracy;
    return a.trial < b.trial;
  });
  res.best = res.leaderboard.front();
  return res;
}

ordered_json to_json(const SearchResult& r) {
  auto trial = [](const SearchTrial& t) {
    return ordered_json{{"trial", t.trial},
                        {"mean", t.reg.mean},
                        {"stddev", t.reg.stddev},
                        {"strength", t.reg.strength},
                        {"mean_accuracy", t.mean_accuracy}};
  };
  ordered_json j;
  j["best"] = trial(r.best);
  ordered_json board = ordered_json::array();
  for (const auto& t : r.leaderboard) board.push_back(trial(t));
  j["leaderboard"] = board;
  return j;
}

void write_run_files(const fs::path& dir, const RunResult& r, const ExperimentConfig& cfg) {
  write_run(dir, r, cfg.architecture.hidden_layers, config_digest(cfg));
}

}  // namespace deglab
