#include "deglab/error.hpp"
#include "deglab/harness.hpp"
#include "deglab/hvp.hpp"
#include "deglab/lineardyn.hpp"
#include "deglab/linalg.hpp"
#include "deglab/network.hpp"
#include "deglab/plotdata.hpp"
#include "deglab/skipdesign.hpp"
#include "deglab/spectrum.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <json.hpp>

namespace py = pybind11;
using namespace deglab;

namespace {

py::object json_to_py(const std::string& text) { return py::module_::import("json").attr("loads")(text); }

std::string py_to_json(const py::object& obj) { return py::module_::import("json").attr("dumps")(obj).cast<std::string>(); }

ExperimentConfig config_from(const py::object& obj) {
  if (py::isinstance<py::str>(obj)) return load_experiment_config(obj.cast<std::string>());
  try {
    return parse_experiment_config(nlohmann::json::parse(py_to_json(obj)));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, e.what());
  }
}

py::dict campaign_summary(const CampaignResult& c) {
  py::list summary;
  for (const auto& s : c.summary) {
    py::dict d;
    d["epoch"] = s.epoch;
    d["mean_accuracy"] = s.mean_accuracy;
    d["stderr_accuracy"] = s.stderr_accuracy;
    d["mean_loss"] = s.mean_loss;
    d["stderr_loss"] = s.stderr_loss;
    d["runs"] = s.runs;
    summary.append(d);
  }
  py::list runs;
  for (const auto& r : c.runs) {
    py::dict d;
    d["run"] = r.run;
    d["seed"] = r.seed;
    d["ok"] = r.ok;
    d["error"] = r.error;
    d["mean_accuracy"] = r.ok ? r.mean_accuracy() : 0.0;
    runs.append(d);
  }
  py::dict out;
  out["name"] = c.config.name;
  out["summary"] = summary;
  out["runs"] = runs;
  return out;
}

}  // namespace

PYBIND11_MODULE(_deglab, m) {
  m.doc() = "Skip connections and degenerate manifolds in deep networks";

  // Messages start with the error kind, e.g. "config: ...".
  py::register_exception<Error>(m, "DeglabError", PyExc_RuntimeError);

  m.def("derive_seed", &derive_seed, py::arg("base"), py::arg("stream"));

  m.def(
      "param_count",
      [](int hidden_layers, int width, int input_dim, int class_count) {
        ArchitectureConfig a;
        a.hidden_layers = hidden_layers;
        a.width = width;
        a.input_dim = input_dim;
        a.class_count = class_count;
        a.validate();
        return param_count(a);
      },
      py::arg("hidden_layers"), py::arg("width"), py::arg("input_dim"), py::arg("class_count"));

  // spectrum
  m.def("skew_normal_moments", &skew_normal_moments, py::arg("xi"), py::arg("omega"), py::arg("alpha"));
  m.def("skew_normal_pdf", &skew_normal_pdf, py::arg("x"), py::arg("xi"), py::arg("omega"), py::arg("alpha"));
  m.def(
      "mixture_moments", [](double w, double xi, double omega, double alpha) { return mixture_moments({w, xi, omega, alpha}); },
      py::arg("w"), py::arg("xi"), py::arg("omega"), py::arg("alpha"));
  m.def(
      "fit_mixture",
      [](const Moments& target, int grid_points, int jobs) {
        const FitResult f = fit_mixture(target, GridSpec::standard(grid_points), jobs);
        py::dict d;
        d["w"] = f.params.w;
        d["xi"] = f.params.xi;
        d["omega"] = f.params.omega;
        d["alpha"] = f.params.alpha;
        d["objective"] = f.objective;
        d["index"] = f.index;
        return d;
      },
      py::arg("target"), py::arg("grid_points") = 54, py::arg("jobs") = 1);
  m.def(
      "estimate_moments_dense",
      [](const Matrix& a, int probes, std::uint64_t seed) {
        const SpectralMoments s = estimate_moments(DenseOperator(a), probes, seed);
        return py::make_tuple(s.m, s.stderr_);
      },
      py::arg("matrix"), py::arg("probes"), py::arg("seed"));

  // skip design
  m.def("degraded_skip", &degraded_skip, py::arg("n"), py::arg("k"), py::arg("seed"));
  m.def(
      "designed_skip",
      [](int n, double tau, std::uint64_t seed) {
        const DesignedSkip d = designed_skip(n, tau, seed);
        py::dict out;
        out["sigma"] = d.sigma;
        out["t"] = d.t;
        out["o"] = d.o;
        out["r"] = d.r;
        out["lambda"] = d.lambda;
        out["similarity_residual"] = verify_similarity(d.sigma, d.t, d.o).residual;
        return out;
      },
      py::arg("n"), py::arg("tau"), py::arg("seed"));
  m.def(
      "random_orthogonal",
      [](int n, std::uint64_t seed) {
        Rng rng(seed);
        return random_orthogonal(n, rng);
      },
      py::arg("n"), py::arg("seed"));
  m.def("numerical_rank", &numerical_rank, py::arg("matrix"), py::arg("tol") = 1e-10);

  // Hessian degeneracy checks
  auto check = [](bool overlap, const std::string& arch, int layer, int unit_a, int unit_b, double perturbation,
                  bool keep_one, std::optional<std::uint64_t> seed) {
    DegeneracyCase c;
    c.skip_mode = parse_skip_mode(arch);
    c.layer = layer;
    c.unit_a = unit_a;
    c.unit_b = unit_b;
    c.perturbation = perturbation;
    c.keep_one_incoming = keep_one;
    if (seed) c.seed = *seed;
    return json_to_py(to_json(overlap ? verify_overlap_degeneracy(c) : verify_elimination_degeneracy(c)));
  };
  m.def(
      "overlap_check",
      [check](const std::string& arch, int layer, int unit_a, int unit_b, double perturbation,
              std::optional<std::uint64_t> seed) { return check(true, arch, layer, unit_a, unit_b, perturbation, false, seed); },
      py::arg("arch") = "plain", py::arg("layer") = 2, py::arg("unit_a") = 0, py::arg("unit_b") = 1,
      py::arg("perturbation") = 0.0, py::arg("seed") = py::none());
  m.def(
      "elimination_check",
      [check](const std::string& arch, int layer, int unit, bool keep_one_incoming, std::optional<std::uint64_t> seed) {
        return check(false, arch, layer, unit, unit == 0 ? 1 : 0, 0.0, keep_one_incoming, seed);
      },
      py::arg("arch") = "plain", py::arg("layer") = 2, py::arg("unit") = 0, py::arg("keep_one_incoming") = false,
      py::arg("seed") = py::none());

  // linear dynamics
  m.def(
      "time_to_band",
      [](const std::string& arch, const Vector& a, double s, double step, double max_time) {
        return time_to_band({a, s, parse_skip_mode(arch)}, step, max_time);
      },
      py::arg("arch"), py::arg("a"), py::arg("s") = 3.0, py::arg("step") = 0.1, py::arg("max_time") = 1e4);
  m.def(
      "mode_strength_rhs",
      [](const std::string& arch, const Vector& a, double s) { return mode_strength_rhs({a, s, parse_skip_mode(arch)}); },
      py::arg("arch"), py::arg("a"), py::arg("s") = 3.0);
  m.def(
      "two_mode_threshold_iterations",
      [](const std::string& arch, double init_std, double step, int iterations, std::uint64_t seed) {
        const auto sys = TwoModeSystem::standard();
        Rng rng(seed);
        const auto init = TwoModeState::random(sys.hidden(), init_std, rng);
        const auto mode = parse_skip_mode(arch);
        return iterations_to_threshold(integrate_two_mode(init, sys, mode, step, iterations), sys, mode);
      },
      py::arg("arch"), py::arg("init_std") = 1e-4, py::arg("step") = 0.1, py::arg("iterations") = 2000,
      py::arg("seed") = 0);

  // harness
  m.def(
      "config_digest", [](const py::object& cfg) { return config_digest(config_from(cfg)); }, py::arg("config"));
  m.def(
      "normalize_config", [](const py::object& cfg) { return json_to_py(to_json(config_from(cfg)).dump()); },
      py::arg("config"));
  m.def(
      "run_campaign",
      [](const py::object& cfg, const std::filesystem::path& out_dir, int jobs, bool resume, int stop_after) {
        const ExperimentConfig c = config_from(cfg);
        CampaignOptions opts;
        opts.jobs = jobs;
        opts.resume = resume;
        opts.stop_after = stop_after;
        CampaignResult r;
        {
          py::gil_scoped_release release;
          r = run_campaign(c, out_dir, opts);
        }
        return campaign_summary(r);
      },
      py::arg("config"), py::arg("out_dir"), py::arg("jobs") = 1, py::arg("resume") = true, py::arg("stop_after") = -1);
  m.def(
      "load_campaign", [](const std::filesystem::path& dir) { return campaign_summary(load_campaign(dir)); },
      py::arg("dir"));
  m.def(
      "emit_plot_data",
      [](const std::vector<std::pair<std::string, std::filesystem::path>>& campaigns, const std::string& kind,
         const std::filesystem::path& out_dir) {
        std::vector<LabeledCampaign> results;
        for (const auto& [label, dir] : campaigns) results.push_back({label, load_campaign(dir)});
        return emit_plot_data(results, parse_plot_kind(kind), out_dir);
      },
      py::arg("campaigns"), py::arg("kind"), py::arg("out_dir"));
}
