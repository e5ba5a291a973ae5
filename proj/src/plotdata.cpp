#include "deglab/plotdata.hpp"

#include "deglab/error.hpp"
#include "deglab/lineardyn.hpp"
#include "deglab/numfmt.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace deglab {

std::string to_string(PlotKind k) {
  switch (k) {
    case PlotKind::accuracy: return "accuracy";
    case PlotKind::tails: return "tails";
    case PlotKind::metrics: return "metrics";
    case PlotKind::gradients: return "gradients";
    case PlotKind::portrait: return "portrait";
  }
  return "accuracy";
}

PlotKind parse_plot_kind(std::string_view s) {
  for (PlotKind k : {PlotKind::accuracy, PlotKind::tails, PlotKind::metrics, PlotKind::gradients, PlotKind::portrait})
    if (s == to_string(k)) return k;
  throw Error(ErrorKind::config, "unknown plot kind '" + std::string(s) + "'");
}

namespace {

const char* kUnitless = "1";

PlotFile accuracy_file(const std::vector<LabeledCampaign>& results) {
  PlotFile f{"accuracy.csv", "epoch", "mean_accuracy",
             {{"epoch", "epoch"}, {"arch", "label"}, {"mean_accuracy", "fraction"}, {"stderr_accuracy", "fraction"}},
             {}};
  std::ostringstream out;
  out << "epoch,arch,mean_accuracy,stderr_accuracy\n";
  for (const auto& c : results) {
    if (c.result.summary.empty())
      throw Error(ErrorKind::config, "campaign '" + c.label + "' has no accuracy series");
    for (const auto& s : c.result.summary)
      out << s.epoch << ',' << c.label << ',' << format_double(s.mean_accuracy) << ','
          << format_double(s.stderr_accuracy) << '\n';
  }
  f.content = out.str();
  return f;
}

PlotFile tails_file(const std::vector<LabeledCampaign>& results) {
  PlotFile f{"tails.csv", "epoch", "mean_w",
             {{"epoch", "epoch"}, {"arch", "label"}, {"mean_w", "probability"}, {"stderr_w", "probability"}},
             {}};
  std::ostringstream out;
  out << "epoch,arch,mean_w,stderr_w\n";
  for (const auto& c : results) {
    std::map<int, std::vector<double>> by_epoch;
    for (const auto& r : c.result.runs)
      if (r.ok)
        for (const auto& s : r.spectra) by_epoch[s.epoch].push_back(tail_probability(s.fit.params));
    if (by_epoch.empty()) throw Error(ErrorKind::config, "campaign '" + c.label + "' has no spectrum snapshots");
    for (const auto& [epoch, ws] : by_epoch) {
      const auto [m, se] = mean_stderr(ws);
      out << epoch << ',' << c.label << ',' << format_double(m) << ',' << format_double(se) << '\n';
    }
  }
  f.content = out.str();
  return f;
}

// (epoch, layer) -> values across runs.
using LayerSeries = std::map<std::pair<int, int>, std::vector<double>>;

PlotFile metrics_file(const std::vector<LabeledCampaign>& results) {
  PlotFile f{"metrics.csv", "epoch", "mean_incoming_norm",
             {{"epoch", "epoch"},
              {"arch", "label"},
              {"layer", "index"},
              {"mean_incoming_norm", "l2 norm"},
              {"mean_overlap", kUnitless},
              {"zero_response_prob", "probability"}},
             {}};
  std::ostringstream out;
  out << "epoch,arch,layer,mean_incoming_norm,mean_overlap,zero_response_prob\n";
  for (const auto& c : results) {
    LayerSeries inc, ovl, zero;
    for (const auto& r : c.result.runs)
      if (r.ok)
        for (const auto& s : r.snapshots)
          for (std::size_t l = 0; l < s.incoming_norm.size(); ++l) {
            const std::pair<int, int> key{s.epoch, static_cast<int>(l) + 1};
            inc[key].push_back(s.incoming_norm[l]);
            ovl[key].push_back(s.overlap[l]);
            zero[key].push_back(s.zero_response_prob);
          }
    if (inc.empty()) throw Error(ErrorKind::config, "campaign '" + c.label + "' has no metrics snapshots");
    for (const auto& [key, vals] : inc)
      out << key.first << ',' << c.label << ',' << key.second << ',' << format_double(mean_stderr(vals).first) << ','
          << format_double(mean_stderr(ovl[key]).first) << ',' << format_double(mean_stderr(zero[key]).first) << '\n';
  }
  f.content = out.str();
  return f;
}

PlotFile gradients_file(const std::vector<LabeledCampaign>& results) {
  PlotFile f{"gradients.csv", "layer", "mean_grad_norm",
             {{"epoch", "epoch"},
              {"arch", "label"},
              {"layer", "index"},
              {"mean_grad_norm", "l2 norm"},
              {"stderr_grad_norm", "l2 norm"}},
             {}};
  std::ostringstream out;
  out << "epoch,arch,layer,mean_grad_norm,stderr_grad_norm\n";
  for (const auto& c : results) {
    LayerSeries g;
    for (const auto& r : c.result.runs)
      if (r.ok)
        for (const auto& s : r.snapshots)
          for (std::size_t l = 0; l < s.grad_norm.size(); ++l) g[{s.epoch, static_cast<int>(l) + 1}].push_back(s.grad_norm[l]);
    if (g.empty()) throw Error(ErrorKind::config, "campaign '" + c.label + "' has no gradient-norm snapshots");
    for (const auto& [key, vals] : g) {
      const auto [m, se] = mean_stderr(vals);
      out << key.first << ',' << c.label << ',' << key.second << ',' << format_double(m) << ',' << format_double(se)
          << '\n';
    }
  }
  f.content = out.str();
  return f;
}

PlotFile portrait_file() {
  PlotFile f{"portrait.csv", "a", "b",
             {{"arch", "label"}, {"a", kUnitless}, {"b", kUnitless}, {"da", "1/time"}, {"db", "1/time"},
              {"grad_norm", "1/time"}},
             {}};
  std::ostringstream out;
  out << "arch,a,b,da,db,grad_norm\n";
  for (SkipMode m : {SkipMode::plain, SkipMode::residual, SkipMode::hyper_residual})
    for (const auto& p : phase_portrait(m, 3.0, -3.0, 3.0, 25))
      out << to_string(m) << ',' << format_double(p.a) << ',' << format_double(p.b) << ',' << format_double(p.da)
          << ',' << format_double(p.db) << ',' << format_double(p.grad_norm) << '\n';
  f.content = out.str();
  return f;
}

}  // namespace

std::vector<PlotFile> build_plot_data(const std::vector<LabeledCampaign>& results, PlotKind kind) {
  if (kind == PlotKind::portrait) return {portrait_file()};
  if (results.empty()) throw Error(ErrorKind::config, "no campaign results given for plot data");
  switch (kind) {
    case PlotKind::accuracy: return {accuracy_file(results)};
    case PlotKind::tails: return {tails_file(results)};
    case PlotKind::metrics: return {metrics_file(results)};
    case PlotKind::gradients: return {gradients_file(results)};
    case PlotKind::portrait: break;
  }
  return {};
}

std::string plot_manifest_json(PlotKind kind, const std::vector<PlotFile>& files) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["kind"] = to_string(kind);
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const auto& f : files) {
    nlohmann::ordered_json cols = nlohmann::ordered_json::array();
    for (const auto& c : f.columns) cols.push_back({{"name", c.name}, {"unit", c.unit}});
    list.push_back({{"path", f.path}, {"x_axis", f.x_axis}, {"y_axis", f.y_axis}, {"columns", cols}});
  }
  j["files"] = list;
  return j.dump(2) + "\n";
}

std::vector<std::filesystem::path> emit_plot_data(const std::vector<LabeledCampaign>& results, PlotKind kind,
                                                  const std::filesystem::path& out_dir) {
  const auto files = build_plot_data(results, kind);
  const std::string manifest = plot_manifest_json(kind, files);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  auto write = [&](const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out || !(out << text)) throw Error(ErrorKind::io, "cannot write " + p.string());
    written.push_back(p);
  };
  for (const auto& f : files) write(out_dir / f.path, f.content);
  write(out_dir / "manifest.json", manifest);
  return written;
}

}  // namespace deglab
