#include "deglab/error.hpp"
#include "deglab/plotdata.hpp"

#include "support.hpp"

#include <doctest.h>

#include <fstream>

using namespace deglab;

namespace {

CampaignResult fake_campaign() {
  CampaignResult c;
  for (int id = 0; id < 2; ++id) {
    RunResult r;
    r.run = id;
    r.history.epochs.push_back({1, 0.5 + 0.1 * id, 1.0, {0.1, 0.2}});
    SingularitySnapshot s;
    s.epoch = 1;
    s.incoming_norm = {1.0, 2.0};
    s.overlap = {0.1, 0.2};
    s.grad_norm = {0.01, 0.02};
    s.zero_response_prob = 0.4;
    r.snapshots.push_back(s);
    SpectrumRecord sp;
    sp.epoch = 1;
    sp.fit.params.w = 1e-4 * (id + 1);
    r.spectra.push_back(sp);
    c.runs.push_back(r);
  }
  c.summary = summarize(c.runs);
  return c;
}

}  // namespace

TEST_CASE("plot data kinds and headers") {
  const std::vector<LabeledCampaign> in{{"plain", fake_campaign()}, {"residual", fake_campaign()}};
  const auto tails = build_plot_data(in, PlotKind::tails);
  REQUIRE(tails.size() == 1);
  CHECK(tails[0].content.rfind("epoch,arch,mean_w,stderr_w\n", 0) == 0);
  {
    const auto pos = tails[0].content.find("1,residual,");
    REQUIRE(pos != std::string::npos);
    CHECK(std::stod(tails[0].content.substr(pos + 11)) == doctest::Approx(1.5e-4).epsilon(1e-12));
  }
  CHECK(build_plot_data(in, PlotKind::accuracy)[0].content.rfind("epoch,arch,mean_accuracy,stderr_accuracy\n", 0) == 0);
  CHECK(build_plot_data(in, PlotKind::metrics)[0].content.rfind(
            "epoch,arch,layer,mean_incoming_norm,mean_overlap,zero_response_prob\n", 0) == 0);
  CHECK(build_plot_data(in, PlotKind::gradients)[0].content.rfind(
            "epoch,arch,layer,mean_grad_norm,stderr_grad_norm\n", 0) == 0);
  CHECK(build_plot_data({}, PlotKind::portrait)[0].content.rfind("arch,a,b,da,db,grad_norm\n", 0) == 0);
  for (PlotKind k : {PlotKind::accuracy, PlotKind::tails, PlotKind::metrics, PlotKind::gradients, PlotKind::portrait})
    CHECK(parse_plot_kind(to_string(k)) == k);
}

TEST_CASE("plot data errors leave no files") {
  const auto dir = testing::scratch_dir("plot_err");
  CHECK_THROWS_AS(emit_plot_data({}, PlotKind::accuracy, dir / "out"), Error);
  CHECK_FALSE(std::filesystem::exists(dir / "out"));
  CampaignResult no_spectra = fake_campaign();
  for (auto& r : no_spectra.runs) r.spectra.clear();
  CHECK_THROWS_AS(emit_plot_data({{"plain", no_spectra}}, PlotKind::tails, dir / "out"), Error);
  CHECK_FALSE(std::filesystem::exists(dir / "out"));
}

TEST_CASE("manifest lists files, axes and units") {
  const auto dir = testing::scratch_dir("plot_ok");
  const auto written = emit_plot_data({{"plain", fake_campaign()}}, PlotKind::metrics, dir);
  CHECK(written.size() == 2);
  const auto j = nlohmann::json::parse(std::ifstream(dir / "manifest.json"));
  CHECK(j["schema_version"] == 1);
  CHECK(j["kind"] == "metrics");
  CHECK(j["files"][0]["path"] == "metrics.csv");
  CHECK(j["files"][0]["columns"].size() == 6);
  CHECK(j["files"][0]["columns"][3]["unit"] == "l2 norm");
}
