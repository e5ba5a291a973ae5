#pragma once

// Figure-ready CSV series with a JSON manifest describing files, axes and units.

#include "deglab/harness.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace deglab {

enum class PlotKind { accuracy, tails, metrics, gradients, portrait };

std::string to_string(PlotKind k);
PlotKind parse_plot_kind(std::string_view s);

/// A campaign and the label ("arch" column) it is plotted under.
struct LabeledCampaign {
  std::string label;
  CampaignResult result;
};

struct PlotColumn {
  std::string name;
  std::string unit;
};

struct PlotFile {
  std::string path;  // relative to the output directory
  std::string x_axis;
  std::string y_axis;
  std::vector<PlotColumn> columns;
  std::string content;
};

/// Builds the files for one kind in memory. Column layouts:
///   accuracy:  epoch,arch,mean_accuracy,stderr_accuracy
///   tails:     epoch,arch,mean_w,stderr_w
///   metrics:   epoch,arch,layer,mean_incoming_norm,mean_overlap,zero_response_prob
///   gradients: epoch,arch,layer,mean_grad_norm,stderr_grad_norm
///   portrait:  arch,a,b,da,db,grad_norm (three-layer linear flows, s = 3)
/// Throws config when `results` is empty (except portrait) or a requested
/// series is missing from a campaign.
std::vector<PlotFile> build_plot_data(const std::vector<LabeledCampaign>& results, PlotKind kind);

/// Writes the files plus manifest.json into out_dir. Nothing is written if
/// building fails.
std::vector<std::filesystem::path> emit_plot_data(const std::vector<LabeledCampaign>& results, PlotKind kind,
                                                  const std::filesystem::path& out_dir);

std::string plot_manifest_json(PlotKind kind, const std::vector<PlotFile>& files);

}  // namespace deglab
