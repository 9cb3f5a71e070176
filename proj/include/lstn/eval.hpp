#pragma once

#include <filesystem>

#include "lstn/trainer.hpp"

namespace lstn {

struct Metrics {
  double mae = 0.0;
  double mse = 0.0;  // root of the mean squared count error
};

// Count metrics over aligned ground-truth / prediction lists:
//   mae = mean |z - zhat|,   mse = sqrt(mean (z - zhat)^2)
Metrics mae_mse(const std::vector<double>& gt, const std::vector<double>& pred);

struct FrameResult {
  std::string video;
  int frame = 0;
  double gt = 0.0;
  double pred = 0.0;
};

struct VideoResult {
  std::string video;
  Metrics metrics;
};

struct EvalReport {
  std::vector<FrameResult> frames;  // dataset order: (video id, frame index)
  std::vector<VideoResult> videos;
  Metrics aggregate;
  std::string config_echo;
};

// Runs the model over every frame of every video (eval mode) and compares
// the integrated density against the annotated head count.  With
// `gt_oracle`, the rasterized ground-truth map stands in for the prediction,
// which pins the metrics near zero.
EvalReport evaluate(ModelParams& model, const std::vector<SequenceData>& dataset,
                    const TrainConfig& config, bool gt_oracle = false);

// Text form: one "video <id> frame <k> gt <z> pred <zhat>" line per frame,
// then "aggregate mae <v> mse <v>".
std::string render_report(const EvalReport& report);

// Grayscale dump of a density map: cell values scaled so the map maximum
// lands at 255 (an all-zero map stays black).  The scale is recorded in the
// PGM comment header.
void export_density_viz(const DensityMap& map, const std::filesystem::path& path);

}  // namespace lstn
