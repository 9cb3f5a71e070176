#include "lstn/eval.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace lstn {

Metrics mae_mse(const std::vector<double>& gt, const std::vector<double>& pred) {
  if (gt.empty()) throw UsageError("mae_mse: empty count lists");
  if (gt.size() != pred.size())
    throw DimensionError("mae_mse: " + std::to_string(gt.size()) + " ground truths vs " +
                         std::to_string(pred.size()) + " predictions");
  double abs_sum = 0.0, sq_sum = 0.0;
  for (size_t i = 0; i < gt.size(); ++i) {
    const double d = gt[i] - pred[i];
    abs_sum += std::abs(d);
    sq_sum += d * d;
  }
  const double n = static_cast<double>(gt.size());
  return {abs_sum / n, std::sqrt(sq_sum / n)};
}

EvalReport evaluate(ModelParams& model, const std::vector<SequenceData>& dataset,
                    const TrainConfig& config, bool gt_oracle) {
  config.validate();
  model.config.validate();
  if (dataset.empty()) throw UsageError("evaluate: empty dataset");
  if (config.downsample != model.config.downsample)
    throw ConfigError("evaluate: config downsample " + std::to_string(config.downsample) +
                      " does not match model " + std::to_string(model.config.downsample));

  EvalReport report;
  report.config_echo = serialize_config(model.config, config);
  std::vector<double> all_gt, all_pred;
  for (const SequenceData& seq : dataset) {
    std::vector<DensityMap> oracle;
    if (gt_oracle)
      oracle = ground_truth_maps(seq.annotation, config.sigma, config.downsample, config.renormalize);
    std::vector<double> v_gt, v_pred;
    for (size_t t = 0; t < seq.frames.size(); ++t) {
      double pred;
      if (gt_oracle) {
        pred = count(oracle[t]);
      } else {
        DensityMap est = forward(model, seq.frames[t], false);
        pred = count(est);
      }
      const double gt = static_cast<double>(seq.annotation.frames[t].size());
      report.frames.push_back({seq.id, static_cast<int>(t), gt, pred});
      v_gt.push_back(gt);
      v_pred.push_back(pred);
      all_gt.push_back(gt);
      all_pred.push_back(pred);
    }
    report.videos.push_back({seq.id, mae_mse(v_gt, v_pred)});
  }
  report.aggregate = mae_mse(all_gt, all_pred);
  return report;
}

std::string render_report(const EvalReport& report) {
  std::string out;
  char line[192];
  for (const FrameResult& f : report.frames) {
    std::snprintf(line, sizeof line, "video %s frame %d gt %.9g pred %.9g", f.video.c_str(),
                  f.frame, f.gt, f.pred);
    out += line;
    out += "\n";
  }
  std::snprintf(line, sizeof line, "aggregate mae %.9g mse %.9g", report.aggregate.mae,
                report.aggregate.mse);
  out += line;
  out += "\n";
  return out;
}

void export_density_viz(const DensityMap& map, const std::filesystem::path& path) {
  if (map.grid.ndim() != 2)
    throw DimensionError("export_density_viz: expected a 2-D map, got " +
                         Tensor::shape_string(map.grid.shape()));
  float peak = 0.0f;
  for (float v : map.grid.values()) peak = std::max(peak, v);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  char header[96];
  std::snprintf(header, sizeof header, "P5\n# density peak %.9g maps to 255\n%d %d\n255\n",
                static_cast<double>(peak), map.grid.dim(1), map.grid.dim(0));
  out << header;
  for (float v : map.grid.values()) {
    long q = 0;
    if (peak > 0.0f) q = std::lround(255.0 * std::max(0.0f, v) / peak);
    out.put(static_cast<char>(static_cast<unsigned char>(q < 0 ? 0 : (q > 255 ? 255 : q))));
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace lstn
