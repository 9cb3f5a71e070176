#pragma once

#include <filesystem>
#include <functional>
#include <utility>

#include "lstn/dataio.hpp"
#include "lstn/lst.hpp"

namespace lstn {

enum class SimilarityMode { weighted, ones };

struct TrainConfig {
  double lambda = 0.001;  // weight of the transform-consistency term
  double beta = 30.0;     // similarity bandwidth, intensity units
  int block_rows = 1;
  int block_cols = 2;
  int batch_size = 5;
  int pretrain_epochs = 4;
  int finetune_epochs = 2;
  double pretrain_lr = 1e-3;
  double finetune_lr = 1e-4;
  uint64_t seed = 0;
  int freeze_layers = 0;  // leading regressor layers fixed during finetune
  double sigma = 3.0;     // ground-truth density bandwidth, map cells
  int downsample = 2;     // must match the model's factor
  bool renormalize = true;
  SimilarityMode similarity = SimilarityMode::weighted;
  bool global_theta = false;
  bool detach_reg_in_lst = false;

  void validate() const;
  LstOptions lst_options() const {
    return {global_theta, detach_reg_in_lst, similarity == SimilarityMode::ones};
  }
};

// reg + lambda * lst, both scalars.
template <typename T>
TensorT<T> total_loss(const TensorT<T>& reg, const TensorT<T>& lst, double lambda);

// Ground-truth density maps for every frame of a video, rasterized on the
// downsampled grid with head coordinates scaled accordingly.
std::vector<DensityMap> ground_truth_maps(const VideoAnnotation& ann, double sigma, int downsample,
                                          bool renormalize);

enum class TrainPhase { pretrain, finetune };

struct EpochStats {
  double reg = 0.0;
  double lst = 0.0;
  double total = 0.0;
  int batches = 0;
};

// One pass over the dataset.  Pretrain batches are shuffled single frames
// trained on the map error alone; finetune batches are shuffled consecutive
// frame pairs (never crossing a video boundary) trained on the combined
// objective, with the leading freeze_layers regressor layers left untouched.
// Shuffling derives from (seed, phase, epoch), so a given call is
// reproducible bit for bit.
EpochStats train_epoch(ModelParams& model, const std::vector<SequenceData>& dataset,
                       const TrainConfig& config, TrainPhase phase, int epoch);

// Full schedule: pretrain epochs then finetune epochs.  `log` receives one
// "epoch <k> reg <v> lst <v> total <v>" line per epoch.
void run_training(ModelParams& model, const std::vector<SequenceData>& dataset,
                  const TrainConfig& config, const std::function<void(const std::string&)>& log = {});

// Checkpoint directory: manifest.txt (identifier, shape, file name per
// line), one TNSR file per tensor (parameters, batch-norm buffers, optimizer
// moments and step counts), and config.txt with flat key=value pairs for the
// architecture and training configuration.  save(load(x)) is byte-identical
// to x.
void save_checkpoint(ModelParams& model, const TrainConfig& config, const std::filesystem::path& dir);
std::pair<ModelParams, TrainConfig> load_checkpoint(const std::filesystem::path& dir);

std::string serialize_config(const RegressorConfig& model_config, const TrainConfig& train_config);
std::pair<RegressorConfig, TrainConfig> parse_config(const std::string& text, const std::string& origin);

}  // namespace lstn
