#include "lstn/cli.hpp"

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lstn/dataio.hpp"
#include "lstn/eval.hpp"
#include "lstn/tnsr.hpp"
#include "lstn/trainer.hpp"

namespace lstn {
namespace {

namespace fs = std::filesystem;

void write_text(const std::string& text, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Expands `--config file` into --key=value tokens placed right after the
// subcommand name.  Options take their last occurrence, so explicit flags
// override the file no matter where they sit on the line.
std::vector<std::string> expand_config_args(const std::vector<std::string>& args) {
  size_t config_at = args.size();
  std::string path;
  for (size_t i = 0; i < args.size(); ++i) {
    std::string p;
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw ConfigError("--config needs a file path");
      p = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      p = args[i].substr(9);
    } else {
      continue;
    }
    if (config_at != args.size()) throw ConfigError("--config given more than once");
    config_at = i;
    path = p;
  }
  if (config_at == args.size()) return args;
  if (config_at == 0) throw ConfigError("--config must follow a subcommand");

  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::vector<std::string> tokens;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string entry = trim(line);
    if (entry.empty() || entry[0] == '#') continue;
    const size_t eq = entry.find('=');
    const std::string key = eq == std::string::npos ? "" : trim(entry.substr(0, eq));
    if (key.empty())
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    tokens.push_back("--" + key + "=" + trim(entry.substr(eq + 1)));
  }
  std::vector<std::string> out;
  out.push_back(args[0]);
  out.insert(out.end(), tokens.begin(), tokens.end());
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

void standard_options(CLI::App* cmd, std::string& config_path) {
  cmd->option_defaults()->always_capture_default()->multi_option_policy(
      CLI::MultiOptionPolicy::TakeLast);
  cmd->add_option("--config", config_path, "flat key=value defaults; explicit flags win");
}

// Architecture and schedule flags shared by `train` and `ablate-similarity`.
struct TrainOptions {
  RegressorConfig model;
  TrainConfig train;
  std::vector<int> channels = RegressorConfig{}.channels;
  std::string similarity = "weighted";

  void attach(CLI::App* cmd) {
    cmd->add_option("--channels", channels, "regressor layer widths, last must be 1")
        ->delimiter(',');
    cmd->add_option("--kernel", model.kernel, "conv kernel size (odd)");
    cmd->add_flag("--batch-norm,!--no-batch-norm", model.batch_norm,
                  "batch normalization on hidden layers");
    cmd->add_option("--downsample", train.downsample, "density grid reduction factor (1, 2 or 4)");
    cmd->add_option("--lambda", train.lambda, "weight of the transform-consistency loss");
    cmd->add_option("--beta", train.beta, "block similarity bandwidth, intensity units");
    cmd->add_option("--block-rows", train.block_rows, "block grid rows");
    cmd->add_option("--block-cols", train.block_cols, "block grid columns");
    cmd->add_option("--batch-size", train.batch_size, "frames (or frame pairs) per batch");
    cmd->add_option("--pretrain-epochs", train.pretrain_epochs, "regression-only epochs");
    cmd->add_option("--finetune-epochs", train.finetune_epochs, "combined-objective epochs");
    cmd->add_option("--pretrain-lr", train.pretrain_lr, "learning rate during pretraining");
    cmd->add_option("--finetune-lr", train.finetune_lr, "learning rate during finetuning");
    cmd->add_option("--seed", train.seed, "master seed for init and shuffling");
    cmd->add_option("--freeze-layers", train.freeze_layers,
                    "leading regressor layers fixed during finetuning");
    cmd->add_option("--sigma", train.sigma, "ground-truth density bandwidth, map cells");
    cmd->add_flag("--renormalize,!--no-renormalize", train.renormalize,
                  "rescale each truncated head kernel to unit mass");
    cmd->add_option("--similarity", similarity, "block weighting: weighted or ones")
        ->check(CLI::IsMember({"weighted", "ones"}));
    cmd->add_flag("--global-theta", train.global_theta,
                  "predict one frame-level transform instead of per block");
    cmd->add_flag("--detach-reg", train.detach_reg_in_lst,
                  "stop consistency-loss gradients at the density estimates");
  }

  void finalize() {
    model.channels = channels;
    model.downsample = train.downsample;
    train.similarity =
        similarity == "ones" ? SimilarityMode::ones : SimilarityMode::weighted;
    model.validate();
    train.validate();
  }
};

struct SynthCmd {
  CLI::App* cmd = nullptr;
  std::string config_path;
  std::string out;
  int videos = 1;
  std::string prefix = "video";
  SynthConfig cfg;

  void attach(CLI::App& app) {
    cmd = app.add_subcommand("synth", "generate a synthetic crowd video dataset");
    standard_options(cmd, config_path);
    cmd->add_option("--out", out, "output dataset directory")->required();
    cmd->add_option("--videos", videos, "number of videos")->check(CLI::PositiveNumber);
    cmd->add_option("--prefix", prefix, "video id prefix");
    cmd->add_option("--frames", cfg.frames, "frames per video");
    cmd->add_option("--height", cfg.height, "frame height");
    cmd->add_option("--width", cfg.width, "frame width");
    cmd->add_option("--heads", cfg.head_count, "walkers per video");
    cmd->add_option("--max-speed", cfg.max_speed, "top walker speed, pixels per frame");
    cmd->add_option("--scale-drift", cfg.scale_drift, "relative dot radius drift per frame");
    cmd->add_option("--rot-jitter", cfg.rot_jitter, "scene rotation jitter, radians per frame");
    cmd->add_option("--entry-exit-prob", cfg.entry_exit_prob, "per-frame chance of a new walker");
    cmd->add_option("--occlusion-prob", cfg.occlusion_prob,
                    "per-walker per-frame chance of going hidden");
    cmd->add_option("--occlusion-duration", cfg.occlusion_duration, "frames a walker stays hidden");
    cmd->add_option("--dot-radius", cfg.dot_radius, "rendered head radius, pixels");
    cmd->add_option("--dot-intensity", cfg.dot_intensity, "rendered head peak brightness");
    cmd->add_option("--seed", cfg.seed, "master seed");
  }

  int run() const {
    const std::vector<SequenceData> dataset = make_synth_dataset(cfg, videos, prefix);
    for (const SequenceData& seq : dataset) save_video_dir(seq, fs::path(out) / seq.id);
    std::cout << "wrote " << videos << " videos to " << out << "\n";
    return 0;
  }
};

struct DensityCmd {
  CLI::App* cmd = nullptr;
  std::string config_path;
  std::string annotation;
  std::string out;
  double sigma = 3.0;
  int downsample = 1;
  bool renormalize = true;

  void attach(CLI::App& app) {
    cmd = app.add_subcommand("density", "rasterize annotations into density map tensors");
    standard_options(cmd, config_path);
    cmd->add_option("--annotation", annotation, "annotation file")->required();
    cmd->add_option("--out", out, "output directory")->required();
    cmd->add_option("--sigma", sigma, "gaussian bandwidth, map cells");
    cmd->add_option("--downsample", downsample, "map reduction factor vs frame resolution");
    cmd->add_flag("--renormalize,!--no-renormalize", renormalize,
                  "rescale each truncated head kernel to unit mass");
  }

  int run() const {
    const VideoAnnotation ann = load_annotations(annotation);
    const std::vector<DensityMap> maps = ground_truth_maps(ann, sigma, downsample, renormalize);
    fs::create_directories(out);
    for (size_t t = 0; t < maps.size(); ++t) {
      char name[32];
      std::snprintf(name, sizeof name, "density_%05zu.tnsr", t);
      save_tensor(maps[t].grid, fs::path(out) / name);
    }
    std::cout << "wrote " << maps.size() << " density maps to " << out << "\n";
    return 0;
  }
};

struct TrainCmd {
  CLI::App* cmd = nullptr;
  std::string config_path;
  std::string data;
  std::string out;
  TrainOptions opts;

  void attach(CLI::App& app) {
    cmd = app.add_subcommand("train", "train the counting model and save a checkpoint");
    standard_options(cmd, config_path);
    cmd->add_option("--data", data, "training dataset root")->required();
    cmd->add_option("--out", out, "checkpoint directory")->required();
    opts.attach(cmd);
  }

  int run() {
    opts.finalize();
    const std::vector<SequenceData> dataset = load_dataset(data);
    ModelParams model = init_model(opts.model, opts.train.seed);
    run_training(model, dataset, opts.train,
                 [](const std::string& line) { std::cout << line << "\n"; });
    save_checkpoint(model, opts.train, out);
    std::cout << "checkpoint saved to " << out << "\n";
    return 0;
  }
};

struct EvalCmd {
  CLI::App* cmd = nullptr;
  std::string config_path;
  std::string checkpoint;
  std::string data;
  std::string out;
  bool oracle = false;
  double sigma = 3.0;
  int downsample = 2;
  bool renormalize = true;
  CLI::Option* sigma_opt = nullptr;
  CLI::Option* downsample_opt = nullptr;
  CLI::Option* renorm_opt = nullptr;

  void attach(CLI::App& app) {
    cmd = app.add_subcommand("eval", "report count metrics over a dataset");
    standard_options(cmd, config_path);
    cmd->add_option("--checkpoint", checkpoint, "checkpoint directory");
    cmd->add_option("--data", data, "evaluation dataset root")->required();
    cmd->add_option("--out", out, "also write the report to this file");
    cmd->add_flag("--oracle", oracle, "score rasterized ground truth instead of the model");
    sigma_opt = cmd->add_option("--sigma", sigma, "ground-truth density bandwidth, map cells");
    downsample_opt = cmd->add_option("--downsample", downsample, "map reduction factor");
    renorm_opt = cmd->add_flag("--renormalize,!--no-renormalize", renormalize,
                               "rescale each truncated head kernel to unit mass");
  }

  int run() const {
    ModelParams model;
    TrainConfig tc;
    if (!checkpoint.empty()) {
      auto loaded = load_checkpoint(checkpoint);
      model = std::move(loaded.first);
      tc = loaded.second;
      if (sigma_opt->count() > 0) tc.sigma = sigma;
      if (renorm_opt->count() > 0) tc.renormalize = renormalize;
      if (downsample_opt->count() > 0 && downsample != model.config.downsample)
        throw UsageError("eval: --downsample conflicts with the checkpoint architecture");
    } else if (oracle) {
      tc.sigma = sigma;
      tc.downsample = downsample;
      tc.renormalize = renormalize;
      RegressorConfig rc;
      rc.downsample = downsample;
      model = init_model(rc, 0);
    } else {
      throw UsageError("eval: --checkpoint is required unless --oracle is given");
    }
    const std::vector<SequenceData> dataset = load_dataset(data);
    const EvalReport report = evaluate(model, dataset, tc, oracle);
    const std::string text = render_report(report);
    std::cout << text;
    if (!out.empty()) write_text(text, out);
    return 0;
  }
};

struct AblateCmd {
  CLI::App* cmd = nullptr;
  std::string config_path;
  std::string data;
  std::string test_data;
  TrainOptions opts;

  void attach(CLI::App& app) {
    cmd = app.add_subcommand("ablate-similarity",
                             "train with appearance weights vs all-ones and report both");
    standard_options(cmd, config_path);
    cmd->add_option("--data", data, "training dataset root")->required();
    cmd->add_option("--test-data", test_data, "evaluation dataset root (defaults to --data)");
    opts.attach(cmd);
  }

  int run() {
    opts.finalize();
    const std::vector<SequenceData> train_set = load_dataset(data);
    const std::vector<SequenceData> test_set =
        test_data.empty() ? train_set : load_dataset(test_data);
    for (const SimilarityMode mode : {SimilarityMode::weighted, SimilarityMode::ones}) {
      const char* name = mode == SimilarityMode::weighted ? "weighted" : "ones";
      TrainConfig tc = opts.train;
      tc.similarity = mode;
      ModelParams model = init_model(opts.model, tc.seed);
      run_training(model, train_set, tc, [name](const std::string& line) {
        std::cout << name << " " << line << "\n";
      });
      const EvalReport report = evaluate(model, test_set, tc, false);
      char line[96];
      std::snprintf(line, sizeof line, "similarity %s mae %.9g mse %.9g", name,
                    report.aggregate.mae, report.aggregate.mse);
      std::cout << line << "\n";
    }
    return 0;
  }
};

struct WarpCmd {
  CLI::App* cmd = nullptr;
  std::string config_path;
  std::string input;
  std::string out;
  std::string theta = "1,0,0,0,1,0";

  void attach(CLI::App& app) {
    cmd = app.add_subcommand("warp-demo", "warp a density map tensor through an affine transform");
    standard_options(cmd, config_path);
    cmd->add_option("--input", input, "source 2-D tensor file")->required();
    cmd->add_option("--out", out, "warped tensor file")->required();
    cmd->add_option("--theta", theta, "six comma-separated affine coefficients, row-major 2x3");
  }

  int run() const {
    std::vector<float> six;
    std::string token;
    std::istringstream stream(theta);
    while (std::getline(stream, token, ',')) {
      try {
        size_t used = 0;
        six.push_back(std::stof(token, &used));
        if (used != token.size()) throw std::invalid_argument(token);
      } catch (const std::exception&) {
        throw UsageError("warp-demo: bad theta coefficient '" + token + "'");
      }
    }
    if (six.size() != 6)
      throw UsageError("warp-demo: --theta needs 6 coefficients, got " +
                       std::to_string(six.size()));
    const Tensor source = load_tensor(input);
    if (source.ndim() != 2)
      throw DimensionError("warp-demo: expected a 2-D tensor, got " +
                           Tensor::shape_string(source.shape()));
    const AffineParams params = AffineParams::from_values(six);
    const SamplingGrid grid = affine_grid(params, source.dim(0), source.dim(1));
    save_tensor(bilinear_sample(source, grid), out);
    return 0;
  }
};

struct VizCmd {
  CLI::App* cmd = nullptr;
  std::string config_path;
  std::string input;
  std::string out;

  void attach(CLI::App& app) {
    cmd = app.add_subcommand("viz", "render a density map tensor as a grayscale image");
    standard_options(cmd, config_path);
    cmd->add_option("--input", input, "2-D tensor file")->required();
    cmd->add_option("--out", out, "output P5 image")->required();
  }

  int run() const {
    const Tensor grid = load_tensor(input);
    export_density_viz(DensityMap{grid, 1}, out);
    return 0;
  }
};

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"crowd counting with a locality-constrained spatial transformer", "lstn"};
  app.require_subcommand(1);

  SynthCmd synth;
  DensityCmd density;
  TrainCmd train;
  EvalCmd eval;
  AblateCmd ablate;
  WarpCmd warp;
  VizCmd viz;
  synth.attach(app);
  density.attach(app);
  train.attach(app);
  eval.attach(app);
  ablate.attach(app);
  warp.attach(app);
  viz.attach(app);

  std::vector<std::string> expanded;
  try {
    expanded = expand_config_args(args);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth.cmd->parsed()) return synth.run();
    if (density.cmd->parsed()) return density.run();
    if (train.cmd->parsed()) return train.run();
    if (eval.cmd->parsed()) return eval.run();
    if (ablate.cmd->parsed()) return ablate.run();
    if (warp.cmd->parsed()) return warp.run();
    if (viz.cmd->parsed()) return viz.run();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  args.reserve(argc > 0 ? static_cast<size_t>(argc - 1) : 0);
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

}  // namespace lstn
