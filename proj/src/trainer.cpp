#include "lstn/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lstn/rng.hpp"
#include "lstn/tnsr.hpp"

namespace lstn {

void TrainConfig::validate() const {
  if (lambda < 0) throw ConfigError("train: lambda must be non-negative, got " + std::to_string(lambda));
  if (beta <= 0) throw ConfigError("train: beta must be positive, got " + std::to_string(beta));
  if (block_rows < 1 || block_cols < 1)
    throw ConfigError("train: block grid must be at least 1x1, got " + std::to_string(block_rows) +
                      "x" + std::to_string(block_cols));
  if (batch_size < 1) throw ConfigError("train: batch size must be >= 1, got " + std::to_string(batch_size));
  if (pretrain_epochs < 0 || finetune_epochs < 0) throw ConfigError("train: negative epoch count");
  if (pretrain_lr <= 0 || finetune_lr <= 0) throw ConfigError("train: learning rates must be positive");
  if (freeze_layers < 0) throw ConfigError("train: negative freeze_layers");
  if (sigma <= 0) throw ConfigError("train: sigma must be positive, got " + std::to_string(sigma));
  if (downsample != 1 && downsample != 2 && downsample != 4)
    throw ConfigError("train: downsample must be 1, 2 or 4, got " + std::to_string(downsample));
}

template <typename T>
TensorT<T> total_loss(const TensorT<T>& reg, const TensorT<T>& lst, double lambda) {
  if (lambda < 0) throw ConfigError("total_loss: lambda must be non-negative, got " + std::to_string(lambda));
  if (reg.size() != 1 || lst.size() != 1) throw UsageError("total_loss: loss terms must be scalars");
  return add(reg, scale(lst, lambda));
}

template TensorT<float> total_loss<float>(const TensorT<float>&, const TensorT<float>&, double);
template TensorT<double> total_loss<double>(const TensorT<double>&, const TensorT<double>&, double);

std::vector<DensityMap> ground_truth_maps(const VideoAnnotation& ann, double sigma, int downsample,
                                          bool renormalize) {
  if (ann.width % downsample != 0 || ann.height % downsample != 0)
    throw DimensionError("ground_truth_maps: frame " + std::to_string(ann.width) + "x" +
                         std::to_string(ann.height) + " not divisible by downsample " +
                         std::to_string(downsample));
  const int gw = ann.width / downsample;
  const int gh = ann.height / downsample;
  std::vector<DensityMap> maps;
  maps.reserve(ann.frames.size());
  for (size_t t = 0; t < ann.frames.size(); ++t) {
    std::vector<HeadPoint> scaled;
    scaled.reserve(ann.frames[t].size());
    for (const HeadPoint& h : ann.frames[t])
      scaled.push_back({h.x / downsample, h.y / downsample});
    maps.push_back(rasterize_density<float>(scaled, gh, gw, sigma, renormalize, downsample,
                                            static_cast<int>(t)));
  }
  return maps;
}

namespace {

struct Sample {
  int video;
  int frame;  // pretrain: single frame; finetune: first frame of the pair
};

void optimizer_pass(ModelParams& model, const AdamConfig& opt, int freeze_layers) {
  model.for_each_parameter([&](const std::string& id, Tensor& tensor, bool trainable, int layer) {
    if (!trainable) return;
    if (layer >= 0 && layer < freeze_layers) return;
    adam_step(tensor, model.adam[id], opt);
  });
}

}  // namespace

EpochStats train_epoch(ModelParams& model, const std::vector<SequenceData>& dataset,
                       const TrainConfig& config, TrainPhase phase, int epoch) {
  config.validate();
  model.config.validate();
  if (dataset.empty()) throw UsageError("train_epoch: empty dataset");
  if (config.downsample != model.config.downsample)
    throw ConfigError("train_epoch: config downsample " + std::to_string(config.downsample) +
                      " does not match model " + std::to_string(model.config.downsample));

  const bool finetune = phase == TrainPhase::finetune;
  std::vector<Sample> samples;
  for (size_t v = 0; v < dataset.size(); ++v) {
    const int T = static_cast<int>(dataset[v].frames.size());
    const int last = finetune ? T - 1 : T;
    for (int t = 0; t < last; ++t) samples.push_back({static_cast<int>(v), t});
  }
  if (samples.empty())
    throw UsageError(finetune ? "train_epoch: no consecutive frame pairs for finetuning"
                              : "train_epoch: no frames to train on");

  Rng shuffler = derive_rng(config.seed, (static_cast<uint64_t>(finetune ? 2 : 1) << 32) |
                                             static_cast<uint64_t>(epoch));
  shuffler.shuffle(samples);

  const AdamConfig opt{finetune ? config.finetune_lr : config.pretrain_lr, 0.9, 0.999, 1e-8};
  const int freeze = finetune ? config.freeze_layers : 0;

  // Ground-truth maps are cheap to rasterize but reused within an epoch.
  std::vector<std::vector<DensityMap>> gt(dataset.size());
  auto gt_map = [&](int v, int t) -> const DensityMap& {
    auto& maps = gt[static_cast<size_t>(v)];
    if (maps.empty())
      maps = ground_truth_maps(dataset[static_cast<size_t>(v)].annotation, config.sigma,
                               config.downsample, config.renormalize);
    return maps[static_cast<size_t>(t)];
  };

  EpochStats stats;
  for (size_t start = 0; start < samples.size(); start += static_cast<size_t>(config.batch_size)) {
    const size_t end = std::min(samples.size(), start + static_cast<size_t>(config.batch_size));
    model.zero_grad();

    Tensor reg_term, lst_term;
    if (!finetune) {
      std::vector<DensityMap> est, truth;
      for (size_t s = start; s < end; ++s) {
        const Sample& smp = samples[s];
        est.push_back(forward(model, dataset[static_cast<size_t>(smp.video)].frames[static_cast<size_t>(smp.frame)], true));
        truth.push_back(gt_map(smp.video, smp.frame));
      }
      reg_term = regression_loss(est, truth);
      lst_term = Tensor::scalar(0.0f);
    } else {
      std::vector<DensityMap> est, truth;
      Tensor lst_sum = Tensor::scalar(0.0f);
      for (size_t s = start; s < end; ++s) {
        const Sample& smp = samples[s];
        const SequenceData& seq = dataset[static_cast<size_t>(smp.video)];
        std::vector<Tensor> pair_frames = {seq.frames[static_cast<size_t>(smp.frame)],
                                           seq.frames[static_cast<size_t>(smp.frame) + 1]};
        std::vector<DensityMap> pair_est = {forward(model, pair_frames[0], true),
                                            forward(model, pair_frames[1], true)};
        std::vector<DensityMap> pair_gt = {gt_map(smp.video, smp.frame),
                                           gt_map(smp.video, smp.frame + 1)};
        lst_sum = add(lst_sum, lst_loss(model, pair_frames, pair_est, pair_gt,
                                        {config.block_rows, config.block_cols}, config.beta,
                                        config.lst_options()));
        est.insert(est.end(), pair_est.begin(), pair_est.end());
        truth.insert(truth.end(), pair_gt.begin(), pair_gt.end());
      }
      reg_term = regression_loss(est, truth);
      lst_term = scale(lst_sum, 1.0 / static_cast<double>(end - start));
    }

    Tensor batch_loss = total_loss(reg_term, lst_term, finetune ? config.lambda : 0.0);
    batch_loss.backward();
    optimizer_pass(model, opt, freeze);

    stats.reg += static_cast<double>(reg_term.item());
    stats.lst += static_cast<double>(lst_term.item());
    stats.total += static_cast<double>(batch_loss.item());
    stats.batches += 1;
  }
  stats.reg /= stats.batches;
  stats.lst /= stats.batches;
  stats.total /= stats.batches;
  return stats;
}

void run_training(ModelParams& model, const std::vector<SequenceData>& dataset,
                  const TrainConfig& config, const std::function<void(const std::string&)>& log) {
  int k = 0;
  auto emit = [&](const EpochStats& s) {
    if (!log) return;
    char line[160];
    std::snprintf(line, sizeof line, "epoch %d reg %.6g lst %.6g total %.6g", ++k, s.reg, s.lst,
                  s.total);
    log(line);
  };
  for (int e = 0; e < config.pretrain_epochs; ++e)
    emit(train_epoch(model, dataset, config, TrainPhase::pretrain, e));
  for (int e = 0; e < config.finetune_epochs; ++e)
    emit(train_epoch(model, dataset, config, TrainPhase::finetune, e));
}

// ---- configuration text ------------------------------------------------------

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

long long parse_long(const std::string& tok, const std::string& origin, int line_no) {
  size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(tok, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != tok.size())
    throw ParseError(origin + ": line " + std::to_string(line_no) + ": expected integer, got '" + tok + "'");
  return v;
}

double parse_dbl(const std::string& tok, const std::string& origin, int line_no) {
  size_t used = 0;
  double v = 0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != tok.size())
    throw ParseError(origin + ": line " + std::to_string(line_no) + ": expected number, got '" + tok + "'");
  return v;
}

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::vector<int> split_ints(const std::string& s, const std::string& origin) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw ParseError(origin + ": bad integer list element '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

std::string serialize_config(const RegressorConfig& mc, const TrainConfig& tc) {
  std::string s;
  s += "model.channels=" + join_ints(mc.channels) + "\n";
  s += "model.downsample=" + std::to_string(mc.downsample) + "\n";
  s += "model.kernel=" + std::to_string(mc.kernel) + "\n";
  s += "model.batch_norm=" + std::to_string(mc.batch_norm ? 1 : 0) + "\n";
  s += "train.lambda=" + fmt_double(tc.lambda) + "\n";
  s += "train.beta=" + fmt_double(tc.beta) + "\n";
  s += "train.block_rows=" + std::to_string(tc.block_rows) + "\n";
  s += "train.block_cols=" + std::to_string(tc.block_cols) + "\n";
  s += "train.batch_size=" + std::to_string(tc.batch_size) + "\n";
  s += "train.pretrain_epochs=" + std::to_string(tc.pretrain_epochs) + "\n";
  s += "train.finetune_epochs=" + std::to_string(tc.finetune_epochs) + "\n";
  s += "train.pretrain_lr=" + fmt_double(tc.pretrain_lr) + "\n";
  s += "train.finetune_lr=" + fmt_double(tc.finetune_lr) + "\n";
  s += "train.seed=" + std::to_string(tc.seed) + "\n";
  s += "train.freeze_layers=" + std::to_string(tc.freeze_layers) + "\n";
  s += "train.sigma=" + fmt_double(tc.sigma) + "\n";
  s += "train.downsample=" + std::to_string(tc.downsample) + "\n";
  s += "train.renormalize=" + std::to_string(tc.renormalize ? 1 : 0) + "\n";
  s += std::string("train.similarity=") + (tc.similarity == SimilarityMode::ones ? "ones" : "weighted") + "\n";
  s += "train.global_theta=" + std::to_string(tc.global_theta ? 1 : 0) + "\n";
  s += "train.detach_reg=" + std::to_string(tc.detach_reg_in_lst ? 1 : 0) + "\n";
  return s;
}

std::pair<RegressorConfig, TrainConfig> parse_config(const std::string& text, const std::string& origin) {
  RegressorConfig mc;
  TrainConfig tc;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(origin + ": line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    auto as_int = [&]() { return static_cast<int>(parse_long(val, origin, line_no)); };
    auto as_double = [&]() { return parse_dbl(val, origin, line_no); };
    if (key == "model.channels") mc.channels = split_ints(val, origin);
    else if (key == "model.downsample") mc.downsample = as_int();
    else if (key == "model.kernel") mc.kernel = as_int();
    else if (key == "model.batch_norm") mc.batch_norm = as_int() != 0;
    else if (key == "train.lambda") tc.lambda = as_double();
    else if (key == "train.beta") tc.beta = as_double();
    else if (key == "train.block_rows") tc.block_rows = as_int();
    else if (key == "train.block_cols") tc.block_cols = as_int();
    else if (key == "train.batch_size") tc.batch_size = as_int();
    else if (key == "train.pretrain_epochs") tc.pretrain_epochs = as_int();
    else if (key == "train.finetune_epochs") tc.finetune_epochs = as_int();
    else if (key == "train.pretrain_lr") tc.pretrain_lr = as_double();
    else if (key == "train.finetune_lr") tc.finetune_lr = as_double();
    else if (key == "train.seed") tc.seed = static_cast<uint64_t>(parse_long(val, origin, line_no));
    else if (key == "train.freeze_layers") tc.freeze_layers = as_int();
    else if (key == "train.sigma") tc.sigma = as_double();
    else if (key == "train.downsample") tc.downsample = as_int();
    else if (key == "train.renormalize") tc.renormalize = as_int() != 0;
    else if (key == "train.similarity") {
      if (val == "ones") tc.similarity = SimilarityMode::ones;
      else if (val == "weighted") tc.similarity = SimilarityMode::weighted;
      else throw ParseError(origin + ": line " + std::to_string(line_no) + ": bad similarity '" + val + "'");
    }
    else if (key == "train.global_theta") tc.global_theta = as_int() != 0;
    else if (key == "train.detach_reg") tc.detach_reg_in_lst = as_int() != 0;
    else throw ParseError(origin + ": line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  return {mc, tc};
}

// ---- checkpoints ----------------------------------------------------------

namespace {

std::string shape_token(const Tensor& t) {
  if (t.ndim() == 0) return "scalar";
  std::string s;
  for (int i = 0; i < t.ndim(); ++i) s += (i ? "x" : "") + std::to_string(t.dim(i));
  return s;
}

struct ManifestEntry {
  std::string id, shape, file;
};

std::vector<ManifestEntry> parse_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot open manifest " + path.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    ManifestEntry e;
    if (!(ss >> e.id >> e.shape >> e.file))
      throw CheckpointError(path.string() + ": line " + std::to_string(line_no) +
                            ": expected '<identifier> <shape> <file>'");
    entries.push_back(std::move(e));
  }
  return entries;
}

// All tensors a checkpoint carries, in a fixed order: parameters and
// batch-norm buffers first, then optimizer moments and step counters.
void for_each_checkpoint_tensor(ModelParams& model,
                                const std::function<void(const std::string&, Tensor&)>& fn) {
  model.for_each_parameter([&](const std::string& id, Tensor& t, bool, int) { fn(id, t); });
  model.for_each_parameter([&](const std::string& id, Tensor&, bool trainable, int) {
    if (!trainable) return;
    auto it = model.adam.find(id);
    if (it == model.adam.end() || it->second.m.size() == 0) return;
    fn("adam.m." + id, it->second.m);
    fn("adam.v." + id, it->second.v);
  });
}

}  // namespace

void save_checkpoint(ModelParams& model, const TrainConfig& config, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string manifest;
  auto emit = [&](const std::string& id, Tensor& t) {
    const std::string file = id + ".tnsr";
    save_tensor(t, dir / file);
    manifest += id + " " + shape_token(t) + " " + file + "\n";
  };
  for_each_checkpoint_tensor(model, emit);
  // Step counters ride along as 1-element tensors so the manifest stays
  // uniform.
  model.for_each_parameter([&](const std::string& id, Tensor&, bool trainable, int) {
    if (!trainable) return;
    auto it = model.adam.find(id);
    if (it == model.adam.end() || it->second.m.size() == 0) return;
    Tensor step = Tensor::from_values({1}, {static_cast<float>(it->second.step)});
    emit("adam.t." + id, step);
  });

  std::ofstream mout(dir / "manifest.txt", std::ios::binary);
  if (!mout) throw IoError("cannot write " + (dir / "manifest.txt").string());
  mout << manifest;
  std::ofstream cout_(dir / "config.txt", std::ios::binary);
  if (!cout_) throw IoError("cannot write " + (dir / "config.txt").string());
  cout_ << serialize_config(model.config, config);
}

std::pair<ModelParams, TrainConfig> load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream cin_(dir / "config.txt", std::ios::binary);
  if (!cin_) throw CheckpointError("cannot open " + (dir / "config.txt").string());
  std::ostringstream css;
  css << cin_.rdbuf();
  auto [mc, tc] = parse_config(css.str(), (dir / "config.txt").string());
  mc.validate();
  tc.validate();

  ModelParams model = init_model(mc, tc.seed);
  const std::vector<ManifestEntry> entries = parse_manifest(dir / "manifest.txt");
  auto find_entry = [&](const std::string& id) -> const ManifestEntry* {
    for (const ManifestEntry& e : entries)
      if (e.id == id) return &e;
    return nullptr;
  };

  size_t used = 0;
  auto restore = [&](const std::string& id, Tensor& target) {
    const ManifestEntry* e = find_entry(id);
    if (!e) throw CheckpointError(dir.string() + ": parameter " + id + " missing from manifest");
    if (e->shape != shape_token(target))
      throw CheckpointError(dir.string() + ": parameter " + id + " has shape " + e->shape +
                            ", expected " + shape_token(target));
    const std::filesystem::path file = dir / e->file;
    if (!std::filesystem::exists(file))
      throw CheckpointError(dir.string() + ": parameter " + id + ": file " + e->file + " is missing");
    Tensor loaded = load_tensor(file);
    if (!loaded.same_shape(target))
      throw CheckpointError(dir.string() + ": parameter " + id + ": file shape " +
                            shape_token(loaded) + " does not match manifest " + e->shape);
    auto src = loaded.values();
    auto dst = target.values();
    for (size_t i = 0; i < dst.size(); ++i) dst[i] = src[i];
    ++used;
  };

  model.for_each_parameter([&](const std::string& id, Tensor& t, bool, int) { restore(id, t); });
  // Optimizer state is optional (an untrained model has none), but when the
  // manifest lists it, all three pieces must be present and well-formed.
  model.for_each_parameter([&](const std::string& id, Tensor& t, bool trainable, int) {
    if (!trainable || !find_entry("adam.m." + id)) return;
    AdamState st;
    st.m = Tensor::zeros(t.shape());
    st.v = Tensor::zeros(t.shape());
    restore("adam.m." + id, st.m);
    restore("adam.v." + id, st.v);
    Tensor step = Tensor::zeros({1});
    restore("adam.t." + id, step);
    st.step = static_cast<int64_t>(step.values()[0]);
    model.adam[id] = st;
  });
  if (used != entries.size())
    throw CheckpointError(dir.string() + ": manifest lists " + std::to_string(entries.size()) +
                          " tensors but the model uses " + std::to_string(used));
  return {std::move(model), tc};
}

}  // namespace lstn
