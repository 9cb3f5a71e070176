#include "lstn/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lstn/rng.hpp"

namespace lstn {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

long parse_int(const std::string& tok, const std::string& origin, int line_no) {
  size_t used = 0;
  long v = 0;
  try {
    v = std::stol(tok, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != tok.size())
    throw ParseError(origin + ": line " + std::to_string(line_no) + ": expected integer, got '" + tok + "'");
  return v;
}

double parse_float(const std::string& tok, const std::string& origin, int line_no) {
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

void check_head_bounds(const HeadPoint& h, int width, int height, int frame, size_t index,
                       const std::string& origin) {
  if (!(h.x >= 0 && h.x < width && h.y >= 0 && h.y < height))
    throw ValidationError(origin + ": frame " + std::to_string(frame) + ", head " +
                          std::to_string(index) + ": (" + std::to_string(h.x) + "," +
                          std::to_string(h.y) + ") outside [0," + std::to_string(width) + ")x[0," +
                          std::to_string(height) + ")");
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

VideoAnnotation parse_annotations(const std::string& text, const std::string& origin, std::string id) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!split_ws(line).empty()) return true;
    }
    return false;
  };

  if (!next_line()) throw ParseError(origin + ": empty file");
  std::vector<std::string> toks = split_ws(line);
  if (toks.size() != 4 || toks[0] != "FDA1")
    throw ParseError(origin + ": line " + std::to_string(line_no) +
                     ": expected 'FDA1 <width> <height> <frame_count>'");
  VideoAnnotation ann;
  ann.id = std::move(id);
  ann.width = static_cast<int>(parse_int(toks[1], origin, line_no));
  ann.height = static_cast<int>(parse_int(toks[2], origin, line_no));
  const long frame_count = parse_int(toks[3], origin, line_no);
  if (ann.width <= 0 || ann.height <= 0)
    throw ValidationError(origin + ": non-positive frame extent " + std::to_string(ann.width) + "x" +
                          std::to_string(ann.height));
  if (frame_count <= 0) throw ValidationError(origin + ": empty frame list");

  for (long f = 0; f < frame_count; ++f) {
    if (!next_line())
      throw ParseError(origin + ": line " + std::to_string(line_no + 1) + ": missing frame " +
                       std::to_string(f));
    toks = split_ws(line);
    if (toks.size() != 3 || toks[0] != "frame")
      throw ParseError(origin + ": line " + std::to_string(line_no) + ": expected 'frame <index> <n>'");
    if (parse_int(toks[1], origin, line_no) != f)
      throw ParseError(origin + ": line " + std::to_string(line_no) + ": expected frame index " +
                       std::to_string(f) + ", got " + toks[1]);
    const long n = parse_int(toks[2], origin, line_no);
    if (n < 0) throw ParseError(origin + ": line " + std::to_string(line_no) + ": negative head count");
    std::vector<HeadPoint> heads;
    heads.reserve(static_cast<size_t>(n));
    for (long i = 0; i < n; ++i) {
      if (!next_line())
        throw ParseError(origin + ": line " + std::to_string(line_no + 1) + ": missing head " +
                         std::to_string(i) + " of frame " + std::to_string(f));
      toks = split_ws(line);
      if (toks.size() != 2)
        throw ParseError(origin + ": line " + std::to_string(line_no) + ": expected '<x> <y>'");
      HeadPoint h{parse_float(toks[0], origin, line_no), parse_float(toks[1], origin, line_no)};
      check_head_bounds(h, ann.width, ann.height, static_cast<int>(f), heads.size(), origin);
      heads.push_back(h);
    }
    ann.frames.push_back(std::move(heads));
  }
  if (next_line())
    throw ParseError(origin + ": line " + std::to_string(line_no) + ": trailing content after last frame");
  return ann;
}

VideoAnnotation load_annotations(const std::filesystem::path& path, std::string id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (id.empty()) {
    // Videos are usually stored one per directory with a fixed file name, so
    // the directory is the natural identifier.
    id = path.stem() == "annotation" ? path.parent_path().filename().string() : path.stem().string();
  }
  return parse_annotations(ss.str(), path.string(), std::move(id));
}

std::string serialize_annotations(const VideoAnnotation& ann) {
  if (ann.frames.empty()) throw ValidationError("annotations: empty frame list");
  std::string out = "FDA1 " + std::to_string(ann.width) + " " + std::to_string(ann.height) + " " +
                    std::to_string(ann.frames.size()) + "\n";
  for (size_t f = 0; f < ann.frames.size(); ++f) {
    out += "frame " + std::to_string(f) + " " + std::to_string(ann.frames[f].size()) + "\n";
    for (size_t i = 0; i < ann.frames[f].size(); ++i) {
      const HeadPoint& h = ann.frames[f][i];
      check_head_bounds(h, ann.width, ann.height, static_cast<int>(f), i, "annotations");
      out += fmt("%.3f", h.x) + " " + fmt("%.3f", h.y) + "\n";
    }
  }
  return out;
}

void save_annotations(const VideoAnnotation& ann, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << serialize_annotations(ann);
  if (!out) throw IoError("write failed for " + path.string());
}

VideoAnnotation scale_annotations(const VideoAnnotation& ann, double sx, double sy) {
  if (sx <= 0 || sy <= 0)
    throw ConfigError("scale_annotations: factors must be positive, got (" + std::to_string(sx) +
                      "," + std::to_string(sy) + ")");
  VideoAnnotation out = ann;
  out.width = static_cast<int>(std::lround(ann.width * sx));
  out.height = static_cast<int>(std::lround(ann.height * sy));
  for (size_t f = 0; f < out.frames.size(); ++f) {
    for (size_t i = 0; i < out.frames[f].size(); ++i) {
      HeadPoint& h = out.frames[f][i];
      h.x *= sx;
      h.y *= sy;
      check_head_bounds(h, out.width, out.height, static_cast<int>(f), i, "scale_annotations");
    }
  }
  return out;
}

// ---- PGM frames ------------------------------------------------------------

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string pgm_token(std::istream& in, const std::string& origin) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  if (c == EOF) throw ParseError(origin + ": truncated header");
  std::string tok;
  while (c != EOF && !std::isspace(c)) {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  return tok;
}

}  // namespace

Tensor load_frame(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string origin = path.string();
  if (pgm_token(in, origin) != "P5") throw ParseError(origin + ": bad magic, expected P5");
  const long w = parse_int(pgm_token(in, origin), origin, 1);
  const long h = parse_int(pgm_token(in, origin), origin, 1);
  const long maxval = parse_int(pgm_token(in, origin), origin, 1);
  if (w <= 0 || h <= 0) throw ValidationError(origin + ": non-positive extent " + std::to_string(w) + "x" + std::to_string(h));
  if (maxval != 255) throw ParseError(origin + ": unsupported maxval " + std::to_string(maxval));
  // The single byte after maxval is the separator; payload follows raw.
  std::vector<unsigned char> bytes(static_cast<size_t>(w) * static_cast<size_t>(h));
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
    throw ParseError(origin + ": truncated payload, expected " + std::to_string(bytes.size()) + " bytes");
  Tensor frame = Tensor::zeros({1, static_cast<int>(h), static_cast<int>(w)});
  auto v = frame.values();
  for (size_t i = 0; i < bytes.size(); ++i) v[i] = static_cast<float>(bytes[i]);
  return frame;
}

void save_frame(const Tensor& frame, const std::filesystem::path& path) {
  if (frame.ndim() != 3 || frame.dim(0) != 1)
    throw DimensionError("save_frame: expected [1,H,W], got " + Tensor::shape_string(frame.shape()));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "P5\n" << frame.dim(2) << " " << frame.dim(1) << "\n255\n";
  for (float v : frame.values()) {
    const long q = std::lround(std::min(255.0f, std::max(0.0f, v)));
    out.put(static_cast<char>(static_cast<unsigned char>(q)));
  }
  if (!out) throw IoError("write failed for " + path.string());
}

Tensor resize_frame(const Tensor& frame, int out_h, int out_w) {
  if (frame.ndim() != 3 || frame.dim(0) != 1)
    throw DimensionError("resize_frame: expected [1,H,W], got " + Tensor::shape_string(frame.shape()));
  if (out_h <= 0 || out_w <= 0)
    throw DimensionError("resize_frame: non-positive target " + std::to_string(out_h) + "x" +
                         std::to_string(out_w));
  const int H = frame.dim(1), W = frame.dim(2);
  Tensor out = Tensor::zeros({1, out_h, out_w});
  const float* src = frame.values().data();
  float* dst = out.values().data();
  const double ry = static_cast<double>(H) / out_h;
  const double rx = static_cast<double>(W) / out_w;
  auto clampi = [](int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); };
  for (int r = 0; r < out_h; ++r) {
    const double sy = (r + 0.5) * ry - 0.5;
    const int y0 = static_cast<int>(std::floor(sy));
    const double fy = sy - y0;
    const int ya = clampi(y0, H - 1), yb = clampi(y0 + 1, H - 1);
    for (int c = 0; c < out_w; ++c) {
      const double sx = (c + 0.5) * rx - 0.5;
      const int x0 = static_cast<int>(std::floor(sx));
      const double fx = sx - x0;
      const int xa = clampi(x0, W - 1), xb = clampi(x0 + 1, W - 1);
      const double top = (1 - fx) * src[static_cast<size_t>(ya) * W + xa] +
                         fx * src[static_cast<size_t>(ya) * W + xb];
      const double bot = (1 - fx) * src[static_cast<size_t>(yb) * W + xa] +
                         fx * src[static_cast<size_t>(yb) * W + xb];
      dst[static_cast<size_t>(r) * out_w + c] = static_cast<float>((1 - fy) * top + fy * bot);
    }
  }
  return out;
}

// ---- synthetic clips -------------------------------------------------------

void SynthConfig::validate() const {
  if (frames < 2) throw ConfigError("synth: need at least 2 frames, got " + std::to_string(frames));
  if (height < 8 || width < 8)
    throw ConfigError("synth: frame extent too small: " + std::to_string(height) + "x" + std::to_string(width));
  if (head_count < 0) throw ConfigError("synth: negative head count");
  if (max_speed < 0 || scale_drift < 0 || rot_jitter < 0 || dot_radius <= 0)
    throw ConfigError("synth: motion and dot parameters must be non-negative (radius positive)");
  if (entry_exit_prob < 0 || entry_exit_prob > 1 || occlusion_prob < 0 || occlusion_prob > 1)
    throw ConfigError("synth: probabilities must lie in [0,1]");
  if (occlusion_duration < 1) throw ConfigError("synth: occlusion duration must be >= 1");
}

namespace {

struct Walker {
  double x, y;        // head position, frame pixels
  double vx, vy;      // pixels per frame
  double radius;      // current dot radius
  int hidden = 0;     // frames of occlusion left
};

// Heads vanish slightly before the half-open bound so serialized coordinates
// stay strictly inside it after rounding.
constexpr double kBorder = 0.51;

bool inside(const Walker& w, const SynthConfig& cfg) {
  return w.x >= kBorder && w.x <= cfg.width - kBorder && w.y >= kBorder && w.y <= cfg.height - kBorder;
}

Walker spawn_inside(const SynthConfig& cfg, Rng& rng) {
  Walker w;
  w.x = rng.uniform(2.0, cfg.width - 2.0);
  w.y = rng.uniform(2.0, cfg.height - 2.0);
  const double ang = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
  const double spd = rng.uniform(0.25, 1.0) * cfg.max_speed;
  w.vx = spd * std::cos(ang);
  w.vy = spd * std::sin(ang);
  w.radius = cfg.dot_radius * rng.uniform(0.8, 1.2);
  return w;
}

Walker spawn_at_border(const SynthConfig& cfg, Rng& rng) {
  Walker w;
  const int side = rng.uniform_int(4);
  const double spd = rng.uniform(0.5, 1.0) * std::max(cfg.max_speed, 0.5);
  const double along = rng.uniform(0.1, 0.9);
  switch (side) {
    case 0: w.x = 1.0; w.y = along * cfg.height; w.vx = spd; w.vy = 0; break;
    case 1: w.x = cfg.width - 1.0; w.y = along * cfg.height; w.vx = -spd; w.vy = 0; break;
    case 2: w.x = along * cfg.width; w.y = 1.0; w.vx = 0; w.vy = spd; break;
    default: w.x = along * cfg.width; w.y = cfg.height - 1.0; w.vx = 0; w.vy = -spd; break;
  }
  w.radius = cfg.dot_radius * rng.uniform(0.8, 1.2);
  return w;
}

void render(const SynthConfig& cfg, const std::vector<Walker>& heads, Tensor& frame) {
  std::vector<double> img(static_cast<size_t>(cfg.height) * cfg.width, 128.0);
  for (const Walker& w : heads) {
    if (w.hidden > 0) continue;
    const int reach = static_cast<int>(std::ceil(3.0 * w.radius));
    const int c0 = std::max(0, static_cast<int>(std::floor(w.x)) - reach);
    const int c1 = std::min(cfg.width - 1, static_cast<int>(std::floor(w.x)) + reach);
    const int r0 = std::max(0, static_cast<int>(std::floor(w.y)) - reach);
    const int r1 = std::min(cfg.height - 1, static_cast<int>(std::floor(w.y)) + reach);
    const double inv = 1.0 / (2.0 * w.radius * w.radius);
    for (int r = r0; r <= r1; ++r) {
      const double dy = (r + 0.5) - w.y;
      for (int c = c0; c <= c1; ++c) {
        const double dx = (c + 0.5) - w.x;
        img[static_cast<size_t>(r) * cfg.width + c] += cfg.dot_intensity * std::exp(-(dx * dx + dy * dy) * inv);
      }
    }
  }
  auto v = frame.values();
  for (size_t i = 0; i < img.size(); ++i)
    v[i] = static_cast<float>(std::lround(std::min(255.0, std::max(0.0, img[i]))));
}

}  // namespace

SynthResult synth_video(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  std::vector<Walker> heads;
  for (int i = 0; i < config.head_count; ++i) heads.push_back(spawn_inside(config, rng));

  SynthResult out;
  out.annotation.id = "synth";
  out.annotation.width = config.width;
  out.annotation.height = config.height;
  const double cx = config.width / 2.0, cy = config.height / 2.0;

  for (int t = 0; t < config.frames; ++t) {
    std::vector<HeadPoint> pts;
    for (const Walker& w : heads)
      if (w.hidden == 0) pts.push_back({w.x, w.y});
    out.annotation.frames.push_back(std::move(pts));

    Tensor frame = Tensor::zeros({1, config.height, config.width});
    render(config, heads, frame);
    out.frames.push_back(frame);

    if (t + 1 == config.frames) break;

    // Advance the scene: global rotation jitter, per-head motion, size
    // drift, occlusion bookkeeping, then entries and exits.
    const double dang = config.rot_jitter > 0 ? rng.uniform(-config.rot_jitter, config.rot_jitter) : 0.0;
    const double ca = std::cos(dang), sa = std::sin(dang);
    for (Walker& w : heads) {
      const double rx = w.x - cx, ry = w.y - cy;
      w.x = cx + ca * rx - sa * ry;
      w.y = cy + sa * rx + ca * ry;
      w.x += w.vx;
      w.y += w.vy;
      if (config.scale_drift > 0) {
        w.radius *= 1.0 + rng.uniform(-config.scale_drift, config.scale_drift);
        w.radius = std::min(2.5 * config.dot_radius, std::max(0.4 * config.dot_radius, w.radius));
      }
      if (w.hidden > 0)
        --w.hidden;
      else if (config.occlusion_prob > 0 && rng.uniform() < config.occlusion_prob)
        w.hidden = config.occlusion_duration;
    }
    std::erase_if(heads, [&](const Walker& w) { return !inside(w, config); });
    if (config.entry_exit_prob > 0 && rng.uniform() < config.entry_exit_prob)
      heads.push_back(spawn_at_border(config, rng));
  }
  return out;
}

std::vector<SequenceData> make_synth_dataset(const SynthConfig& config, int count,
                                             const std::string& prefix) {
  if (count <= 0) throw ConfigError("synth dataset: non-positive video count " + std::to_string(count));
  std::vector<SequenceData> out;
  for (int i = 0; i < count; ++i) {
    SynthConfig c = config;
    c.seed = mix_seed(config.seed, static_cast<uint64_t>(i));
    SynthResult r = synth_video(c);
    char idx[8];
    std::snprintf(idx, sizeof idx, "%03d", i);
    SequenceData seq;
    seq.id = prefix + "_" + idx;
    seq.frames = std::move(r.frames);
    seq.annotation = std::move(r.annotation);
    seq.annotation.id = seq.id;
    out.push_back(std::move(seq));
  }
  return out;
}

void save_video_dir(const SequenceData& seq, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_annotations(seq.annotation, dir / "annotation.txt");
  for (size_t i = 0; i < seq.frames.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%05zu.pgm", i);
    save_frame(seq.frames[i], dir / name);
  }
}

SequenceData load_video_dir(const std::filesystem::path& dir) {
  SequenceData seq;
  seq.id = dir.filename().string();
  seq.annotation = load_annotations(dir / "annotation.txt", seq.id);
  for (int i = 0; i < seq.annotation.frame_count(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%05d.pgm", i);
    const std::filesystem::path p = dir / name;
    if (!std::filesystem::exists(p))
      throw ValidationError(dir.string() + ": annotation lists " +
                            std::to_string(seq.annotation.frame_count()) + " frames but " +
                            std::string(name) + " is missing");
    Tensor f = load_frame(p);
    if (f.dim(1) != seq.annotation.height || f.dim(2) != seq.annotation.width)
      throw ValidationError(p.string() + ": frame " + std::to_string(f.dim(2)) + "x" +
                            std::to_string(f.dim(1)) + " does not match annotation " +
                            std::to_string(seq.annotation.width) + "x" +
                            std::to_string(seq.annotation.height));
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

std::vector<SequenceData> load_dataset(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) throw IoError(root.string() + " is not a directory");
  std::vector<std::filesystem::path> dirs;
  for (const auto& e : std::filesystem::directory_iterator(root))
    if (e.is_directory()) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw ValidationError(root.string() + ": no video directories");
  std::vector<SequenceData> out;
  for (const auto& d : dirs) out.push_back(load_video_dir(d));
  return out;
}

}  // namespace lstn
