#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lstn/density.hpp"
#include "lstn/tensor.hpp"

namespace lstn {

// Per-video head annotations in frame pixel coordinates (half-open bounds).
// Text form:
//   FDA1 <width> <height> <frame_count>
//   frame <index> <n>
//   <x> <y>            (n lines, decimal)
struct VideoAnnotation {
  std::string id;
  int width = 0;
  int height = 0;
  std::vector<std::vector<HeadPoint>> frames;

  int frame_count() const { return static_cast<int>(frames.size()); }
};

VideoAnnotation parse_annotations(const std::string& text, const std::string& origin,
                                  std::string id = "");
VideoAnnotation load_annotations(const std::filesystem::path& path, std::string id = "");
std::string serialize_annotations(const VideoAnnotation& ann);
void save_annotations(const VideoAnnotation& ann, const std::filesystem::path& path);

// Scales coordinates by (sx, sy) and the frame extents to match; scaled
// coordinates must stay inside the scaled bounds.
VideoAnnotation scale_annotations(const VideoAnnotation& ann, double sx, double sy);

// 8-bit grayscale frames as [1,H,W] tensors with values in [0,255].
// On disk: binary PGM (P5), maxval 255.  Saving rounds to the nearest
// integer, so integer-valued tensors round-trip exactly.
Tensor load_frame(const std::filesystem::path& path);
void save_frame(const Tensor& frame, const std::filesystem::path& path);

// Bilinear resize with cell-center alignment and edge replication.
Tensor resize_frame(const Tensor& frame, int out_h, int out_w);

// Synthetic crowd clips: Gaussian dots drifting over a mid-gray background
// with optional rotation jitter, size drift, entries/exits and occlusions.
struct SynthConfig {
  int frames = 40;
  int height = 64;
  int width = 96;
  int head_count = 10;
  double max_speed = 1.5;        // pixels per frame
  double scale_drift = 0.02;     // max relative dot-radius change per frame
  double rot_jitter = 0.0;       // radians per frame about the frame center
  double entry_exit_prob = 0.0;  // chance per frame of a new head entering
  double occlusion_prob = 0.0;   // per visible head per frame
  int occlusion_duration = 3;    // frames a head stays hidden
  double dot_radius = 2.5;
  double dot_intensity = 90.0;
  uint64_t seed = 0;

  void validate() const;
};

struct SynthResult {
  std::vector<Tensor> frames;
  VideoAnnotation annotation;
};

SynthResult synth_video(const SynthConfig& config);

// One video ready for training or evaluation.
struct SequenceData {
  std::string id;
  std::vector<Tensor> frames;
  VideoAnnotation annotation;
};

// `count` videos with seeds derived from config.seed, ids "<prefix>_NNN".
std::vector<SequenceData> make_synth_dataset(const SynthConfig& config, int count,
                                             const std::string& prefix = "video");

// Directory layout: <dir>/annotation.txt plus frame_00000.pgm ... in frame
// order.  load_video_dir checks frame count and extents against the
// annotation header.
void save_video_dir(const SequenceData& seq, const std::filesystem::path& dir);
SequenceData load_video_dir(const std::filesystem::path& dir);
std::vector<SequenceData> load_dataset(const std::filesystem::path& root);

}  // namespace lstn
