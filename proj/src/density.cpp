#include "lstn/density.hpp"

#include <cmath>

namespace lstn {

namespace {
constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
}

template <typename T>
TensorT<T> gaussian_kernel(double sigma, int radius) {
  if (sigma <= 0) throw ConfigError("gaussian_kernel: sigma must be positive, got " + std::to_string(sigma));
  if (radius < 0) throw ConfigError("gaussian_kernel: negative radius " + std::to_string(radius));
  const int n = 2 * radius + 1;
  TensorT<T> k = TensorT<T>::zeros({n, n});
  const double norm = 1.0 / (kTwoPi * sigma * sigma);
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  auto v = k.values();
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx)
      v[static_cast<size_t>(dy + radius) * n + (dx + radius)] =
          static_cast<T>(norm * std::exp(-(static_cast<double>(dx) * dx + static_cast<double>(dy) * dy) * inv2s2));
  return k;
}

template <typename T>
DensityMapT<T> rasterize_density(const std::vector<HeadPoint>& heads, int height, int width,
                                 double sigma, bool renormalize, int downsample, int frame_index) {
  if (height <= 0 || width <= 0)
    throw DimensionError("rasterize_density: non-positive grid " + std::to_string(height) + "x" +
                         std::to_string(width));
  if (sigma <= 0) throw ConfigError("rasterize_density: sigma must be positive, got " + std::to_string(sigma));

  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  const double norm = 1.0 / (kTwoPi * sigma * sigma);
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);

  // Accumulate in double and narrow once at the end, so per-head mass stays
  // accurate and integer translations of the head set shift the map bitwise.
  std::vector<double> acc(static_cast<size_t>(height) * width, 0.0);
  std::vector<double> w;  // per-head weights, reused
  for (size_t hi = 0; hi < heads.size(); ++hi) {
    const HeadPoint& head = heads[hi];
    if (!(head.x >= 0 && head.x < width && head.y >= 0 && head.y < height)) {
      std::string where = frame_index >= 0 ? "frame " + std::to_string(frame_index) + ", " : "";
      throw ValidationError("rasterize_density: " + where + "head " + std::to_string(hi) + " at (" +
                            std::to_string(head.x) + "," + std::to_string(head.y) +
                            ") outside grid " + std::to_string(width) + "x" + std::to_string(height));
    }
    // Cells whose centers fall within the square truncation window.
    const int c0 = static_cast<int>(std::ceil(head.x - radius - 0.5));
    const int c1 = static_cast<int>(std::floor(head.x + radius - 0.5));
    const int r0 = static_cast<int>(std::ceil(head.y - radius - 0.5));
    const int r1 = static_cast<int>(std::floor(head.y + radius - 0.5));
    w.clear();
    double mass = 0.0;
    for (int r = r0; r <= r1; ++r) {
      const double dy = (r + 0.5) - head.y;
      for (int c = c0; c <= c1; ++c) {
        const double dx = (c + 0.5) - head.x;
        const double g = norm * std::exp(-(dx * dx + dy * dy) * inv2s2);
        w.push_back(g);
        if (r >= 0 && r < height && c >= 0 && c < width) mass += g;
      }
    }
    const double scale = renormalize && mass > 0.0 ? 1.0 / mass : 1.0;
    size_t wi = 0;
    for (int r = r0; r <= r1; ++r)
      for (int c = c0; c <= c1; ++c, ++wi)
        if (r >= 0 && r < height && c >= 0 && c < width)
          acc[static_cast<size_t>(r) * width + c] += w[wi] * scale;
  }

  DensityMapT<T> map;
  map.downsample = downsample;
  map.grid = TensorT<T>::zeros({height, width});
  auto v = map.grid.values();
  for (size_t i = 0; i < acc.size(); ++i) v[i] = static_cast<T>(acc[i]);
  return map;
}

template <typename T>
double count(const DensityMapT<T>& map) {
  double acc = 0.0;
  for (T v : map.grid.values()) acc += static_cast<double>(v);
  return acc;
}

#define LSTN_INSTANTIATE_DENSITY(T)                                                            \
  template TensorT<T> gaussian_kernel<T>(double, int);                                         \
  template DensityMapT<T> rasterize_density<T>(const std::vector<HeadPoint>&, int, int, double, \
                                               bool, int, int);                                \
  template double count<T>(const DensityMapT<T>&);

LSTN_INSTANTIATE_DENSITY(float)
LSTN_INSTANTIATE_DENSITY(double)

}  // namespace lstn
