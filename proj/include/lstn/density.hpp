#pragma once

#include "lstn/tensor.hpp"

namespace lstn {

// A single annotated head position, in the coordinate frame of whatever grid
// it is paired with.  Both axes are half-open: 0 <= x < width.
struct HeadPoint {
  double x = 0.0;
  double y = 0.0;
};

// Crowd density over a grid.  Cell (r,c) covers [c,c+1) x [r,r+1) of the
// grid's own pixel frame; `downsample` records how much coarser that frame
// is than the source video.
template <typename T>
struct DensityMapT {
  TensorT<T> grid;
  int downsample = 1;
};

using DensityMap = DensityMapT<float>;

// Isotropic Gaussian window of extent (2*radius+1)^2, values
// exp(-(dx^2+dy^2)/(2 sigma^2)) / (2 pi sigma^2) at integer offsets.
template <typename T>
TensorT<T> gaussian_kernel(double sigma, int radius);

// Sum of truncated Gaussians centered at the given head positions, evaluated
// at cell centers.  Truncation radius is ceil(3 sigma) in cells.  With
// renormalize each head contributes total mass 1 regardless of truncation or
// map borders; heads outside the grid raise ValidationError naming the frame
// index (when supplied) and the head index.
template <typename T>
DensityMapT<T> rasterize_density(const std::vector<HeadPoint>& heads, int height, int width,
                                 double sigma, bool renormalize, int downsample = 1,
                                 int frame_index = -1);

// Estimated person count: the integral (sum) of the map.
template <typename T>
double count(const DensityMapT<T>& map);

}  // namespace lstn
