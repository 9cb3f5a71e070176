#pragma once

#include "lstn/regressor.hpp"

namespace lstn {

// Block layout used by the locality-constrained transform: the map is cut
// into rows x cols rectangles.  When an extent does not divide evenly the
// trailing blocks are one pixel larger, so the blocks always tile the map
// exactly.
struct BlockGrid {
  int rows = 1;
  int cols = 2;
};

// One tile of a partitioned 2-D tensor plus its placement.
template <typename T>
struct BlockT {
  int row0 = 0, col0 = 0;
  TensorT<T> tensor;
};

// Extents of the blocks along one axis, length `parts`, summing to `extent`.
std::vector<int> block_extents(int extent, int parts);

// Cuts a 2-D tensor into blocks.rows x blocks.cols tiles (row-major order).
// Tiles are differentiable slices: gradients scatter back into the source.
template <typename T>
std::vector<BlockT<T>> partition(const TensorT<T>& grid, const BlockGrid& blocks);

// 2x3 affine map acting on normalized [-1,1] coordinates:
//   [x_s, y_s]^T = theta . [x_t, y_t, 1]^T
template <typename T>
struct AffineParamsT {
  TensorT<T> theta;  // [2,3]

  static AffineParamsT identity() {
    return {TensorT<T>::from_values({2, 3}, {T(1), T(0), T(0), T(0), T(1), T(0)})};
  }
  static AffineParamsT from_values(const std::vector<T>& six) {
    if (six.size() != 6) throw DimensionError("affine params: expected 6 coefficients");
    return {TensorT<T>::from_values({2, 3}, six)};
  }
};

using AffineParams = AffineParamsT<float>;

// Per-output-cell source coordinates in normalized [-1,1] space.
template <typename T>
struct SamplingGridT {
  TensorT<T> coords;  // [h,w,2], (x_s, y_s) in the last axis
  int height() const { return coords.dim(0); }
  int width() const { return coords.dim(1); }
};

using SamplingGrid = SamplingGridT<float>;

// Source grid for warping an h x w output through the given transform.
template <typename T>
SamplingGridT<T> affine_grid(const AffineParamsT<T>& theta, int h, int w);

// Bilinear lookup of `source` at the grid coordinates; cells outside the
// source contribute zero.  Differentiable in both arguments.
template <typename T>
TensorT<T> bilinear_sample(const TensorT<T>& source, const SamplingGridT<T>& grid);

// Predicts the affine transform for one density block with the model's
// localization network (conv, conv stride 2, spatial mean, linear head).
template <typename T>
AffineParamsT<T> localize(ModelParamsT<T>& model, const TensorT<T>& density_block);

// localize + affine_grid + bilinear_sample on a single block.
template <typename T>
TensorT<T> warp_block(ModelParamsT<T>& model, const TensorT<T>& density_block);

// Appearance agreement of two co-located frame blocks:
//   exp(-msd / (2 beta^2)),  msd = mean squared intensity difference.
// Plain value, no gradient: similarity acts as a constant weight.
template <typename T>
double block_similarity(const TensorT<T>& a, const TensorT<T>& b, double beta);

struct LstOptions {
  bool global_theta = false;        // one frame-level transform instead of per block
  bool detach_regressor = false;    // stop gradients into the density estimates
  bool constant_similarity = false; // weight every block with 1 instead of appearance
};

// Transform-consistency loss over a clip of T >= 2 aligned frames:
//   1/(2T) sum_{t<T-1} sum_blocks S_block * || warp(est_t)_block - gt_{t+1,block} ||^2
// where warp predicts frame t+1's density from frame t's estimate and S is
// the appearance similarity of the co-located frame blocks.
template <typename T>
TensorT<T> lst_loss(ModelParamsT<T>& model, const std::vector<TensorT<T>>& frames,
                    const std::vector<DensityMapT<T>>& density_estimates,
                    const std::vector<DensityMapT<T>>& ground_truths, const BlockGrid& blocks,
                    double beta, const LstOptions& options = {});

}  // namespace lstn
