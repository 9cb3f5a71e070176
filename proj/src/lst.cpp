#include "lstn/lst.hpp"

#include <cmath>

namespace lstn {

std::vector<int> block_extents(int extent, int parts) {
  if (parts <= 0) throw DimensionError("partition: non-positive block count " + std::to_string(parts));
  if (parts > extent)
    throw DimensionError("partition: " + std::to_string(parts) + " blocks across extent " +
                         std::to_string(extent));
  const int base = extent / parts;
  const int rem = extent % parts;
  // Leading blocks get the base extent, the trailing `rem` blocks one more.
  std::vector<int> ext(static_cast<size_t>(parts), base);
  for (int i = parts - rem; i < parts; ++i) ext[static_cast<size_t>(i)] = base + 1;
  return ext;
}

template <typename T>
std::vector<BlockT<T>> partition(const TensorT<T>& grid, const BlockGrid& blocks) {
  if (grid.ndim() != 2)
    throw DimensionError("partition: expected a 2-D grid, got " + TensorT<T>::shape_string(grid.shape()));
  const std::vector<int> hs = block_extents(grid.dim(0), blocks.rows);
  const std::vector<int> ws = block_extents(grid.dim(1), blocks.cols);
  std::vector<BlockT<T>> out;
  out.reserve(static_cast<size_t>(blocks.rows) * blocks.cols);
  int r0 = 0;
  for (int bi = 0; bi < blocks.rows; ++bi) {
    int c0 = 0;
    for (int bj = 0; bj < blocks.cols; ++bj) {
      BlockT<T> b;
      b.row0 = r0;
      b.col0 = c0;
      b.tensor = slice2d(grid, r0, c0, hs[static_cast<size_t>(bi)], ws[static_cast<size_t>(bj)]);
      out.push_back(b);
      c0 += ws[static_cast<size_t>(bj)];
    }
    r0 += hs[static_cast<size_t>(bi)];
  }
  return out;
}

template <typename T>
SamplingGridT<T> affine_grid(const AffineParamsT<T>& theta, int h, int w) {
  return {affine_grid_op(theta.theta, h, w)};
}

template <typename T>
TensorT<T> bilinear_sample(const TensorT<T>& source, const SamplingGridT<T>& grid) {
  return grid_sample(source, grid.coords);
}

template <typename T>
AffineParamsT<T> localize(ModelParamsT<T>& model, const TensorT<T>& density_block) {
  if (density_block.ndim() != 2)
    throw DimensionError("localize: expected a 2-D block, got " +
                         TensorT<T>::shape_string(density_block.shape()));
  TensorT<T> x = reshape(density_block, {1, density_block.dim(0), density_block.dim(1)});
  x = relu(conv2d(x, model.loc_conv0.weight, model.loc_conv0.bias, 1, 1));
  x = relu(conv2d(x, model.loc_conv1.weight, model.loc_conv1.bias, 1, 2));
  TensorT<T> pooled = spatial_mean(x);
  TensorT<T> six = linear(pooled, model.loc_fc_weight, model.loc_fc_bias);
  return {reshape(six, {2, 3})};
}

template <typename T>
TensorT<T> warp_block(ModelParamsT<T>& model, const TensorT<T>& density_block) {
  AffineParamsT<T> theta = localize(model, density_block);
  SamplingGridT<T> grid = affine_grid(theta, density_block.dim(0), density_block.dim(1));
  return bilinear_sample(density_block, grid);
}

template <typename T>
double block_similarity(const TensorT<T>& a, const TensorT<T>& b, double beta) {
  if (!a.same_shape(b))
    throw DimensionError("block_similarity: shape " + TensorT<T>::shape_string(a.shape()) + " vs " +
                         TensorT<T>::shape_string(b.shape()));
  if (beta <= 0) throw ConfigError("block_similarity: beta must be positive, got " + std::to_string(beta));
  auto va = a.values();
  auto vb = b.values();
  double msd = 0.0;
  for (size_t i = 0; i < va.size(); ++i) {
    const double d = static_cast<double>(va[i]) - static_cast<double>(vb[i]);
    msd += d * d;
  }
  msd /= static_cast<double>(va.size());
  return std::exp(-msd / (2.0 * beta * beta));
}

template <typename T>
TensorT<T> lst_loss(ModelParamsT<T>& model, const std::vector<TensorT<T>>& frames,
                    const std::vector<DensityMapT<T>>& density_estimates,
                    const std::vector<DensityMapT<T>>& ground_truths, const BlockGrid& blocks,
                    double beta, const LstOptions& options) {
  const size_t len = frames.size();
  if (len < 2) throw UsageError("lst_loss: need at least 2 frames, got " + std::to_string(len));
  if (density_estimates.size() != len || ground_truths.size() != len)
    throw DimensionError("lst_loss: " + std::to_string(len) + " frames vs " +
                         std::to_string(density_estimates.size()) + " estimates and " +
                         std::to_string(ground_truths.size()) + " ground truths");
  if (blocks.rows <= 0 || blocks.cols <= 0)
    throw ConfigError("lst_loss: block grid must be positive, got " + std::to_string(blocks.rows) +
                      "x" + std::to_string(blocks.cols));

  TensorT<T> acc = TensorT<T>::scalar(T(0));
  for (size_t t = 0; t + 1 < len; ++t) {
    TensorT<T> frame_t = frames[t];
    TensorT<T> frame_t1 = frames[t + 1];
    if (frame_t.ndim() == 3 && frame_t.dim(0) == 1)
      frame_t = reshape(frame_t.detach(), {frame_t.dim(1), frame_t.dim(2)});
    if (frame_t1.ndim() == 3 && frame_t1.dim(0) == 1)
      frame_t1 = reshape(frame_t1.detach(), {frame_t1.dim(1), frame_t1.dim(2)});
    if (!frame_t.same_shape(frame_t1))
      throw DimensionError("lst_loss: frames " + std::to_string(t) + " and " + std::to_string(t + 1) +
                           " differ in shape");

    TensorT<T> est = density_estimates[t].grid;
    if (options.detach_regressor) est = est.detach();
    const TensorT<T>& gt = ground_truths[t + 1].grid;
    if (!est.same_shape(gt))
      throw DimensionError("lst_loss: estimate " + std::to_string(t) + " " +
                           TensorT<T>::shape_string(est.shape()) + " vs ground truth " +
                           std::to_string(t + 1) + " " + TensorT<T>::shape_string(gt.shape()));

    std::vector<BlockT<T>> fb_t = partition(frame_t, blocks);
    std::vector<BlockT<T>> fb_t1 = partition(frame_t1, blocks);
    std::vector<BlockT<T>> gt_b = partition(gt, blocks);

    std::vector<BlockT<T>> warped;
    if (options.global_theta) {
      // One transform for the whole map, then compare tile by tile.
      AffineParamsT<T> theta = localize(model, est);
      SamplingGridT<T> grid = affine_grid(theta, est.dim(0), est.dim(1));
      warped = partition(bilinear_sample(est, grid), blocks);
    } else {
      std::vector<BlockT<T>> est_b = partition(est, blocks);
      warped.reserve(est_b.size());
      for (BlockT<T>& b : est_b) warped.push_back({b.row0, b.col0, warp_block(model, b.tensor)});
    }

    for (size_t i = 0; i < warped.size(); ++i) {
      const double s = options.constant_similarity
                           ? 1.0
                           : block_similarity(fb_t[i].tensor, fb_t1[i].tensor, beta);
      TensorT<T> d = sub(warped[i].tensor, gt_b[i].tensor);
      acc = add(acc, scale(sum(mul(d, d)), s));
    }
  }
  return scale(acc, 1.0 / (2.0 * static_cast<double>(len)));
}

#define LSTN_INSTANTIATE_LST(T)                                                                 \
  template std::vector<BlockT<T>> partition<T>(const TensorT<T>&, const BlockGrid&);            \
  template SamplingGridT<T> affine_grid<T>(const AffineParamsT<T>&, int, int);                  \
  template TensorT<T> bilinear_sample<T>(const TensorT<T>&, const SamplingGridT<T>&);           \
  template AffineParamsT<T> localize<T>(ModelParamsT<T>&, const TensorT<T>&);                   \
  template TensorT<T> warp_block<T>(ModelParamsT<T>&, const TensorT<T>&);                       \
  template double block_similarity<T>(const TensorT<T>&, const TensorT<T>&, double);            \
  template TensorT<T> lst_loss<T>(ModelParamsT<T>&, const std::vector<TensorT<T>>&,             \
                                  const std::vector<DensityMapT<T>>&,                           \
                                  const std::vector<DensityMapT<T>>&, const BlockGrid&, double, \
                                  const LstOptions&);

LSTN_INSTANTIATE_LST(float)
LSTN_INSTANTIATE_LST(double)

}  // namespace lstn
