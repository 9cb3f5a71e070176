#pragma once

#include "lstn/tensor.hpp"

namespace lstn {

// Differentiable tensor operations.  Every function returns a fresh tensor
// wired into the graph of its tracked inputs; gradients flow to any input
// with requires_grad set.  Shapes are validated up front and violations
// throw DimensionError naming the offending axes.

template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b);

template <typename T>
TensorT<T> sub(const TensorT<T>& a, const TensorT<T>& b);

// Elementwise product.
template <typename T>
TensorT<T> mul(const TensorT<T>& a, const TensorT<T>& b);

// Multiplication by a constant (the constant is not a graph node).
template <typename T>
TensorT<T> scale(const TensorT<T>& a, double s);

// Sum of all elements, as a scalar tensor.  Accumulates in double.
template <typename T>
TensorT<T> sum(const TensorT<T>& a);

// max(x, 0); subgradient 0 at exactly 0.
template <typename T>
TensorT<T> relu(const TensorT<T>& a);

// Same data, new extents; element count must match.
template <typename T>
TensorT<T> reshape(const TensorT<T>& a, const std::vector<int>& shape);

// Rectangular window [r0, r0+h) x [c0, c0+w) of a 2-D tensor.  The backward
// pass scatters gradients into the corresponding source window.
template <typename T>
TensorT<T> slice2d(const TensorT<T>& a, int r0, int c0, int h, int w);

// 2-D cross-correlation.  input [Cin,H,W], kernels [Cout,Cin,k,k],
// bias [Cout].  Zero padding; output extent floor((H + 2p - k)/stride) + 1.
template <typename T>
TensorT<T> conv2d(const TensorT<T>& input, const TensorT<T>& kernels, const TensorT<T>& bias,
                  int padding, int stride);

// x [in] -> weight [out,in] * x + bias [out].
template <typename T>
TensorT<T> linear(const TensorT<T>& x, const TensorT<T>& weight, const TensorT<T>& bias);

// Mean over the spatial extent: [C,H,W] -> [C].
template <typename T>
TensorT<T> spatial_mean(const TensorT<T>& x);

// Batch normalization over [N,C,H,W].  In training mode the batch statistics
// normalize and the running buffers are updated in place with the given
// momentum (biased variance in both roles); in eval mode the running buffers
// normalize and nothing is mutated.
template <typename T>
TensorT<T> batch_norm(const TensorT<T>& x, const TensorT<T>& gamma, const TensorT<T>& beta,
                      double eps, bool training, TensorT<T> running_mean, TensorT<T> running_var,
                      double momentum);

// Source-coordinate grid for a 2x3 affine map acting on normalized [-1,1]
// target coordinates.  theta [2,3] -> grid [h,w,2] with (x_s, y_s) in the
// last axis.  Target coordinates are the output cell centers.
template <typename T>
TensorT<T> affine_grid_op(const TensorT<T>& theta, int h, int w);

// Bilinear sampling of a 2-D source at grid [h,w,2] of normalized source
// coordinates.  Cells outside the source contribute zero.  Differentiable
// with respect to both the source and the grid.  Coordinates within
// kCoordSnap of an exact cell center are treated as exact, which keeps
// identity and whole-cell translations reproducing values bitwise.
template <typename T>
TensorT<T> grid_sample(const TensorT<T>& source, const TensorT<T>& grid);

inline constexpr double kCoordSnap = 1e-4;  // pixels

}  // namespace lstn
