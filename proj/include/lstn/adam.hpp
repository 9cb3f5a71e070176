#pragma once

#include "lstn/tensor.hpp"

namespace lstn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Per-parameter Adam state.  Moment buffers are zero-initialized on first
// use and mirror the parameter's shape.
template <typename T>
struct AdamStateT {
  TensorT<T> m;
  TensorT<T> v;
  int64_t step = 0;

  template <typename U>
  AdamStateT<U> cast() const {
    AdamStateT<U> s;
    if (m.size() > 0) s.m = m.template cast<U>();
    if (v.size() > 0) s.v = v.template cast<U>();
    s.step = step;
    return s;
  }
};

using AdamState = AdamStateT<float>;

// One Adam update with bias correction:
//   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2
//   p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
// Internals run in double; the parameter must carry a populated gradient.
template <typename T>
void adam_step(TensorT<T>& param, AdamStateT<T>& state, const AdamConfig& config);

}  // namespace lstn
