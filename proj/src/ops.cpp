#include "lstn/ops.hpp"

#include <cmath>
#include <vector>

namespace lstn {

namespace {

template <typename T>
void require_same_shape(const TensorT<T>& a, const TensorT<T>& b, const char* op) {
  if (!a.same_shape(b))
    throw DimensionError(std::string(op) + ": shape " + TensorT<T>::shape_string(a.shape()) +
                         " vs " + TensorT<T>::shape_string(b.shape()));
}

}  // namespace

template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
  require_same_shape(a, b, "add");
  TensorT<T> out = TensorT<T>::with_graph(a.shape(), {a, b}, [a, b](std::span<const T> g) mutable {
    if (a.requires_grad()) {
      auto ga = a.grad();
      for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (b.requires_grad()) {
      auto gb = b.grad();
      for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
    }
  });
  auto va = a.values();
  auto vb = b.values();
  auto vo = out.values();
  for (size_t i = 0; i < vo.size(); ++i) vo[i] = va[i] + vb[i];
  return out;
}

template <typename T>
TensorT<T> sub(const TensorT<T>& a, const TensorT<T>& b) {
  require_same_shape(a, b, "sub");
  TensorT<T> out = TensorT<T>::with_graph(a.shape(), {a, b}, [a, b](std::span<const T> g) mutable {
    if (a.requires_grad()) {
      auto ga = a.grad();
      for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (b.requires_grad()) {
      auto gb = b.grad();
      for (size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
  auto va = a.values();
  auto vb = b.values();
  auto vo = out.values();
  for (size_t i = 0; i < vo.size(); ++i) vo[i] = va[i] - vb[i];
  return out;
}

template <typename T>
TensorT<T> mul(const TensorT<T>& a, const TensorT<T>& b) {
  require_same_shape(a, b, "mul");
  TensorT<T> out = TensorT<T>::with_graph(a.shape(), {a, b}, [a, b](std::span<const T> g) mutable {
    if (a.requires_grad()) {
      auto ga = a.grad();
      auto vb = b.values();
      for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
    }
    if (b.requires_grad()) {
      auto gb = b.grad();
      auto va = a.values();
      for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
    }
  });
  auto va = a.values();
  auto vb = b.values();
  auto vo = out.values();
  for (size_t i = 0; i < vo.size(); ++i) vo[i] = va[i] * vb[i];
  return out;
}

template <typename T>
TensorT<T> scale(const TensorT<T>& a, double s) {
  const T ts = static_cast<T>(s);
  TensorT<T> out = TensorT<T>::with_graph(a.shape(), {a}, [a, ts](std::span<const T> g) mutable {
    auto ga = a.grad();
    for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * ts;
  });
  auto va = a.values();
  auto vo = out.values();
  for (size_t i = 0; i < vo.size(); ++i) vo[i] = va[i] * ts;
  return out;
}

template <typename T>
TensorT<T> sum(const TensorT<T>& a) {
  TensorT<T> out = TensorT<T>::with_graph({}, {a}, [a](std::span<const T> g) mutable {
    auto ga = a.grad();
    for (size_t i = 0; i < ga.size(); ++i) ga[i] += g[0];
  });
  double acc = 0.0;
  for (T v : a.values()) acc += static_cast<double>(v);
  out.values()[0] = static_cast<T>(acc);
  return out;
}

template <typename T>
TensorT<T> relu(const TensorT<T>& a) {
  TensorT<T> out = TensorT<T>::with_graph(a.shape(), {a}, [a](std::span<const T> g) mutable {
    auto ga = a.grad();
    auto va = a.values();
    for (size_t i = 0; i < g.size(); ++i)
      if (va[i] > T(0)) ga[i] += g[i];
  });
  auto va = a.values();
  auto vo = out.values();
  for (size_t i = 0; i < vo.size(); ++i) vo[i] = va[i] > T(0) ? va[i] : T(0);
  return out;
}

template <typename T>
TensorT<T> reshape(const TensorT<T>& a, const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  if (n != a.size())
    throw DimensionError("reshape: " + TensorT<T>::shape_string(a.shape()) + " to " +
                         TensorT<T>::shape_string(shape) + " changes element count");
  TensorT<T> out = TensorT<T>::with_graph(shape, {a}, [a](std::span<const T> g) mutable {
    auto ga = a.grad();
    for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
  auto va = a.values();
  auto vo = out.values();
  for (size_t i = 0; i < vo.size(); ++i) vo[i] = va[i];
  return out;
}

template <typename T>
TensorT<T> slice2d(const TensorT<T>& a, int r0, int c0, int h, int w) {
  if (a.ndim() != 2)
    throw DimensionError("slice2d: expected 2-D input, got " + TensorT<T>::shape_string(a.shape()));
  const int H = a.dim(0), W = a.dim(1);
  if (r0 < 0 || c0 < 0 || h <= 0 || w <= 0 || r0 + h > H || c0 + w > W)
    throw DimensionError("slice2d: window [" + std::to_string(r0) + "," + std::to_string(r0 + h) +
                         ")x[" + std::to_string(c0) + "," + std::to_string(c0 + w) +
                         ") outside " + TensorT<T>::shape_string(a.shape()));
  TensorT<T> out =
      TensorT<T>::with_graph({h, w}, {a}, [a, r0, c0, h, w, W](std::span<const T> g) mutable {
        auto ga = a.grad();
        for (int r = 0; r < h; ++r)
          for (int c = 0; c < w; ++c)
            ga[static_cast<size_t>(r0 + r) * W + (c0 + c)] += g[static_cast<size_t>(r) * w + c];
      });
  auto va = a.values();
  auto vo = out.values();
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      vo[static_cast<size_t>(r) * w + c] = va[static_cast<size_t>(r0 + r) * W + (c0 + c)];
  return out;
}

template <typename T>
TensorT<T> conv2d(const TensorT<T>& input, const TensorT<T>& kernels, const TensorT<T>& bias,
                  int padding, int stride) {
  if (input.ndim() != 3)
    throw DimensionError("conv2d: input must be [C,H,W], got " + TensorT<T>::shape_string(input.shape()));
  if (kernels.ndim() != 4)
    throw DimensionError("conv2d: kernels must be [Cout,Cin,k,k], got " +
                         TensorT<T>::shape_string(kernels.shape()));
  const int Cin = input.dim(0), H = input.dim(1), W = input.dim(2);
  const int Cout = kernels.dim(0), k = kernels.dim(2);
  if (kernels.dim(1) != Cin)
    throw DimensionError("conv2d: input channel axis (" + std::to_string(Cin) +
                         ") does not match kernel channel axis (" + std::to_string(kernels.dim(1)) + ")");
  if (kernels.dim(3) != k || k % 2 == 0 || k < 1)
    throw DimensionError("conv2d: kernel window must be square with odd extent, got " +
                         TensorT<T>::shape_string(kernels.shape()));
  if (bias.ndim() != 1 || bias.dim(0) != Cout)
    throw DimensionError("conv2d: bias axis (" + TensorT<T>::shape_string(bias.shape()) +
                         ") does not match output channels (" + std::to_string(Cout) + ")");
  if (padding < 0) throw ConfigError("conv2d: negative padding " + std::to_string(padding));
  if (stride < 1) throw ConfigError("conv2d: stride " + std::to_string(stride) + " < 1");
  const int Ho = (H + 2 * padding - k) / stride + 1;
  const int Wo = (W + 2 * padding - k) / stride + 1;
  if (H + 2 * padding - k < 0 || W + 2 * padding - k < 0 || Ho <= 0 || Wo <= 0)
    throw DimensionError("conv2d: window " + std::to_string(k) + " exceeds padded input " +
                         TensorT<T>::shape_string(input.shape()));

  TensorT<T> out = TensorT<T>::with_graph(
      {Cout, Ho, Wo}, {input, kernels, bias},
      [input, kernels, bias, padding, stride, Cin, H, W, Cout, k, Ho, Wo](std::span<const T> g) mutable {
        const T* in = input.values().data();
        const T* kw = kernels.values().data();
        const bool gi = input.requires_grad();
        const bool gk = kernels.requires_grad();
        const bool gb = bias.requires_grad();
        T* din = gi ? input.grad().data() : nullptr;
        T* dkw = gk ? kernels.grad().data() : nullptr;
        T* db = gb ? bias.grad().data() : nullptr;
        for (int co = 0; co < Cout; ++co) {
          for (int oy = 0; oy < Ho; ++oy) {
            for (int ox = 0; ox < Wo; ++ox) {
              const T go = g[(static_cast<size_t>(co) * Ho + oy) * Wo + ox];
              if (db) db[co] += go;
              if (!gi && !gk) continue;
              for (int ci = 0; ci < Cin; ++ci) {
                for (int ky = 0; ky < k; ++ky) {
                  const int iy = oy * stride - padding + ky;
                  if (iy < 0 || iy >= H) continue;
                  for (int kx = 0; kx < k; ++kx) {
                    const int ix = ox * stride - padding + kx;
                    if (ix < 0 || ix >= W) continue;
                    const size_t ii = (static_cast<size_t>(ci) * H + iy) * W + ix;
                    const size_t ki = ((static_cast<size_t>(co) * Cin + ci) * k + ky) * k + kx;
                    if (dkw) dkw[ki] += go * in[ii];
                    if (din) din[ii] += go * kw[ki];
                  }
                }
              }
            }
          }
        }
      });

  const T* in = input.values().data();
  const T* kw = kernels.values().data();
  const T* b = bias.values().data();
  T* o = out.values().data();
  for (int co = 0; co < Cout; ++co) {
    for (int oy = 0; oy < Ho; ++oy) {
      for (int ox = 0; ox < Wo; ++ox) {
        T acc = b[co];
        for (int ci = 0; ci < Cin; ++ci) {
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * stride - padding + ky;
            if (iy < 0 || iy >= H) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * stride - padding + kx;
              if (ix < 0 || ix >= W) continue;
              acc += kw[((static_cast<size_t>(co) * Cin + ci) * k + ky) * k + kx] *
                     in[(static_cast<size_t>(ci) * H + iy) * W + ix];
            }
          }
        }
        o[(static_cast<size_t>(co) * Ho + oy) * Wo + ox] = acc;
      }
    }
  }
  return out;
}

template <typename T>
TensorT<T> linear(const TensorT<T>& x, const TensorT<T>& weight, const TensorT<T>& bias) {
  if (x.ndim() != 1 || weight.ndim() != 2 || bias.ndim() != 1)
    throw DimensionError("linear: expected x [in], weight [out,in], bias [out]");
  const int in = x.dim(0), outn = weight.dim(0);
  if (weight.dim(1) != in)
    throw DimensionError("linear: weight input axis (" + std::to_string(weight.dim(1)) +
                         ") does not match x (" + std::to_string(in) + ")");
  if (bias.dim(0) != outn)
    throw DimensionError("linear: bias axis (" + std::to_string(bias.dim(0)) +
                         ") does not match weight output axis (" + std::to_string(outn) + ")");
  TensorT<T> out = TensorT<T>::with_graph(
      {outn}, {x, weight, bias}, [x, weight, bias, in, outn](std::span<const T> g) mutable {
        const T* xv = x.values().data();
        const T* wv = weight.values().data();
        for (int o = 0; o < outn; ++o) {
          if (bias.requires_grad()) bias.grad()[o] += g[o];
          for (int i = 0; i < in; ++i) {
            if (weight.requires_grad()) weight.grad()[static_cast<size_t>(o) * in + i] += g[o] * xv[i];
            if (x.requires_grad()) x.grad()[i] += g[o] * wv[static_cast<size_t>(o) * in + i];
          }
        }
      });
  const T* xv = x.values().data();
  const T* wv = weight.values().data();
  const T* bv = bias.values().data();
  T* ov = out.values().data();
  for (int o = 0; o < outn; ++o) {
    T acc = bv[o];
    for (int i = 0; i < in; ++i) acc += wv[static_cast<size_t>(o) * in + i] * xv[i];
    ov[o] = acc;
  }
  return out;
}

template <typename T>
TensorT<T> spatial_mean(const TensorT<T>& x) {
  if (x.ndim() != 3)
    throw DimensionError("spatial_mean: expected [C,H,W], got " + TensorT<T>::shape_string(x.shape()));
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const double inv = 1.0 / (static_cast<double>(H) * W);
  TensorT<T> out = TensorT<T>::with_graph({C}, {x}, [x, C, H, W, inv](std::span<const T> g) mutable {
    auto gx = x.grad();
    for (int c = 0; c < C; ++c) {
      const T gc = static_cast<T>(g[c] * inv);
      for (int i = 0; i < H * W; ++i) gx[static_cast<size_t>(c) * H * W + i] += gc;
    }
  });
  auto xv = x.values();
  auto ov = out.values();
  for (int c = 0; c < C; ++c) {
    double acc = 0.0;
    for (int i = 0; i < H * W; ++i) acc += static_cast<double>(xv[static_cast<size_t>(c) * H * W + i]);
    ov[c] = static_cast<T>(acc * inv);
  }
  return out;
}

template <typename T>
TensorT<T> batch_norm(const TensorT<T>& x, const TensorT<T>& gamma, const TensorT<T>& beta,
                      double eps, bool training, TensorT<T> running_mean, TensorT<T> running_var,
                      double momentum) {
  if (x.ndim() != 4)
    throw DimensionError("batch_norm: expected [N,C,H,W], got " + TensorT<T>::shape_string(x.shape()));
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  auto check_c = [C](const TensorT<T>& t, const char* name) {
    if (t.ndim() != 1 || t.dim(0) != C)
      throw DimensionError(std::string("batch_norm: ") + name + " " + TensorT<T>::shape_string(t.shape()) +
                           " does not match channel axis (" + std::to_string(C) + ")");
  };
  check_c(gamma, "gamma");
  check_c(beta, "beta");
  check_c(running_mean, "running_mean");
  check_c(running_var, "running_var");
  if (eps <= 0) throw ConfigError("batch_norm: eps must be positive");

  const size_t plane = static_cast<size_t>(H) * W;
  const size_t per_c = static_cast<size_t>(N) * plane;
  std::vector<T> mean(C), var(C);
  if (training) {
    for (int c = 0; c < C; ++c) {
      double m = 0.0;
      for (int n = 0; n < N; ++n) {
        const T* p = x.values().data() + (static_cast<size_t>(n) * C + c) * plane;
        for (size_t i = 0; i < plane; ++i) m += static_cast<double>(p[i]);
      }
      m /= static_cast<double>(per_c);
      double v = 0.0;
      for (int n = 0; n < N; ++n) {
        const T* p = x.values().data() + (static_cast<size_t>(n) * C + c) * plane;
        for (size_t i = 0; i < plane; ++i) {
          const double d = static_cast<double>(p[i]) - m;
          v += d * d;
        }
      }
      v /= static_cast<double>(per_c);
      mean[c] = static_cast<T>(m);
      var[c] = static_cast<T>(v);
      running_mean.values()[c] =
          static_cast<T>((1.0 - momentum) * static_cast<double>(running_mean.values()[c]) + momentum * m);
      running_var.values()[c] =
          static_cast<T>((1.0 - momentum) * static_cast<double>(running_var.values()[c]) + momentum * v);
    }
  } else {
    for (int c = 0; c < C; ++c) {
      mean[c] = running_mean.values()[c];
      var[c] = running_var.values()[c];
    }
  }

  TensorT<T> out = TensorT<T>::with_graph(
      x.shape(), {x, gamma, beta},
      [x, gamma, beta, mean, var, eps, training, N, C, plane, per_c](std::span<const T> g) mutable {
        const T* xv = x.values().data();
        for (int c = 0; c < C; ++c) {
          const double mu = static_cast<double>(mean[c]);
          const double istd = 1.0 / std::sqrt(static_cast<double>(var[c]) + eps);
          const double gam = static_cast<double>(gamma.values()[c]);
          // Channel-wide sums needed by the training-mode formula.
          double sum_g = 0.0, sum_gx = 0.0;
          for (int n = 0; n < N; ++n) {
            const size_t base = (static_cast<size_t>(n) * C + c) * plane;
            for (size_t i = 0; i < plane; ++i) {
              const double gi = static_cast<double>(g[base + i]);
              sum_g += gi;
              sum_gx += gi * (static_cast<double>(xv[base + i]) - mu);
            }
          }
          if (gamma.requires_grad()) gamma.grad()[c] += static_cast<T>(sum_gx * istd);
          if (beta.requires_grad()) beta.grad()[c] += static_cast<T>(sum_g);
          if (!x.requires_grad()) continue;
          T* gx = x.grad().data();
          const double m = static_cast<double>(per_c);
          for (int n = 0; n < N; ++n) {
            const size_t base = (static_cast<size_t>(n) * C + c) * plane;
            for (size_t i = 0; i < plane; ++i) {
              const double gi = static_cast<double>(g[base + i]);
              const double xc = static_cast<double>(xv[base + i]) - mu;
              double dx;
              if (training) {
                dx = gam * istd * (gi - sum_g / m - xc * istd * istd * sum_gx / m);
              } else {
                dx = gam * istd * gi;
              }
              gx[base + i] += static_cast<T>(dx);
            }
          }
        }
      });

  const T* xv = x.values().data();
  T* ov = out.values().data();
  for (int c = 0; c < C; ++c) {
    const double mu = static_cast<double>(mean[c]);
    const double istd = 1.0 / std::sqrt(static_cast<double>(var[c]) + eps);
    const double gam = static_cast<double>(gamma.values()[c]);
    const double bet = static_cast<double>(beta.values()[c]);
    for (int n = 0; n < N; ++n) {
      const size_t base = (static_cast<size_t>(n) * C + c) * plane;
      for (size_t i = 0; i < plane; ++i)
        ov[base + i] = static_cast<T>(gam * (static_cast<double>(xv[base + i]) - mu) * istd + bet);
    }
  }
  return out;
}

template <typename T>
TensorT<T> affine_grid_op(const TensorT<T>& theta, int h, int w) {
  if (theta.ndim() != 2 || theta.dim(0) != 2 || theta.dim(1) != 3)
    throw DimensionError("affine_grid: theta must be [2,3], got " + TensorT<T>::shape_string(theta.shape()));
  if (h <= 0 || w <= 0)
    throw DimensionError("affine_grid: non-positive output extent " + std::to_string(h) + "x" + std::to_string(w));
  TensorT<T> out = TensorT<T>::with_graph({h, w, 2}, {theta}, [theta, h, w](std::span<const T> g) mutable {
    auto gt = theta.grad();
    for (int r = 0; r < h; ++r) {
      const double yt = (2.0 * r + 1.0) / h - 1.0;
      for (int c = 0; c < w; ++c) {
        const double xt = (2.0 * c + 1.0) / w - 1.0;
        const size_t i = (static_cast<size_t>(r) * w + c) * 2;
        gt[0] += static_cast<T>(g[i] * xt);
        gt[1] += static_cast<T>(g[i] * yt);
        gt[2] += g[i];
        gt[3] += static_cast<T>(g[i + 1] * xt);
        gt[4] += static_cast<T>(g[i + 1] * yt);
        gt[5] += g[i + 1];
      }
    }
  });
  const T* tv = theta.values().data();
  T* ov = out.values().data();
  for (int r = 0; r < h; ++r) {
    const double yt = (2.0 * r + 1.0) / h - 1.0;
    for (int c = 0; c < w; ++c) {
      const double xt = (2.0 * c + 1.0) / w - 1.0;
      const size_t i = (static_cast<size_t>(r) * w + c) * 2;
      ov[i] = static_cast<T>(tv[0] * xt + tv[1] * yt + tv[2]);
      ov[i + 1] = static_cast<T>(tv[3] * xt + tv[4] * yt + tv[5]);
    }
  }
  return out;
}

namespace {

// Unnormalizes [-1,1] to pixel units and snaps near-exact cell centers,
// so coordinate round trips through the normalized space stay lossless.
inline double to_pixels(double coord, int extent) {
  double p = 0.5 * (coord * extent + (extent - 1));
  const double r = std::nearbyint(p);
  if (std::abs(p - r) <= kCoordSnap) p = r;
  return p;
}

}  // namespace

template <typename T>
TensorT<T> grid_sample(const TensorT<T>& source, const TensorT<T>& grid) {
  if (source.ndim() != 2)
    throw DimensionError("grid_sample: source must be 2-D, got " + TensorT<T>::shape_string(source.shape()));
  if (grid.ndim() != 3 || grid.dim(2) != 2)
    throw DimensionError("grid_sample: grid must be [h,w,2], got " + TensorT<T>::shape_string(grid.shape()));
  const int H = source.dim(0), W = source.dim(1);
  const int h = grid.dim(0), w = grid.dim(1);

  TensorT<T> out = TensorT<T>::with_graph(
      {h, w}, {source, grid}, [source, grid, H, W, h, w](std::span<const T> g) mutable {
        const T* sv = source.values().data();
        const T* gv = grid.values().data();
        const bool gs = source.requires_grad();
        const bool gg = grid.requires_grad();
        T* ds = gs ? source.grad().data() : nullptr;
        T* dg = gg ? grid.grad().data() : nullptr;
        for (int r = 0; r < h; ++r) {
          for (int c = 0; c < w; ++c) {
            const size_t gi = (static_cast<size_t>(r) * w + c) * 2;
            const double go = static_cast<double>(g[static_cast<size_t>(r) * w + c]);
            if (go == 0.0) continue;
            const double px = to_pixels(static_cast<double>(gv[gi]), W);
            const double py = to_pixels(static_cast<double>(gv[gi + 1]), H);
            const int x0 = static_cast<int>(std::floor(px));
            const int y0 = static_cast<int>(std::floor(py));
            const double fx = px - x0;
            const double fy = py - y0;
            auto at = [&](int y, int x) -> double {
              return (y >= 0 && y < H && x >= 0 && x < W)
                         ? static_cast<double>(sv[static_cast<size_t>(y) * W + x])
                         : 0.0;
            };
            const double v00 = at(y0, x0), v01 = at(y0, x0 + 1);
            const double v10 = at(y0 + 1, x0), v11 = at(y0 + 1, x0 + 1);
            if (ds) {
              auto put = [&](int y, int x, double wgt) {
                if (y >= 0 && y < H && x >= 0 && x < W)
                  ds[static_cast<size_t>(y) * W + x] += static_cast<T>(go * wgt);
              };
              put(y0, x0, (1 - fy) * (1 - fx));
              put(y0, x0 + 1, (1 - fy) * fx);
              put(y0 + 1, x0, fy * (1 - fx));
              put(y0 + 1, x0 + 1, fy * fx);
            }
            if (dg) {
              const double dpx = (1 - fy) * (v01 - v00) + fy * (v11 - v10);
              const double dpy = (1 - fx) * (v10 - v00) + fx * (v11 - v01);
              dg[gi] += static_cast<T>(go * dpx * (0.5 * W));
              dg[gi + 1] += static_cast<T>(go * dpy * (0.5 * H));
            }
          }
        }
      });

  const T* sv = source.values().data();
  const T* gv = grid.values().data();
  T* ov = out.values().data();
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const size_t gi = (static_cast<size_t>(r) * w + c) * 2;
      const double px = to_pixels(static_cast<double>(gv[gi]), W);
      const double py = to_pixels(static_cast<double>(gv[gi + 1]), H);
      const int x0 = static_cast<int>(std::floor(px));
      const int y0 = static_cast<int>(std::floor(py));
      const double fx = px - x0;
      const double fy = py - y0;
      auto at = [&](int y, int x) -> double {
        return (y >= 0 && y < H && x >= 0 && x < W)
                   ? static_cast<double>(sv[static_cast<size_t>(y) * W + x])
                   : 0.0;
      };
      const double top = (1 - fx) * at(y0, x0) + fx * at(y0, x0 + 1);
      const double bot = (1 - fx) * at(y0 + 1, x0) + fx * at(y0 + 1, x0 + 1);
      ov[static_cast<size_t>(r) * w + c] = static_cast<T>((1 - fy) * top + fy * bot);
    }
  }
  return out;
}

#define LSTN_INSTANTIATE_OPS(T)                                                                  \
  template TensorT<T> add<T>(const TensorT<T>&, const TensorT<T>&);                              \
  template TensorT<T> sub<T>(const TensorT<T>&, const TensorT<T>&);                              \
  template TensorT<T> mul<T>(const TensorT<T>&, const TensorT<T>&);                              \
  template TensorT<T> scale<T>(const TensorT<T>&, double);                                       \
  template TensorT<T> sum<T>(const TensorT<T>&);                                                 \
  template TensorT<T> relu<T>(const TensorT<T>&);                                                \
  template TensorT<T> reshape<T>(const TensorT<T>&, const std::vector<int>&);                    \
  template TensorT<T> slice2d<T>(const TensorT<T>&, int, int, int, int);                         \
  template TensorT<T> conv2d<T>(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&, int,    \
                                int);                                                           \
  template TensorT<T> linear<T>(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&);        \
  template TensorT<T> spatial_mean<T>(const TensorT<T>&);                                        \
  template TensorT<T> batch_norm<T>(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&,     \
                                    double, bool, TensorT<T>, TensorT<T>, double);               \
  template TensorT<T> affine_grid_op<T>(const TensorT<T>&, int, int);                            \
  template TensorT<T> grid_sample<T>(const TensorT<T>&, const TensorT<T>&);

LSTN_INSTANTIATE_OPS(float)
LSTN_INSTANTIATE_OPS(double)

}  // namespace lstn
