#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "lstn/adam.hpp"
#include "lstn/ops.hpp"
#include "lstn/regressor.hpp"
#include "lstn/rng.hpp"
#include "testutil.hpp"

using namespace lstn;
using doctest::Approx;

namespace {

// Checks one computation at both precisions: the double graph against
// central finite differences at 1e-5, and the float graph (same values)
// against the same finite differences at 1e-3.
template <typename FD, typename FF>
void dual_grad_check(std::vector<TensorT<double>*> dpar, FD&& loss_d, std::vector<Tensor*> fpar,
                     FF&& loss_f, double step = 1e-4) {
  REQUIRE(dpar.size() == fpar.size());
  for (auto* t : dpar) {
    t->set_requires_grad(true);
    t->zero_grad();
  }
  for (auto* t : fpar) {
    t->set_requires_grad(true);
    t->zero_grad();
  }
  loss_d().backward();
  loss_f().backward();
  for (size_t k = 0; k < dpar.size(); ++k) {
    auto fd = testutil::fd_gradient(
        *dpar[k], [&] { return loss_d().item(); }, step);
    CHECK(testutil::max_rel_err(dpar[k]->grad(), fd) < 1e-5);
    CHECK(testutil::max_rel_err(fpar[k]->grad(), fd) < 1e-3);
  }
}

TensorT<double> random_tensor(const std::vector<int>& shape, Rng& rng, double lo = -1.0,
                              double hi = 1.0) {
  TensorT<double> t = TensorT<double>::zeros(shape);
  testutil::fill_uniform(t, rng, lo, hi);
  return t;
}

// Fixed weighting so loss gradients are non-uniform across cells.
template <typename T>
TensorT<T> weighted_sum(const TensorT<T>& x, Rng rng) {
  TensorT<T> w = TensorT<T>::zeros(x.shape());
  testutil::fill_uniform(w, rng, 0.25, 1.75);
  return sum(mul(x, w));
}

}  // namespace

TEST_CASE("elementwise arithmetic produces expected values") {
  Tensor a = Tensor::from_values({3}, {1, 2, 3});
  Tensor b = Tensor::from_values({3}, {10, 20, 30});
  Tensor s = add(a, b);
  CHECK(s(0) == 11.0f);
  CHECK(s(2) == 33.0f);
  Tensor d = sub(b, a);
  CHECK(d(1) == 18.0f);
  Tensor p = mul(a, b);
  CHECK(p(2) == 90.0f);
  Tensor h = scale(a, 0.5);
  CHECK(h(0) == 0.5f);
  CHECK(sum(a).item() == 6.0f);
  CHECK_THROWS_AS(add(a, Tensor::zeros({4})), DimensionError);
  CHECK_THROWS_AS(mul(a, Tensor::zeros({3, 1})), DimensionError);
}

TEST_CASE("elementwise gradients match finite differences") {
  Rng rng(11);
  TensorT<double> xd = random_tensor({2, 3}, rng);
  TensorT<double> yd = random_tensor({2, 3}, rng);
  Tensor xf = xd.cast<float>();
  Tensor yf = yd.cast<float>();
  dual_grad_check(
      {&xd, &yd}, [&] { return weighted_sum(add(mul(xd, yd), scale(sub(xd, yd), 0.7)), Rng(77)); },
      {&xf, &yf}, [&] { return weighted_sum(add(mul(xf, yf), scale(sub(xf, yf), 0.7)), Rng(77)); });
}

TEST_CASE("relu splits by sign") {
  Tensor x = Tensor::from_values({3}, {-1, 0, 2});
  Tensor y = relu(x);
  CHECK(y(0) == 0.0f);
  CHECK(y(1) == 0.0f);
  CHECK(y(2) == 2.0f);

  Tensor neg = Tensor::from_values({4}, {-5, -0.25f, -1e6f, -0.0f});
  Tensor clipped = relu(neg);
  for (float v : clipped.values()) CHECK(v == 0.0f);

  Tensor pos = Tensor::from_values({3}, {0.5f, 7, 1e-6f});
  Tensor same = relu(pos);
  for (size_t i = 0; i < 3; ++i) CHECK(same.values()[i] == pos.values()[i]);
}

TEST_CASE("relu subgradient is zero at exactly zero") {
  Tensor x = Tensor::from_values({3}, {-2, 0, 3});
  x.set_requires_grad(true);
  sum(relu(x)).backward();
  CHECK(x.grad()[0] == 0.0f);
  CHECK(x.grad()[1] == 0.0f);
  CHECK(x.grad()[2] == 1.0f);
}

TEST_CASE("relu gradients match finite differences away from the kink") {
  Rng rng(12);
  TensorT<double> xd = TensorT<double>::zeros({2, 4});
  // Keep every input at least 0.1 from zero so the finite-difference probe
  // never crosses the kink.
  for (double& v : xd.values()) {
    const double u = rng.uniform(0.1, 1.0);
    v = rng.uniform() < 0.5 ? -u : u;
  }
  Tensor xf = xd.cast<float>();
  dual_grad_check(
      {&xd}, [&] { return weighted_sum(relu(xd), Rng(31)); },
      {&xf}, [&] { return weighted_sum(relu(xf), Rng(31)); });
}

TEST_CASE("reshape preserves the flat payload") {
  Tensor x = Tensor::from_values({2, 3}, {0, 1, 2, 3, 4, 5});
  Tensor y = reshape(x, {3, 2});
  CHECK(y(0, 1) == 1.0f);
  CHECK(y(2, 0) == 4.0f);
  CHECK_THROWS_AS(reshape(x, {4, 2}), DimensionError);

  x.set_requires_grad(true);
  sum(mul(reshape(x, {6}), Tensor::from_values({6}, {1, 2, 3, 4, 5, 6}))).backward();
  CHECK(x.grad()[0] == 1.0f);
  CHECK(x.grad()[5] == 6.0f);
}

TEST_CASE("slice2d windows the source and scatters gradients back") {
  Tensor x = Tensor::from_values({3, 4}, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
  Tensor w = slice2d(x, 1, 1, 2, 2);
  CHECK(w.dim(0) == 2);
  CHECK(w.dim(1) == 2);
  CHECK(w(0, 0) == 5.0f);
  CHECK(w(1, 1) == 10.0f);
  CHECK_THROWS_AS(slice2d(x, 2, 0, 2, 2), DimensionError);
  CHECK_THROWS_AS(slice2d(x, 0, 3, 1, 2), DimensionError);

  x.set_requires_grad(true);
  sum(slice2d(x, 1, 1, 2, 2)).backward();
  CHECK(x.grad()[0] == 0.0f);
  CHECK(x.grad()[5] == 1.0f);
  CHECK(x.grad()[6] == 1.0f);
  CHECK(x.grad()[9] == 1.0f);
  CHECK(x.grad()[10] == 1.0f);
  CHECK(x.grad()[11] == 0.0f);
}

TEST_CASE("conv2d with a unit 1x1 kernel is the identity bitwise") {
  Rng rng(13);
  Tensor x = Tensor::zeros({1, 4, 5});
  testutil::fill_uniform(x, rng, -3.0, 3.0);
  Tensor k = Tensor::from_values({1, 1, 1, 1}, {1});
  Tensor b = Tensor::zeros({1});
  Tensor y = conv2d(x, k, b, 0, 1);
  REQUIRE(y.size() == x.size());
  for (size_t i = 0; i < static_cast<size_t>(x.size()); ++i)
    CHECK(y.values()[i] == x.values()[i]);

  // Two-channel Kronecker-delta kernel, same contract.
  Tensor x2 = Tensor::zeros({2, 3, 3});
  testutil::fill_uniform(x2, rng, -3.0, 3.0);
  Tensor k2 = Tensor::from_values({2, 2, 1, 1}, {1, 0, 0, 1});
  Tensor y2 = conv2d(x2, k2, Tensor::zeros({2}), 0, 1);
  for (size_t i = 0; i < static_cast<size_t>(x2.size()); ++i)
    CHECK(y2.values()[i] == x2.values()[i]);
}

TEST_CASE("conv2d 3x3 ones over 3x3 ones gives 9") {
  Tensor x = Tensor::full({1, 3, 3}, 1.0f);
  Tensor k = Tensor::full({1, 1, 3, 3}, 1.0f);
  Tensor y = conv2d(x, k, Tensor::zeros({1}), 0, 1);
  CHECK(y.dim(1) == 1);
  CHECK(y.dim(2) == 1);
  CHECK(y(0, 0, 0) == 9.0f);
}

TEST_CASE("conv2d zero kernels produce zero output plus bias") {
  Rng rng(14);
  Tensor x = Tensor::zeros({2, 4, 4});
  testutil::fill_uniform(x, rng, -2.0, 2.0);
  Tensor k = Tensor::zeros({3, 2, 3, 3});
  Tensor y = conv2d(x, k, Tensor::zeros({3}), 1, 1);
  for (float v : y.values()) CHECK(v == 0.0f);
  Tensor yb = conv2d(x, k, Tensor::from_values({3}, {0.5f, -1, 2}), 1, 1);
  CHECK(yb(0, 0, 0) == 0.5f);
  CHECK(yb(1, 3, 3) == -1.0f);
  CHECK(yb(2, 2, 1) == 2.0f);
}

TEST_CASE("conv2d output extent floors the strided quotient") {
  Tensor x5 = Tensor::zeros({1, 5, 5});
  Tensor k = Tensor::zeros({1, 1, 3, 3});
  Tensor b = Tensor::zeros({1});
  Tensor y = conv2d(x5, k, b, 1, 2);
  CHECK(y.dim(1) == 3);
  CHECK(y.dim(2) == 3);

  Tensor x6 = Tensor::zeros({1, 6, 6});
  Tensor y6 = conv2d(x6, k, b, 0, 2);
  CHECK(y6.dim(1) == 2);
  CHECK(y6.dim(2) == 2);
}

TEST_CASE("conv2d validates shapes") {
  Tensor x = Tensor::zeros({2, 4, 4});
  Tensor b1 = Tensor::zeros({1});
  CHECK_THROWS_AS(conv2d(x, Tensor::zeros({1, 3, 3, 3}), b1, 1, 1), DimensionError);
  CHECK_THROWS_AS(conv2d(x, Tensor::zeros({1, 2, 3, 3}), Tensor::zeros({2}), 1, 1),
                  DimensionError);
  CHECK_THROWS_AS(conv2d(Tensor::zeros({4, 4}), Tensor::zeros({1, 1, 3, 3}), b1, 1, 1),
                  DimensionError);
  CHECK_THROWS_AS(conv2d(x, Tensor::zeros({1, 2, 2, 2}), b1, 1, 1), DimensionError);
}

TEST_CASE("conv2d gradients match finite differences") {
  Rng rng(15);
  TensorT<double> xd = random_tensor({2, 5, 6}, rng);
  TensorT<double> kd = random_tensor({3, 2, 3, 3}, rng, -0.5, 0.5);
  TensorT<double> bd = random_tensor({3}, rng, -0.2, 0.2);
  Tensor xf = xd.cast<float>();
  Tensor kf = kd.cast<float>();
  Tensor bf = bd.cast<float>();

  SUBCASE("stride 1, padding 1") {
    dual_grad_check(
        {&xd, &kd, &bd}, [&] { return weighted_sum(conv2d(xd, kd, bd, 1, 1), Rng(41)); },
        {&xf, &kf, &bf}, [&] { return weighted_sum(conv2d(xf, kf, bf, 1, 1), Rng(41)); });
  }
  SUBCASE("stride 2, padding 1") {
    dual_grad_check(
        {&xd, &kd, &bd}, [&] { return weighted_sum(conv2d(xd, kd, bd, 1, 2), Rng(42)); },
        {&xf, &kf, &bf}, [&] { return weighted_sum(conv2d(xf, kf, bf, 1, 2), Rng(42)); });
  }
  SUBCASE("no padding") {
    dual_grad_check(
        {&xd, &kd, &bd}, [&] { return weighted_sum(conv2d(xd, kd, bd, 0, 1), Rng(43)); },
        {&xf, &kf, &bf}, [&] { return weighted_sum(conv2d(xf, kf, bf, 0, 1), Rng(43)); });
  }
}

TEST_CASE("linear applies weight and bias") {
  Tensor x = Tensor::from_values({2}, {5, 6});
  Tensor w = Tensor::from_values({2, 2}, {1, 2, 3, 4});
  Tensor b = Tensor::from_values({2}, {0.5f, -0.5f});
  Tensor y = linear(x, w, b);
  CHECK(y(0) == 17.5f);
  CHECK(y(1) == 38.5f);
  CHECK_THROWS_AS(linear(Tensor::zeros({3}), w, b), DimensionError);
  CHECK_THROWS_AS(linear(x, w, Tensor::zeros({3})), DimensionError);
}

TEST_CASE("linear gradients match finite differences") {
  Rng rng(16);
  TensorT<double> xd = random_tensor({4}, rng);
  TensorT<double> wd = random_tensor({3, 4}, rng);
  TensorT<double> bd = random_tensor({3}, rng);
  Tensor xf = xd.cast<float>();
  Tensor wf = wd.cast<float>();
  Tensor bf = bd.cast<float>();
  dual_grad_check(
      {&xd, &wd, &bd}, [&] { return weighted_sum(linear(xd, wd, bd), Rng(51)); },
      {&xf, &wf, &bf}, [&] { return weighted_sum(linear(xf, wf, bf), Rng(51)); });
}

TEST_CASE("spatial_mean averages each channel plane") {
  Tensor x = Tensor::from_values({2, 1, 3}, {1, 2, 3, 10, 20, 30});
  Tensor y = spatial_mean(x);
  CHECK(y.dim(0) == 2);
  CHECK(y(0) == Approx(2.0).epsilon(1e-6));
  CHECK(y(1) == Approx(20.0).epsilon(1e-6));
  CHECK_THROWS_AS(spatial_mean(Tensor::zeros({3, 3})), DimensionError);

  Rng rng(17);
  TensorT<double> xd = random_tensor({3, 2, 4}, rng);
  Tensor xf = xd.cast<float>();
  dual_grad_check(
      {&xd}, [&] { return weighted_sum(spatial_mean(xd), Rng(52)); },
      {&xf}, [&] { return weighted_sum(spatial_mean(xf), Rng(52)); });
}

TEST_CASE("batch_norm normalizes constants to the shift") {
  Tensor x = Tensor::full({2, 3, 2, 2}, 4.0f);
  Tensor gamma = Tensor::full({3}, 1.0f);
  Tensor beta = Tensor::zeros({3});
  Tensor rm = Tensor::zeros({3});
  Tensor rv = Tensor::full({3}, 1.0f);
  Tensor y = batch_norm(x, gamma, beta, kBnEps, true, rm, rv, kBnMomentum);
  for (float v : y.values()) CHECK(std::abs(v) < 1e-5f);

  Tensor beta2 = Tensor::from_values({3}, {1.5f, -2, 0.25f});
  Tensor y2 = batch_norm(x, gamma, beta2, kBnEps, true, rm, rv, kBnMomentum);
  CHECK(y2(0, 0, 0, 0) == Approx(1.5).epsilon(1e-5));
  CHECK(y2(1, 1, 1, 1) == Approx(-2.0).epsilon(1e-5));
  CHECK(y2(0, 2, 0, 1) == Approx(0.25).epsilon(1e-5));
}

TEST_CASE("batch_norm two-sample batch normalizes to unit spread") {
  Tensor x = Tensor::from_values({2, 1, 1, 1}, {-1, 1});
  Tensor gamma = Tensor::full({1}, 1.0f);
  Tensor beta = Tensor::zeros({1});
  Tensor rm = Tensor::zeros({1});
  Tensor rv = Tensor::full({1}, 1.0f);
  Tensor y = batch_norm(x, gamma, beta, 1e-12, true, rm, rv, 0.1);
  CHECK(y(0, 0, 0, 0) == Approx(-1.0).epsilon(1e-6));
  CHECK(y(1, 0, 0, 0) == Approx(1.0).epsilon(1e-6));
}

TEST_CASE("batch_norm train mode updates running buffers with momentum") {
  Tensor x = Tensor::full({1, 1, 2, 2}, 4.0f);
  Tensor gamma = Tensor::full({1}, 1.0f);
  Tensor beta = Tensor::zeros({1});
  Tensor rm = Tensor::zeros({1});
  Tensor rv = Tensor::full({1}, 1.0f);
  batch_norm(x, gamma, beta, kBnEps, true, rm, rv, 0.1);
  CHECK(rm(0) == Approx(0.4).epsilon(1e-6));   // 0.9*0 + 0.1*4
  CHECK(rv(0) == Approx(0.9).epsilon(1e-6));   // 0.9*1 + 0.1*0
}

TEST_CASE("batch_norm eval mode reads running stats and mutates nothing") {
  Tensor x = Tensor::from_values({1, 1, 1, 2}, {3, 7});
  Tensor gamma = Tensor::full({1}, 2.0f);
  Tensor beta = Tensor::full({1}, 1.0f);
  Tensor rm = Tensor::full({1}, 5.0f);
  Tensor rv = Tensor::full({1}, 4.0f);
  Tensor y = batch_norm(x, gamma, beta, 1e-12, false, rm, rv, 0.1);
  CHECK(y(0, 0, 0, 0) == Approx(-1.0).epsilon(1e-6));  // 2*(3-5)/2 + 1
  CHECK(y(0, 0, 0, 1) == Approx(3.0).epsilon(1e-6));
  CHECK(rm(0) == 5.0f);
  CHECK(rv(0) == 4.0f);
}

TEST_CASE("batch_norm validates ranks and channel extents") {
  Tensor gamma = Tensor::full({2}, 1.0f);
  Tensor beta = Tensor::zeros({2});
  Tensor rm = Tensor::zeros({2});
  Tensor rv = Tensor::full({2}, 1.0f);
  CHECK_THROWS_AS(batch_norm(Tensor::zeros({2, 2, 2}), gamma, beta, kBnEps, true, rm, rv, 0.1),
                  DimensionError);
  CHECK_THROWS_AS(
      batch_norm(Tensor::zeros({1, 3, 2, 2}), gamma, beta, kBnEps, true, rm, rv, 0.1),
      DimensionError);
}

TEST_CASE("batch_norm gradients match finite differences") {
  Rng rng(18);
  TensorT<double> xd = random_tensor({2, 3, 2, 2}, rng);
  TensorT<double> gd = random_tensor({3}, rng, 0.5, 1.5);
  TensorT<double> bd = random_tensor({3}, rng, -0.5, 0.5);
  Tensor xf = xd.cast<float>();
  Tensor gf = gd.cast<float>();
  Tensor bf = bd.cast<float>();

  SUBCASE("training mode") {
    TensorT<double> rmd = TensorT<double>::zeros({3});
    TensorT<double> rvd = TensorT<double>::full({3}, 1.0);
    Tensor rmf = Tensor::zeros({3});
    Tensor rvf = Tensor::full({3}, 1.0f);
    dual_grad_check(
        {&xd, &gd, &bd},
        [&] { return weighted_sum(batch_norm(xd, gd, bd, kBnEps, true, rmd, rvd, 0.1), Rng(61)); },
        {&xf, &gf, &bf},
        [&] { return weighted_sum(batch_norm(xf, gf, bf, kBnEps, true, rmf, rvf, 0.1), Rng(61)); },
        1e-5);
  }
  SUBCASE("eval mode") {
    TensorT<double> rmd = random_tensor({3}, rng, -0.3, 0.3);
    TensorT<double> rvd = random_tensor({3}, rng, 0.6, 1.4);
    Tensor rmf = rmd.cast<float>();
    Tensor rvf = rvd.cast<float>();
    dual_grad_check(
        {&xd, &gd, &bd},
        [&] {
          return weighted_sum(batch_norm(xd, gd, bd, kBnEps, false, rmd, rvd, 0.1), Rng(62));
        },
        {&xf, &gf, &bf},
        [&] {
          return weighted_sum(batch_norm(xf, gf, bf, kBnEps, false, rmf, rvf, 0.1), Rng(62));
        });
  }
}

TEST_CASE("backward is linear in the loss combination") {
  Rng rng(19);
  TensorT<double> x = random_tensor({2, 3}, rng);
  x.set_requires_grad(true);
  const double a = 0.75, b = -1.25;

  auto l1 = [&] { return sum(mul(x, x)); };
  auto l2 = [&] { return weighted_sum(x, Rng(63)); };

  x.zero_grad();
  l1().backward();
  std::vector<double> g1(x.grad().begin(), x.grad().end());
  x.zero_grad();
  l2().backward();
  std::vector<double> g2(x.grad().begin(), x.grad().end());
  x.zero_grad();
  add(scale(l1(), a), scale(l2(), b)).backward();

  for (size_t i = 0; i < g1.size(); ++i) {
    const double expect = a * g1[i] + b * g2[i];
    CHECK(x.grad()[i] == Approx(expect).epsilon(1e-6));
  }
}

TEST_CASE("adam leaves parameters untouched under zero gradients") {
  Tensor p = Tensor::from_values({3}, {1, -2, 3});
  std::vector<float> before(p.values().begin(), p.values().end());
  p.set_requires_grad(true);
  AdamStateT<float> st;
  adam_step(p, st, AdamConfig{});
  for (size_t i = 0; i < 3; ++i) CHECK(p.values()[i] == before[i]);
  CHECK(st.step == 1);
  for (float v : st.m.values()) CHECK(v == 0.0f);
  for (float v : st.v.values()) CHECK(v == 0.0f);
}

TEST_CASE("adam first step moves by about lr against the gradient sign") {
  AdamConfig cfg;
  cfg.lr = 1e-3;
  Tensor p = Tensor::from_values({2}, {0.5f, -0.25f});
  p.set_requires_grad(true);
  p.grad()[0] = 0.5f;
  p.grad()[1] = -2.0f;
  AdamStateT<float> st;
  adam_step(p, st, cfg);
  CHECK(p(0) == Approx(0.5 - cfg.lr).epsilon(1e-4));
  CHECK(p(1) == Approx(-0.25 + cfg.lr).epsilon(1e-4));
  // Bias-corrected first moments: m = (1-b1) g, v = (1-b2) g^2.
  CHECK(st.m(0) == Approx(0.05).epsilon(1e-5));
  CHECK(st.v(1) == Approx(0.004).epsilon(1e-4));
}

TEST_CASE("adam updates are bitwise deterministic") {
  auto run = [] {
    Tensor p = Tensor::from_values({4}, {0.1f, 0.2f, -0.3f, 0.4f});
    p.set_requires_grad(true);
    AdamStateT<float> st;
    AdamConfig cfg;
    for (int k = 0; k < 7; ++k) {
      for (size_t i = 0; i < 4; ++i)
        p.grad()[i] = static_cast<float>(0.01 * static_cast<double>(k + 1) * (i % 2 ? -1 : 1));
      adam_step(p, st, cfg);
    }
    return std::vector<float>(p.values().begin(), p.values().end());
  };
  auto a = run();
  auto b = run();
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("adam rejects missing gradients and bad hyperparameters") {
  Tensor p = Tensor::zeros({2});
  AdamStateT<float> st;
  CHECK_THROWS_AS(adam_step(p, st, AdamConfig{}), UsageError);
  p.set_requires_grad(true);
  AdamConfig bad;
  bad.lr = -1.0;
  CHECK_THROWS_AS(adam_step(p, st, bad), ConfigError);
  AdamStateT<float> mismatched;
  mismatched.m = Tensor::zeros({3});
  mismatched.v = Tensor::zeros({3});
  CHECK_THROWS_AS(adam_step(p, mismatched, AdamConfig{}), DimensionError);
}

TEST_CASE("affine grid with identity theta reproduces the target coordinates") {
  Tensor theta = Tensor::from_values({2, 3}, {1, 0, 0, 0, 1, 0});
  Tensor g = affine_grid_op(theta, 3, 4);
  REQUIRE(g.dim(0) == 3);
  REQUIRE(g.dim(1) == 4);
  REQUIRE(g.dim(2) == 2);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      const double xt = (2.0 * c + 1.0) / 4.0 - 1.0;
      const double yt = (2.0 * r + 1.0) / 3.0 - 1.0;
      CHECK(g(r, c, 0) == Approx(xt).epsilon(1e-6));
      CHECK(g(r, c, 1) == Approx(yt).epsilon(1e-6));
    }
  }
}

TEST_CASE("affine grid horizontal offset shifts every x coordinate") {
  Tensor theta = Tensor::from_values({2, 3}, {1, 0, 0.5f, 0, 1, 0});
  Tensor g = affine_grid_op(theta, 2, 5);
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 5; ++c) {
      const double xt = (2.0 * c + 1.0) / 5.0 - 1.0;
      const double yt = (2.0 * r + 1.0) / 2.0 - 1.0;
      CHECK(g(r, c, 0) == Approx(xt + 0.5).epsilon(1e-6));
      CHECK(g(r, c, 1) == Approx(yt).epsilon(1e-6));
    }
  }
}

TEST_CASE("affine grid rotation maps the corner coordinates") {
  Tensor theta = Tensor::from_values({2, 3}, {0, -1, 0, 1, 0, 0});
  const int h = 4, w = 6;
  Tensor g = affine_grid_op(theta, h, w);
  for (int r : {0, h - 1}) {
    for (int c : {0, w - 1}) {
      const double xt = (2.0 * c + 1.0) / w - 1.0;
      const double yt = (2.0 * r + 1.0) / h - 1.0;
      CHECK(g(r, c, 0) == Approx(-yt).epsilon(1e-6));
      CHECK(g(r, c, 1) == Approx(xt).epsilon(1e-6));
    }
  }
  CHECK_THROWS_AS(affine_grid_op(Tensor::zeros({3, 3}), 2, 2), DimensionError);
  CHECK_THROWS_AS(affine_grid_op(theta, 0, 2), DimensionError);
}

TEST_CASE("grid_sample with the identity grid is bitwise lossless") {
  Rng rng(21);
  Tensor src = Tensor::zeros({3, 5});
  testutil::fill_uniform(src, rng, -2.0, 2.0);
  Tensor g = affine_grid_op(Tensor::from_values({2, 3}, {1, 0, 0, 0, 1, 0}), 3, 5);
  Tensor out = grid_sample(src, g);
  for (size_t i = 0; i < static_cast<size_t>(src.size()); ++i)
    CHECK(out.values()[i] == src.values()[i]);
}

TEST_CASE("grid_sample one-cell shift fills the vacated column with zero") {
  Rng rng(22);
  const int H = 3, W = 5;
  Tensor src = Tensor::zeros({H, W});
  testutil::fill_uniform(src, rng, 1.0, 9.0);
  Tensor theta = Tensor::from_values({2, 3}, {1, 0, static_cast<float>(2.0 / W), 0, 1, 0});
  Tensor out = grid_sample(src, affine_grid_op(theta, H, W));
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c + 1 < W; ++c) CHECK(out(r, c) == src(r, c + 1));
    CHECK(out(r, W - 1) == 0.0f);
  }
}

TEST_CASE("grid_sample half-cell shift averages neighbors on a ramp") {
  Tensor src = Tensor::from_values({1, 4}, {0, 1, 2, 3});
  Tensor theta = Tensor::from_values({2, 3}, {1, 0, 0.25f, 0, 1, 0});
  Tensor out = grid_sample(src, affine_grid_op(theta, 1, 4));
  CHECK(out(0, 0) == Approx(0.5).epsilon(1e-6));
  CHECK(out(0, 1) == Approx(1.5).epsilon(1e-6));
  CHECK(out(0, 2) == Approx(2.5).epsilon(1e-6));
  CHECK(out(0, 3) == Approx(1.5).epsilon(1e-6));  // half of 3, zero fill beyond
}

TEST_CASE("grid_sample far out-of-range coordinates contribute zero") {
  Tensor src = Tensor::full({3, 3}, 5.0f);
  Tensor theta = Tensor::from_values({2, 3}, {1, 0, 10, 0, 1, 0});
  Tensor out = grid_sample(src, affine_grid_op(theta, 3, 3));
  for (float v : out.values()) CHECK(v == 0.0f);
  CHECK_THROWS_AS(grid_sample(Tensor::zeros({2, 2, 2}), Tensor::zeros({2, 2, 2})),
                  DimensionError);
  CHECK_THROWS_AS(grid_sample(src, Tensor::zeros({2, 2, 3})), DimensionError);
}

TEST_CASE("grid_sample gradients match finite differences") {
  Rng rng(23);
  const int H = 4, W = 5;
  TensorT<double> srcd = random_tensor({H, W}, rng, -1.0, 1.0);
  // Hand-placed grid keeping every sampling point 0.2+ away from both cell
  // centers and the border, so the probe stays on one bilinear patch.
  TensorT<double> grd = TensorT<double>::zeros({2, 3, 2});
  auto gv = grd.values();
  const double px[6] = {0.7, 1.4, 2.6, 3.3, 1.7, 2.4};
  const double py[6] = {0.6, 1.3, 2.35, 0.45, 1.65, 2.3};
  for (int i = 0; i < 6; ++i) {
    gv[2 * i] = (2.0 * px[i] - (W - 1)) / W;
    gv[2 * i + 1] = (2.0 * py[i] - (H - 1)) / H;
  }
  Tensor srcf = srcd.cast<float>();
  Tensor grf = grd.cast<float>();
  dual_grad_check(
      {&srcd, &grd}, [&] { return weighted_sum(grid_sample(srcd, grd), Rng(71)); },
      {&srcf, &grf}, [&] { return weighted_sum(grid_sample(srcf, grf), Rng(71)); }, 1e-5);
}

TEST_CASE("gradients flow through affine grid into theta") {
  Rng rng(24);
  const int H = 5, W = 7;
  TensorT<double> srcd = random_tensor({H, W}, rng, 0.0, 2.0);
  TensorT<double> thd = TensorT<double>::from_values(
      {2, 3}, {0.83, 0.06, 0.11, -0.05, 0.79, -0.13});
  Tensor srcf = srcd.cast<float>();
  Tensor thf = thd.cast<float>();
  dual_grad_check(
      {&srcd, &thd},
      [&] { return weighted_sum(grid_sample(srcd, affine_grid_op(thd, H, W)), Rng(72)); },
      {&srcf, &thf},
      [&] { return weighted_sum(grid_sample(srcf, affine_grid_op(thf, H, W)), Rng(72)); }, 1e-5);
}
