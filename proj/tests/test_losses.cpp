#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gldepth/losses.hpp"
#include "gldepth/metrics.hpp"
#include "gldepth/rng.hpp"
#include "support/grad_check.hpp"

using namespace gldepth;
using namespace gldepth::testing;

TEST_CASE("loss_depth worked examples") {
  Tape t;
  Tensor z = Tensor::full({1, 4, 4}, 0.5);
  SparseLabelSet exact;
  exact.pixels = {{1, 1, 0.5}, {2, 3, 0.5}};
  CHECK(t.value(loss_depth(t, t.leaf(z, false), exact)).data[0] == doctest::Approx(0.0));

  SparseLabelSet one;
  one.pixels = {{0, 0, 0.25}};
  CHECK(t.value(loss_depth(t, t.leaf(z, false), one)).data[0] == doctest::Approx(0.25));

  Tensor zz = Tensor::full({1, 1, 2}, 1.0);
  SparseLabelSet two;
  two.pixels = {{0, 0, 0.5}, {1, 0, 1.0}};
  CHECK(t.value(loss_depth(t, t.leaf(zz, false), two)).data[0] == doctest::Approx(0.25));

  SparseLabelSet empty;
  CHECK_THROWS_AS(loss_depth(t, t.leaf(z, false), empty), UsageError);
}

TEST_CASE("loss_smooth: constant maps cost zero for any image") {
  Rng rng(3);
  Tape t;
  Tensor img({1, 6, 8});
  for (auto& v : img.data) v = rng.uniform(0, 1);
  Tensor z = Tensor::full({1, 6, 8}, 0.37);
  CHECK(t.value(loss_smooth(t, t.leaf(z, false), img)).data[0] == 0.0);
}

TEST_CASE("loss_smooth: unit x-ramp against the direct-summation oracle") {
  const int h = 5, w = 7;
  Tensor z({1, h, w});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) z(0, y, x) = static_cast<double>(x);
  Tensor img = Tensor::full({1, h, w}, 0.5);

  // Direct evaluation: |dz/dx| = 1 with weight e^0 at interior columns, the
  // last column contributes nothing under the zero-gradient convention.
  double expect = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x + 1 < w; ++x) expect += 1.0;
  expect /= static_cast<double>(h * w);

  Tape t;
  CHECK(t.value(loss_smooth(t, t.leaf(z, false), img)).data[0] == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("loss_smooth: image edges damp the penalty monotonically") {
  const int h = 2, w = 4;
  Tensor z({1, h, w});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) z(0, y, x) = x >= 2 ? 1.0 : 0.0;

  Tensor flat = Tensor::full({1, h, w}, 0.5);
  Tensor edged = flat;
  for (int y = 0; y < h; ++y) {
    edged(0, y, 2) = 3.0;  // sharp gradient at the depth discontinuity
    edged(0, y, 3) = 3.0;
  }
  Tape t;
  const double with_flat = t.value(loss_smooth(t, t.leaf(z, false), flat)).data[0];
  const double with_edge = t.value(loss_smooth(t, t.leaf(z, false), edged)).data[0];
  CHECK(with_edge < with_flat);
  CHECK(with_edge >= 0.0);
}

TEST_CASE("loss_total combines the terms with the configured weights") {
  // Crafted so L_depth = 0.1 and L_smooth = 0.05 exactly; total = 0.6.
  Tensor z = Tensor::from({1, 1, 2}, {0.5, 0.6});
  Tensor img = Tensor::full({1, 1, 2}, 0.3);
  SparseLabelSet labels;
  labels.pixels = {{0, 0, 0.4}};  // |0.5 - 0.4| = 0.1
  LossWeights w;
  Tape t;
  Var zv = t.leaf(z, false);
  CHECK(t.value(loss_depth(t, zv, labels)).data[0] == doctest::Approx(0.1));
  CHECK(t.value(loss_smooth(t, zv, img)).data[0] == doctest::Approx(0.05));
  CHECK(t.value(loss_total(t, zv, labels, img, w)).data[0] == doctest::Approx(0.6));

  LossWeights depth_only;
  depth_only.lambda_s = 0;
  CHECK(t.value(loss_total(t, zv, labels, img, depth_only)).data[0] ==
        doctest::Approx(5.0 * 0.1));

  Tensor zero = Tensor::zeros({1, 1, 2});
  SparseLabelSet zl;
  zl.pixels = {{0, 0, 0.0}};
  Tape t2;
  CHECK(t2.value(loss_total(t2, t2.leaf(zero, false), zl, img, w)).data[0] == doctest::Approx(0.0));
}

TEST_CASE("loss gradients match finite differences away from kinks") {
  Rng rng(11);
  for (int inst = 0; inst < 5; ++inst) {
    const int h = 4 + inst, w = 5;
    Tensor z({1, h, w});
    for (auto& v : z.data) v = rng.uniform(0.1, 1.0);
    Tensor img({1, h, w});
    for (auto& v : img.data) v = rng.uniform(0, 1);
    SparseLabelSet labels;
    labels.pixels = {{1, 1, z(0, 1, 1) + 0.2}, {w - 2, h - 2, z(0, h - 2, w - 2) - 0.15}};
    LossWeights lw;

    auto eval = [&](const std::vector<Tensor>& xs) {
      Tape t;
      return t.value(loss_total(t, t.leaf(xs[0]), labels, img, lw)).data[0];
    };
    Tape t;
    Var zv = t.leaf(z);
    t.backward(loss_total(t, zv, labels, img, lw));
    CHECK(fd_max_rel_err(eval, {z}, {t.grad(zv)}) < 1e-5);
  }
}

TEST_CASE("metric worked examples") {
  CHECK(abs_inv(Tensor::from({2}, {1, 2}), Tensor::from({2}, {2, 4})) == doctest::Approx(0.375));
  CHECK(abs_rel(Tensor::from({2}, {1, 2}), Tensor::from({2}, {2, 1})) == doctest::Approx(0.75));
  CHECK(s_rmse(Tensor::from({2}, {1, 4}), Tensor::from({2}, {2, 2})) ==
        doctest::Approx(std::log(2.0)));

  const Tensor d = Tensor::from({3}, {1, 2, 3});
  CHECK(abs_inv(d, d) == 0.0);
  CHECK(abs_rel(d, d) == 0.0);
  CHECK(s_rmse(d, d) == 0.0);

  CHECK_THROWS_AS(abs_inv(Tensor::from({1}, {0.0}), Tensor::from({1}, {1.0})), EvalError);
}

TEST_CASE("metric invariances") {
  Rng rng(5);
  Tensor d({40}), dh({40});
  for (long i = 0; i < 40; ++i) {
    d.data[static_cast<size_t>(i)] = rng.uniform(0.5, 6.0);
    dh.data[static_cast<size_t>(i)] = rng.uniform(0.5, 6.0);
  }

  // Permutation invariance.
  Tensor dp = d, dhp = dh;
  std::reverse(dp.data.begin(), dp.data.end());
  std::reverse(dhp.data.begin(), dhp.data.end());
  CHECK(abs_inv(dp, dhp) == doctest::Approx(abs_inv(d, dh)).epsilon(1e-14));

  // abs_rel invariant under joint scaling; abs_inv scales by 1/c.
  Tensor d2 = d, dh2 = dh;
  for (auto& v : d2.data) v *= 3.0;
  for (auto& v : dh2.data) v *= 3.0;
  CHECK(abs_rel(d2, dh2) == doctest::Approx(abs_rel(d, dh)).epsilon(1e-12));
  CHECK(abs_inv(d2, dh2) == doctest::Approx(abs_inv(d, dh) / 3.0).epsilon(1e-12));

  // s_rmse exactly scale-invariant in the prediction.
  const double base = s_rmse(d, dh);
  for (double c : {0.1, 1.0, 10.0}) {
    Tensor scaled = dh;
    for (auto& v : scaled.data) v *= c;
    CHECK(std::abs(s_rmse(d, scaled) - base) < 1e-12);
  }
  // Predicting a global rescale of the truth zeroes it.
  Tensor prop = d;
  for (auto& v : prop.data) v *= 1.7;
  CHECK(s_rmse(d, prop) < 1e-14);
}

TEST_CASE("metrics equal a brute-force reference on 100 random maps to 1e-12") {
  Rng rng(20260810);
  for (int n = 0; n < 100; ++n) {
    const int h = rng.uniform_int(2, 8), w = rng.uniform_int(2, 8);
    Tensor d({h, w}), dh({h, w});
    for (auto& v : d.data) v = rng.uniform(0.2, 9.0);
    for (auto& v : dh.data) v = rng.uniform(0.2, 9.0);

    // Reference: direct per-pixel loops, two-pass variance.
    double ai = 0, ar = 0;
    const long count = d.numel();
    for (long i = 0; i < count; ++i) {
      ai += std::abs(1.0 / d.data[static_cast<size_t>(i)] - 1.0 / dh.data[static_cast<size_t>(i)]);
      ar += std::abs(d.data[static_cast<size_t>(i)] - dh.data[static_cast<size_t>(i)]) /
            d.data[static_cast<size_t>(i)];
    }
    ai /= static_cast<double>(count);
    ar /= static_cast<double>(count);
    double mean = 0;
    for (long i = 0; i < count; ++i)
      mean += std::log(d.data[static_cast<size_t>(i)] / dh.data[static_cast<size_t>(i)]);
    mean /= static_cast<double>(count);
    double var = 0;
    for (long i = 0; i < count; ++i) {
      const double e = std::log(d.data[static_cast<size_t>(i)] / dh.data[static_cast<size_t>(i)]);
      var += (e - mean) * (e - mean);
    }
    const double sr = std::sqrt(var / static_cast<double>(count));

    CHECK(std::abs(abs_inv(d, dh) - ai) < 1e-12);
    CHECK(std::abs(abs_rel(d, dh) - ar) < 1e-12);
    CHECK(std::abs(s_rmse(d, dh) - sr) < 1e-12);
  }
}
