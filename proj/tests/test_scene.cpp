#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "gldepth/pair.hpp"

using namespace gldepth;

namespace {

bool tensors_equal(const Tensor& a, const Tensor& b) {
  return a.shape == b.shape &&
         std::memcmp(a.data.data(), b.data.data(), sizeof(double) * a.data.size()) == 0;
}

// Independent reprojection check: backproject, transform, project, compare
// against pixel + flow at every non-occluded pixel.
double max_reprojection_residual(const RenderedPair& p) {
  double worst = 0;
  for (int y = 0; y < p.height(); ++y)
    for (int x = 0; x < p.width(); ++x) {
      if (p.occluded(x, y)) continue;
      const Vec3 x1 = p.k1.backproject_dir(x, y) * p.depth1(y, x);
      const Vec3 x2 = p.pose.apply(x1);
      REQUIRE(x2.z > 0);
      double u, v;
      p.k2.project(x2, u, v);
      worst = std::max(worst, std::hypot(u - (x + p.flow(0, y, x)), v - (y + p.flow(1, y, x))));
    }
  return worst;
}

DataConfig small_config(uint64_t seed = 5) {
  DataConfig cfg;
  cfg.scene.width = 32;
  cfg.scene.height = 24;
  cfg.scene.focal = 28.8;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("sample_scene with zero patches keeps only the background plane") {
  SceneConfig cfg;
  cfg.patch_count_min = cfg.patch_count_max = 0;
  const PlanarScene s = sample_scene(3, cfg);
  REQUIRE(s.patches.size() == 1);
  CHECK(s.patches[0].infinite);
}

TEST_CASE("sample_scene rejects infeasible depth ranges") {
  SceneConfig cfg;
  cfg.d_min = 5;
  cfg.d_max = 5;
  CHECK_THROWS_AS(sample_scene(1, cfg), ConfigError);
}

TEST_CASE("scene sampling and rendering are deterministic in the seed") {
  SceneConfig cfg;
  cfg.width = 32;
  cfg.height = 24;
  cfg.focal = 28.8;
  const PlanarScene a = sample_scene(77, cfg);
  const PlanarScene b = sample_scene(77, cfg);
  REQUIRE(a.patches.size() == b.patches.size());
  Tensor ia, da, ib, db;
  render_view(a, cfg.nominal_intrinsics(), PoseSE3{}, ia, da);
  render_view(b, cfg.nominal_intrinsics(), PoseSE3{}, ib, db);
  CHECK(tensors_equal(ia, ib));
  CHECK(tensors_equal(da, db));
}

TEST_CASE("1000 sampled scenes render depths inside the configured bounds") {
  SceneConfig cfg;
  cfg.width = 16;
  cfg.height = 12;
  cfg.focal = 14.4;
  double lo = 1e9, hi = -1e9;
  for (int s = 0; s < 1000; ++s) {
    const PlanarScene scene = sample_scene(static_cast<uint64_t>(s), cfg);
    Tensor img, dep;
    render_view(scene, cfg.nominal_intrinsics(), PoseSE3{}, img, dep);
    for (double d : dep.data) {
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  }
  CHECK(lo >= cfg.d_min);
  CHECK(hi <= cfg.d_max);
}

TEST_CASE("fronto-parallel plane renders constant depth") {
  SceneConfig cfg;
  PlanarScene s;
  s.config = cfg;
  Patch bg;
  bg.infinite = true;
  bg.n = {0, 0, 1};
  bg.delta = 2.0;
  bg.center = {0, 0, 2};
  bg.e1 = {1, 0, 0};
  bg.e2 = {0, 1, 0};
  s.patches.push_back(bg);
  Tensor img, dep;
  render_view(s, cfg.nominal_intrinsics(), PoseSE3{}, img, dep);
  for (double d : dep.data) CHECK(d == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("slanted plane depth matches the closed-form ray-plane solution") {
  SceneConfig cfg;
  PlanarScene s;
  s.config = cfg;
  Patch bg;
  bg.infinite = true;
  const double r2 = std::sqrt(2.0);
  bg.n = {1.0 / r2, 0, 1.0 / r2};
  bg.delta = r2;
  bg.center = {0, 0, 2};
  bg.e1 = {0, 1, 0};
  bg.e2 = bg.n.cross(bg.e1);
  s.patches.push_back(bg);
  const CameraIntrinsics k = cfg.nominal_intrinsics();
  Tensor img, dep;
  render_view(s, k, PoseSE3{}, img, dep);
  for (int y = 0; y < cfg.height; ++y)
    for (int x = 0; x < cfg.width; ++x) {
      const Vec3 d = k.backproject_dir(x, y);
      const double expect = r2 / bg.n.dot(d);
      CHECK(std::abs(dep(y, x) - expect) < 1e-9);
    }
}

TEST_CASE("compute_flow: identity pose with equal intrinsics gives zero flow") {
  const Tensor depth = Tensor::full({12, 16}, 3.0);
  CameraIntrinsics k;
  k.fx = k.fy = 20;
  k.cx = 8;
  k.cy = 6;
  k.width = 16;
  k.height = 12;
  const FlowResult f = compute_flow(depth, k, k, PoseSE3{});
  for (double v : f.flow.data) CHECK(std::abs(v) < 1e-12);
  for (auto o : f.occlusion) CHECK(o == 0);
}

TEST_CASE("compute_flow pinhole worked example: translation by one unit at depth 2") {
  CameraIntrinsics k;
  k.fx = k.fy = 100;
  k.cx = 32;
  k.cy = 24;
  k.width = 65;
  k.height = 49;
  const Tensor depth = Tensor::full({49, 65}, 2.0);
  PoseSE3 pose;
  pose.t = {-1, 0, 0};
  const FlowResult f = compute_flow(depth, k, k, pose);
  CHECK(f.flow(0, 24, 32) == doctest::Approx(-50.0));
  CHECK(f.flow(1, 24, 32) == doctest::Approx(0.0));
}

TEST_CASE("compute_flow: 180-degree optical-axis rotation point-reflects pixels") {
  CameraIntrinsics k;
  k.fx = k.fy = 30;
  k.cx = 16;
  k.cy = 12;
  k.width = 33;
  k.height = 25;
  Tensor depth = Tensor::full({25, 33}, 4.0);
  PoseSE3 rot;
  rot.R = Mat3::rot_z(M_PI);
  const FlowResult f = compute_flow(depth, k, k, rot);
  for (int y = 0; y < 25; ++y)
    for (int x = 0; x < 33; ++x) {
      const double u2 = x + f.flow(0, y, x);
      const double v2 = y + f.flow(1, y, x);
      CHECK(std::abs(u2 - (2 * k.cx - x)) < 1e-9);
      CHECK(std::abs(v2 - (2 * k.cy - y)) < 1e-9);
    }

  PoseSE3 ident;
  ident.R = Mat3::rot_z(0.0);
  const FlowResult fi = compute_flow(depth, k, k, ident);
  for (double v : fi.flow.data) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("generated pairs satisfy reprojection consistency and positivity") {
  const DataConfig cfg = small_config();
  for (int i = 0; i < 8; ++i) {
    const RenderedPair p = make_sample(cfg, 0, static_cast<uint64_t>(i));
    for (double d : p.depth1.data) CHECK(d > 0);
    CHECK(std::abs(p.pose.t.norm() - 1.0) < 1e-14);
    CHECK(max_reprojection_residual(p) < 1e-6);
  }
}

TEST_CASE("make_sample is a pure function of (seed, salt, index)") {
  const DataConfig cfg = small_config(99);
  const RenderedPair a = make_sample(cfg, 1, 7);
  const RenderedPair b = make_sample(cfg, 1, 7);
  CHECK(tensors_equal(a.image1, b.image1));
  CHECK(tensors_equal(a.image2, b.image2));
  CHECK(tensors_equal(a.depth1, b.depth1));
  CHECK(tensors_equal(a.flow, b.flow));
  CHECK(a.occlusion == b.occlusion);
  REQUIRE(a.labels.count() == b.labels.count());
  for (size_t i = 0; i < a.labels.count(); ++i) {
    CHECK(a.labels.pixels[i].x == b.labels.pixels[i].x);
    CHECK(a.labels.pixels[i].z == b.labels.pixels[i].z);
  }
  const RenderedPair c = make_sample(cfg, 2, 7);
  CHECK_FALSE(tensors_equal(a.depth1, c.depth1));
}

TEST_CASE("normalize_pair scales depth and translation jointly") {
  RenderedPair p;
  p.depth1 = Tensor::full({4, 4}, 4.0);
  p.image1 = Tensor::zeros({1, 4, 4});
  p.image2 = Tensor::zeros({1, 4, 4});
  p.flow = Tensor::zeros({2, 4, 4});
  p.occlusion.assign(16, 0);
  p.pose.t = {0, 0, 2};
  normalize_pair(p);
  CHECK(p.pose.t.z == doctest::Approx(1.0));
  for (double d : p.depth1.data) CHECK(d == doctest::Approx(2.0));

  // Unit translation already: exact identity.
  RenderedPair q = p;
  const Tensor before = q.depth1;
  normalize_pair(q);
  CHECK(tensors_equal(before, q.depth1));

  RenderedPair r = p;
  r.pose.t = {0, 0, 0};
  CHECK_THROWS_AS(normalize_pair(r), DegenerateError);
}

TEST_CASE("normalize_pair preserves flow: recomputation matches to 1e-9") {
  DataConfig cfg = small_config(123);
  RenderedPair p = make_sample(cfg, 0, 3);  // already normalized by the pipeline
  const FlowResult again = compute_flow(p.depth1, p.k1, p.k2, p.pose);
  double worst = 0;
  for (int y = 0; y < p.height(); ++y)
    for (int x = 0; x < p.width(); ++x) {
      if (p.occluded(x, y)) continue;
      worst = std::max(worst, std::abs(again.flow(0, y, x) - p.flow(0, y, x)));
      worst = std::max(worst, std::abs(again.flow(1, y, x) - p.flow(1, y, x)));
    }
  CHECK(worst < 1e-9);

  // Idempotence at the stated tolerance.
  RenderedPair q = p;
  normalize_pair(q);
  double dmax = 0;
  for (long i = 0; i < q.depth1.numel(); ++i)
    dmax = std::max(dmax, std::abs(q.depth1.data[i] - p.depth1.data[i]));
  CHECK(dmax < 1e-9);
  CHECK(std::abs(q.pose.t.norm() - 1.0) < 1e-9);
}

TEST_CASE("sparse labels: center, dense, bounds, and inverse depth") {
  Tensor depth = Tensor::full({24, 32}, 5.0);
  Rng rng(1);
  const SparseLabelSet center = sample_sparse_labels(depth, 1, LabelMode::center, rng);
  REQUIRE(center.count() == 1);
  CHECK(center.pixels[0].x == 16);
  CHECK(center.pixels[0].y == 12);
  CHECK(center.pixels[0].z == doctest::Approx(0.2));

  const SparseLabelSet dense = sample_sparse_labels(depth, kDenseLabels, LabelMode::uniform, rng);
  CHECK(dense.count() == 24 * 32);

  CHECK_THROWS_AS(sample_sparse_labels(depth, 24 * 32 + 1, LabelMode::uniform, rng), ConfigError);

  const SparseLabelSet some = sample_sparse_labels(depth, 16, LabelMode::uniform, rng);
  CHECK(some.count() == 16);
  for (const auto& l : some.pixels) {
    CHECK(l.x >= 0);
    CHECK(l.x < 32);
    CHECK(l.y >= 0);
    CHECK(l.y < 24);
  }
}

TEST_CASE("uniform label sampling passes a chi-square uniformity test at 1%") {
  Tensor depth = Tensor::full({48, 64}, 2.0);
  Rng rng(20260810);
  std::vector<long> counts(48 * 64, 0);
  const int draws = 1000, per_draw = 64;
  for (int i = 0; i < draws; ++i) {
    const SparseLabelSet s = sample_sparse_labels(depth, per_draw, LabelMode::uniform, rng);
    for (const auto& l : s.pixels) counts[static_cast<size_t>(l.y) * 64 + l.x] += 1;
  }
  const double expect = static_cast<double>(draws) * per_draw / (48.0 * 64.0);
  double chi2 = 0;
  for (long c : counts) chi2 += (c - expect) * (c - expect) / expect;
  // 1% critical value of chi-square with 3071 dof (frozen from scipy).
  CHECK(chi2 < 3256.26);
}

TEST_CASE("perturb_intrinsics bounds and determinism") {
  CameraIntrinsics k;
  k.fx = k.fy = 100;
  k.cx = 32;
  k.cy = 24;
  k.width = 640;
  k.height = 480;

  Rng r0(9);
  const CameraIntrinsics same = perturb_intrinsics(k, r0, 0.0);
  CHECK(same.fx == k.fx);
  CHECK(same.cx == k.cx);

  Rng ra(10), rb(10);
  const CameraIntrinsics a = perturb_intrinsics(k, ra, 0.2);
  const CameraIntrinsics b = perturb_intrinsics(k, rb, 0.2);
  CHECK(a.fx == b.fx);
  CHECK(a.cy == b.cy);

  Rng rc(11);
  for (int i = 0; i < 500; ++i) {
    const CameraIntrinsics p = perturb_intrinsics(k, rc, 0.2);
    CHECK(p.fx >= 80.0);
    CHECK(p.fx <= 120.0);
    CHECK(p.fy >= 80.0);
    CHECK(p.fy <= 120.0);
  }
}

TEST_CASE("corrupt_flow identities and noise statistics") {
  Tensor flow = Tensor::zeros({2, 10, 10});
  Rng rng(3);
  FlowCorruption none;
  const Tensor mag = corrupt_flow(flow, rng, none);
  for (double v : flow.data) CHECK(v == 0.0);
  for (double v : mag.data) CHECK(v == 0.0);

  FlowCorruption zero_outliers;
  zero_outliers.outlier_frac = 1.0;
  zero_outliers.outlier_mag = 0.0;
  corrupt_flow(flow, rng, zero_outliers);
  for (double v : flow.data) CHECK(v == 0.0);

  Tensor big = Tensor::zeros({2, 250, 400});
  FlowCorruption gauss;
  gauss.sigma = 1.0;
  corrupt_flow(big, rng, gauss);
  double mean = 0;
  for (double v : big.data) mean += v;
  mean /= static_cast<double>(big.numel());
  double var = 0;
  for (double v : big.data) var += (v - mean) * (v - mean);
  var /= static_cast<double>(big.numel() - 1);
  CHECK(std::abs(std::sqrt(var) - 1.0) < 0.02);
}

TEST_CASE("augmentation: involution, identity draw, and geometric consistency") {
  const DataConfig cfg = small_config(17);
  const RenderedPair base = make_sample(cfg, 0, 1);

  RenderedPair twice = base;
  apply_mirror(twice);
  apply_mirror(twice);
  CHECK(tensors_equal(twice.image1, base.image1));
  CHECK(tensors_equal(twice.flow, base.flow));
  CHECK(twice.k1.cx == base.k1.cx);
  CHECK(twice.pose.t.x == base.pose.t.x);
  for (size_t i = 0; i < base.labels.count(); ++i)
    CHECK(twice.labels.pixels[i].x == base.labels.pixels[i].x);

  RenderedPair rot2 = base;
  apply_rot180(rot2);
  apply_rot180(rot2);
  CHECK(tensors_equal(rot2.image2, base.image2));
  CHECK(tensors_equal(rot2.depth1, base.depth1));

  // A draw with both coins landing "no transform" leaves the pair untouched.
  uint64_t id = 0;
  for (;; ++id) {
    Rng probe = Rng::stream(555, id);
    const double a = probe.uniform();
    const double b = probe.uniform();
    if (a >= 0.5 && b >= 0.5) break;
  }
  RenderedPair same = base;
  Rng rng = Rng::stream(555, id);
  augment(same, rng);
  CHECK(tensors_equal(same.image1, base.image1));
  CHECK(tensors_equal(same.flow, base.flow));

  // Mirrored and rotated pairs still satisfy the reprojection identity.
  RenderedPair m = base;
  apply_mirror(m);
  m.pose.validate();
  CHECK(max_reprojection_residual(m) < 1e-6);

  RenderedPair r = base;
  apply_rot180(r);
  r.pose.validate();
  CHECK(max_reprojection_residual(r) < 1e-6);

  RenderedPair mr = base;
  apply_mirror(mr);
  apply_rot180(mr);
  CHECK(max_reprojection_residual(mr) < 1e-6);
}
