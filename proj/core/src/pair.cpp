#include "gldepth/pair.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace gldepth {

FlowResult compute_flow(const Tensor& depth1, const CameraIntrinsics& k1,
                        const CameraIntrinsics& k2, const PoseSE3& pose, const Tensor* depth2,
                        double tau_occ) {
  if (depth1.ndim() != 2) throw ConfigError("compute_flow: depth must be {H,W}");
  const int h = depth1.dim(0), w = depth1.dim(1);

  FlowResult out;
  out.flow = Tensor::zeros({2, h, w});
  out.occlusion.assign(static_cast<size_t>(h) * w, 0);

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double d = depth1(y, x);
      if (d <= 0) throw ConfigError("compute_flow: non-positive depth");
      const Vec3 p1 = k1.backproject_dir(x, y) * d;
      const Vec3 p2 = pose.apply(p1);
      const size_t i = static_cast<size_t>(y) * w + x;
      if (p2.z <= 1e-9) {
        out.occlusion[i] = 1;  // behind camera 2; flow left zero, never NaN
        continue;
      }
      double u, v;
      k2.project(p2, u, v);
      out.flow(0, y, x) = u - x;
      out.flow(1, y, x) = v - y;
      if (u < -0.5 || u > k2.width - 0.5 || v < -0.5 || v > k2.height - 0.5) {
        out.occlusion[i] = 1;  // leaves the second view's pixel raster
        continue;
      }
      if (depth2) {
        // Conservative z-buffer check against the nearest of the four
        // surrounding camera-2 depths.
        const int x0 = std::clamp(static_cast<int>(std::floor(u)), 0, k2.width - 1);
        const int y0 = std::clamp(static_cast<int>(std::floor(v)), 0, k2.height - 1);
        const int x1 = std::min(x0 + 1, k2.width - 1);
        const int y1 = std::min(y0 + 1, k2.height - 1);
        const double dref = std::min(std::min((*depth2)(y0, x0), (*depth2)(y0, x1)),
                                     std::min((*depth2)(y1, x0), (*depth2)(y1, x1)));
        if (p2.z > dref * (1.0 + tau_occ)) out.occlusion[i] = 1;
      }
    }
  return out;
}

void normalize_pair(RenderedPair& pair, double eps_t) {
  const double n = pair.pose.t.norm();
  if (n < eps_t) throw DegenerateError("normalize_pair: translation norm below threshold");
  pair.pose.t = pair.pose.t * (1.0 / n);
  for (auto& d : pair.depth1.data) d /= n;
  for (auto& l : pair.labels.pixels) l.z *= n;  // inverse depth scales oppositely
}

SparseLabelSet sample_sparse_labels(const Tensor& depth1, int n, LabelMode mode, Rng& rng) {
  const int h = depth1.dim(0), w = depth1.dim(1);
  SparseLabelSet out;

  auto push = [&](int x, int y) {
    const double d = depth1(y, x);
    if (d <= 0) throw ConfigError("sample_sparse_labels: non-positive depth");
    out.pixels.push_back({x, y, 1.0 / d});
  };

  if (n == kDenseLabels) {
    out.pixels.reserve(static_cast<size_t>(h) * w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) push(x, y);
    return out;
  }
  if (n < 1 || n > h * w)
    throw ConfigError("sample_sparse_labels: label count out of range");

  if (mode == LabelMode::center) {
    // n pixels nearest to (W/2, H/2), deterministic ordering.
    const int cx = w / 2, cy = h / 2;
    std::vector<std::pair<long, int>> order;
    order.reserve(static_cast<size_t>(h) * w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const long d2 = static_cast<long>(x - cx) * (x - cx) + static_cast<long>(y - cy) * (y - cy);
        order.push_back({d2 * 100000L + y * 1000L + x, y * w + x});
      }
    std::sort(order.begin(), order.end());
    for (int i = 0; i < n; ++i) push(order[static_cast<size_t>(i)].second % w,
                                      order[static_cast<size_t>(i)].second / w);
    return out;
  }

  std::unordered_set<int> used;
  while (static_cast<int>(out.pixels.size()) < n) {
    const int x = rng.uniform_int(0, w - 1);
    const int y = rng.uniform_int(0, h - 1);
    if (used.insert(y * w + x).second) push(x, y);
  }
  return out;
}

CameraIntrinsics perturb_intrinsics(const CameraIntrinsics& k, Rng& rng, double maxfrac) {
  if (maxfrac < 0 || maxfrac >= 1) throw ConfigError("perturb_intrinsics: maxfrac must be in [0,1)");
  CameraIntrinsics out = k;
  out.fx *= rng.uniform(1.0 - maxfrac, 1.0 + maxfrac);
  out.fy *= rng.uniform(1.0 - maxfrac, 1.0 + maxfrac);
  out.cx *= rng.uniform(1.0 - maxfrac, 1.0 + maxfrac);
  out.cy *= rng.uniform(1.0 - maxfrac, 1.0 + maxfrac);
  return out;
}

Tensor corrupt_flow(Tensor& flow, Rng& rng, const FlowCorruption& c) {
  if (flow.ndim() != 3 || flow.dim(0) != 2) throw ConfigError("corrupt_flow: flow must be {2,H,W}");
  const int h = flow.dim(1), w = flow.dim(2);
  Tensor mag = Tensor::zeros({h, w});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double dx = 0, dy = 0;
      if (c.sigma > 0) {
        dx += rng.normal(0.0, c.sigma);
        dy += rng.normal(0.0, c.sigma);
      }
      if (c.outlier_frac > 0 && rng.uniform() < c.outlier_frac) {
        const double ang = rng.uniform(0.0, 2.0 * M_PI);
        const double m = rng.uniform(0.0, c.outlier_mag);
        dx += m * std::cos(ang);
        dy += m * std::sin(ang);
      }
      flow(0, y, x) += dx;
      flow(1, y, x) += dy;
      mag(y, x) = std::hypot(dx, dy);
    }
  return mag;
}

namespace {

void mirror_x_inplace(Tensor& t) {
  // Works on {H,W} and {C,H,W}.
  const int w = t.dim(t.ndim() - 1);
  const long rows = t.numel() / w;
  for (long r = 0; r < rows; ++r) {
    double* row = &t.data[static_cast<size_t>(r) * w];
    std::reverse(row, row + w);
  }
}

void rot180_inplace(Tensor& t) {
  const int w = t.dim(t.ndim() - 1);
  const int hh = t.dim(t.ndim() - 2);
  const long planes = t.numel() / (static_cast<long>(w) * hh);
  for (long p = 0; p < planes; ++p) {
    double* plane = &t.data[static_cast<size_t>(p) * hh * w];
    std::reverse(plane, plane + static_cast<long>(hh) * w);
  }
}

}  // namespace

void apply_mirror(RenderedPair& pair) {
  const int w = pair.width();
  mirror_x_inplace(pair.image1);
  mirror_x_inplace(pair.image2);
  mirror_x_inplace(pair.depth1);
  mirror_x_inplace(pair.flow);
  if (pair.flow_corruption.numel() > 0) mirror_x_inplace(pair.flow_corruption);
  // Horizontal flow component flips sign.
  for (int y = 0; y < pair.height(); ++y)
    for (int x = 0; x < w; ++x) pair.flow(0, y, x) = -pair.flow(0, y, x);
  {
    Tensor occ = Tensor::zeros({pair.height(), w});
    for (int y = 0; y < pair.height(); ++y)
      for (int x = 0; x < w; ++x)
        occ(y, x) = pair.occlusion[static_cast<size_t>(y) * w + (w - 1 - x)];
    for (int y = 0; y < pair.height(); ++y)
      for (int x = 0; x < w; ++x)
        pair.occlusion[static_cast<size_t>(y) * w + x] = occ(y, x) != 0 ? 1 : 0;
  }
  for (auto& l : pair.labels.pixels) l.x = w - 1 - l.x;
  // The mirrored pair is the physical scene conjugated by M = diag(-1,1,1).
  pair.k1.cx = (w - 1) - pair.k1.cx;
  pair.k2.cx = (w - 1) - pair.k2.cx;
  const Mat3 m = Mat3::diag(-1, 1, 1);
  pair.pose.R = m * pair.pose.R * m;
  pair.pose.t = m * pair.pose.t;
}

void apply_rot180(RenderedPair& pair) {
  const int w = pair.width(), h = pair.height();
  rot180_inplace(pair.image1);
  rot180_inplace(pair.image2);
  rot180_inplace(pair.depth1);
  rot180_inplace(pair.flow);
  if (pair.flow_corruption.numel() > 0) rot180_inplace(pair.flow_corruption);
  for (auto& v : pair.flow.data) v = -v;
  {
    std::vector<uint8_t> occ(pair.occlusion.size());
    for (size_t i = 0; i < occ.size(); ++i) occ[i] = pair.occlusion[occ.size() - 1 - i];
    pair.occlusion = std::move(occ);
  }
  for (auto& l : pair.labels.pixels) {
    l.x = w - 1 - l.x;
    l.y = h - 1 - l.y;
  }
  pair.k1.cx = (w - 1) - pair.k1.cx;
  pair.k1.cy = (h - 1) - pair.k1.cy;
  pair.k2.cx = (w - 1) - pair.k2.cx;
  pair.k2.cy = (h - 1) - pair.k2.cy;
  const Mat3 m = Mat3::diag(-1, -1, 1);
  pair.pose.R = m * pair.pose.R * m;
  pair.pose.t = m * pair.pose.t;
}

void augment(RenderedPair& pair, Rng& rng) {
  const bool mirror = rng.uniform() < 0.5;
  const bool rot = rng.uniform() < 0.5;
  if (mirror) apply_mirror(pair);
  if (rot) apply_rot180(pair);
}

namespace {

PoseSE3 sample_motion(Rng& rng, const MotionConfig& cfg) {
  PoseSE3 pose;
  const double s = cfg.rot_max_deg * M_PI / 180.0;
  pose.R = Mat3::rot_z(rng.uniform(-s, s)) * Mat3::rot_y(rng.uniform(-s, s)) *
           Mat3::rot_x(rng.uniform(-s, s));
  Vec3 dir;
  for (;;) {
    dir = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const double n = dir.norm();
    if (n > 0.05 && n <= 1.0) {
      dir = dir * (1.0 / n);
      break;
    }
  }
  pose.t = dir * rng.uniform(cfg.t_min, cfg.t_max);
  return pose;
}

}  // namespace

RenderedPair make_sample(const DataConfig& cfg, uint64_t salt, uint64_t index) {
  cfg.scene.validate();
  const uint64_t stream_base = (salt << 56) ^ (index * 8);
  Rng scene_rng = Rng::stream(cfg.seed, stream_base + 0);
  Rng motion_rng = Rng::stream(cfg.seed, stream_base + 1);
  Rng label_rng = Rng::stream(cfg.seed, stream_base + 2);
  Rng perturb_rng = Rng::stream(cfg.seed, stream_base + 3);
  Rng corrupt_rng = Rng::stream(cfg.seed, stream_base + 4);

  RenderedPair pair;
  pair.seed = cfg.seed ^ stream_base;

  const CameraIntrinsics nominal = cfg.scene.nominal_intrinsics();
  pair.k1 = cfg.intrinsics_perturb > 0 ? perturb_intrinsics(nominal, perturb_rng, cfg.intrinsics_perturb)
                                       : nominal;
  pair.k2 = cfg.intrinsics_perturb > 0 ? perturb_intrinsics(nominal, perturb_rng, cfg.intrinsics_perturb)
                                       : nominal;

  const PlanarScene scene = sample_scene(scene_rng.next_u64(), cfg.scene);
  pair.pose = sample_motion(motion_rng, cfg.motion);

  Tensor depth2;
  render_view(scene, pair.k1, PoseSE3{}, pair.image1, pair.depth1);
  render_view(scene, pair.k2, pair.pose, pair.image2, depth2);

  FlowResult fr = compute_flow(pair.depth1, pair.k1, pair.k2, pair.pose, &depth2, cfg.tau_occ);
  pair.flow = std::move(fr.flow);
  pair.occlusion = std::move(fr.occlusion);

  normalize_pair(pair);

  if (cfg.corruption.sigma > 0 || cfg.corruption.outlier_frac > 0)
    pair.flow_corruption = corrupt_flow(pair.flow, corrupt_rng, cfg.corruption);

  pair.labels = sample_sparse_labels(pair.depth1, cfg.n_labels, cfg.label_mode, label_rng);
  return pair;
}

std::vector<RenderedPair> make_dataset(const DataConfig& cfg, uint64_t salt, int count) {
  std::vector<RenderedPair> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(make_sample(cfg, salt, static_cast<uint64_t>(i)));
  return out;
}

}  // namespace gldepth
