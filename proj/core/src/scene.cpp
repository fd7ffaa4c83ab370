#include "gldepth/scene.hpp"

#include <cmath>

namespace gldepth {

namespace {

uint64_t hash_mix(uint64_t a, uint64_t b) {
  uint64_t x = a * 0x9e3779b97f4a7c15ULL + b;
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double lattice_value(uint64_t seed, long ix, long iy) {
  const uint64_t h = hash_mix(seed, hash_mix(static_cast<uint64_t>(ix) * 2654435761ULL,
                                             static_cast<uint64_t>(iy) * 40503ULL));
  return static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0;  // [-1, 1)
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// Bilinear value noise in [-1, 1].
double value_noise(uint64_t seed, double u, double v) {
  const double fu = std::floor(u), fv = std::floor(v);
  const long iu = static_cast<long>(fu), iv = static_cast<long>(fv);
  const double tu = smoothstep(u - fu), tv = smoothstep(v - fv);
  const double a = lattice_value(seed, iu, iv);
  const double b = lattice_value(seed, iu + 1, iv);
  const double c = lattice_value(seed, iu, iv + 1);
  const double d = lattice_value(seed, iu + 1, iv + 1);
  return (a * (1 - tu) + b * tu) * (1 - tv) + (c * (1 - tu) + d * tu) * tv;
}

double checker(double u, double v, double s) {
  const long a = static_cast<long>(std::floor(u / s)) + static_cast<long>(std::floor(v / s));
  return (a & 1) ? 1.0 : -1.0;
}

// Patch intensity at plane-local coordinates, per channel.
double patch_intensity(const Patch& p, const SceneConfig& cfg, int channel, double lu, double lv) {
  const uint64_t seed = hash_mix(p.texture_seed, static_cast<uint64_t>(channel));
  const double n1 = value_noise(seed, lu * p.noise_scale, lv * p.noise_scale);
  const double n2 = value_noise(seed ^ 0xabcdef12345ULL, lu * p.noise_scale * 3.1,
                                lv * p.noise_scale * 3.1);
  const double ck = checker(lu, lv, p.checker_scale);
  const double v = 0.55 + cfg.checker_amp * ck + cfg.noise_amp * (0.7 * n1 + 0.3 * n2);
  return std::min(0.98, std::max(0.02, v));
}

Vec3 any_unit_perpendicular(const Vec3& n) {
  const Vec3 seedv = std::abs(n.x) < 0.8 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  return n.cross(seedv).normalized();
}

}  // namespace

PlanarScene sample_scene(uint64_t seed, const SceneConfig& cfg) {
  cfg.validate();
  PlanarScene scene;
  scene.config = cfg;
  Rng rng = Rng::stream(seed, 0xcafe);

  const CameraIntrinsics k = cfg.nominal_intrinsics();
  const int count = cfg.patch_count_min == cfg.patch_count_max
                        ? cfg.patch_count_min
                        : rng.uniform_int(cfg.patch_count_min, cfg.patch_count_max);

  const double d_bg_center = cfg.d_max * 0.96;

  // Foreground patches, rejection-sampled so all rectangle corners stay
  // inside the depth bounds.
  for (int i = 0; i < count; ++i) {
    Patch p;
    bool ok = false;
    for (int attempt = 0; attempt < 80 && !ok; ++attempt) {
      const double u = rng.uniform(0.1 * cfg.width, 0.9 * cfg.width);
      const double v = rng.uniform(0.1 * cfg.height, 0.9 * cfg.height);
      const double zc = rng.uniform(cfg.d_min * 1.2, d_bg_center * 0.92);
      p.center = k.backproject_dir(u, v) * zc;

      const double tilt = rng.uniform(0.0, cfg.patch_tilt_max_deg) * M_PI / 180.0;
      const double phi = rng.uniform(0.0, 2.0 * M_PI);
      p.n = Vec3{std::sin(tilt) * std::cos(phi), std::sin(tilt) * std::sin(phi), -std::cos(tilt)};
      p.delta = p.n.dot(p.center);

      const Vec3 base = any_unit_perpendicular(p.n);
      const double beta = rng.uniform(0.0, 2.0 * M_PI);
      p.e1 = (base * std::cos(beta) + p.n.cross(base) * std::sin(beta)).normalized();
      p.e2 = p.n.cross(p.e1);
      p.half_a = rng.uniform(0.35, 1.4) * (zc / 3.5);
      p.half_b = rng.uniform(0.35, 1.4) * (zc / 3.5);

      ok = true;
      for (int sa = -1; sa <= 1 && ok; sa += 2)
        for (int sb = -1; sb <= 1 && ok; sb += 2) {
          const Vec3 corner = p.center + p.e1 * (sa * p.half_a) + p.e2 * (sb * p.half_b);
          if (corner.z < cfg.d_min || corner.z > cfg.d_max) ok = false;
        }
    }
    if (!ok) continue;  // overly constrained draw; scene stays valid without it
    p.texture_seed = rng.next_u64();
    p.checker_scale = rng.uniform(0.2, 0.7);
    p.noise_scale = rng.uniform(0.8, 3.0);
    scene.patches.push_back(p);
  }

  // Infinite background plane, mildly tilted, bounds checked over the
  // camera-1 image corners.
  for (int attempt = 0;; ++attempt) {
    Patch bg;
    bg.infinite = true;
    const double tilt_max = attempt < 40 ? cfg.background_tilt_max_deg : 0.0;
    const double tilt = rng.uniform(0.0, tilt_max) * M_PI / 180.0;
    const double phi = rng.uniform(0.0, 2.0 * M_PI);
    bg.n = Vec3{std::sin(tilt) * std::cos(phi), std::sin(tilt) * std::sin(phi), -std::cos(tilt)};
    bg.center = Vec3{0, 0, d_bg_center};
    bg.delta = bg.n.dot(bg.center);
    bg.e1 = any_unit_perpendicular(bg.n);
    bg.e2 = bg.n.cross(bg.e1);

    bool ok = true;
    const double corners[4][2] = {{0.0, 0.0},
                                  {static_cast<double>(cfg.width - 1), 0.0},
                                  {0.0, static_cast<double>(cfg.height - 1)},
                                  {static_cast<double>(cfg.width - 1), static_cast<double>(cfg.height - 1)}};
    for (const auto& c : corners) {
      const Vec3 dir = k.backproject_dir(c[0], c[1]);
      const double denom = bg.n.dot(dir);
      if (std::abs(denom) < 1e-9) {
        ok = false;
        break;
      }
      const double z = bg.delta / denom;
      if (z < cfg.d_min || z > cfg.d_max) ok = false;
    }
    if (!ok) continue;
    bg.texture_seed = rng.next_u64();
    bg.checker_scale = rng.uniform(0.6, 1.6);
    bg.noise_scale = rng.uniform(0.4, 1.2);
    scene.patches.push_back(bg);
    break;
  }

  return scene;
}

void render_view(const PlanarScene& scene, const CameraIntrinsics& k, const PoseSE3& world_to_cam,
                 Tensor& image, Tensor& depth) {
  const SceneConfig& cfg = scene.config;
  const int w = k.width, h = k.height, ch = cfg.channels;
  image = Tensor::zeros({ch, h, w});
  depth = Tensor::zeros({h, w});

  const Mat3 rt = world_to_cam.R.transpose();
  const Vec3 origin = (rt * world_to_cam.t) * -1.0;  // camera center in scene frame

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Vec3 dir = rt * k.backproject_dir(x, y);  // scene-frame ray, unit camera z
      double best_s = -1.0;
      const Patch* best = nullptr;
      Vec3 best_hit;
      for (const auto& p : scene.patches) {
        const double denom = p.n.dot(dir);
        if (std::abs(denom) < 1e-12) continue;
        const double s = (p.delta - p.n.dot(origin)) / denom;
        if (s <= 1e-9) continue;
        const Vec3 hit = origin + dir * s;
        if (!p.infinite) {
          const Vec3 local = hit - p.center;
          if (std::abs(local.dot(p.e1)) > p.half_a || std::abs(local.dot(p.e2)) > p.half_b)
            continue;
        }
        if (best_s < 0 || s < best_s) {
          best_s = s;
          best = &p;
          best_hit = hit;
        }
      }
      if (!best)
        throw ConfigError("render_view: ray hit no surface; background plane misconfigured");
      // With unit-z camera rays the ray parameter equals the camera depth.
      depth(y, x) = best_s;
      const Vec3 local = best_hit - best->center;
      const double lu = local.dot(best->e1), lv = local.dot(best->e2);
      for (int c = 0; c < ch; ++c) image(c, y, x) = patch_intensity(*best, cfg, c, lu, lv);
    }
}

}  // namespace gldepth
