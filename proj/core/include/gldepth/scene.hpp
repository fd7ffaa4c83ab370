#pragma once

#include <cstdint>
#include <vector>

#include "gldepth/camera.hpp"
#include "gldepth/rng.hpp"
#include "gldepth/tensor.hpp"

namespace gldepth {

struct SceneConfig {
  int width = 64;
  int height = 48;
  int channels = 1;
  double focal = 57.6;  // fx = fy nominal, pixels
  int patch_count_min = 4;
  int patch_count_max = 9;
  double d_min = 2.0;
  double d_max = 8.0;
  double patch_tilt_max_deg = 40.0;
  double background_tilt_max_deg = 8.0;
  double checker_amp = 0.22;
  double noise_amp = 0.25;

  void validate() const {
    if (d_min <= 0 || d_min >= d_max) throw ConfigError("SceneConfig: need 0 < d_min < d_max");
    if (width <= 0 || height <= 0) throw ConfigError("SceneConfig: non-positive resolution");
    if (patch_count_min < 0 || patch_count_max < patch_count_min)
      throw ConfigError("SceneConfig: invalid patch count range");
    if (channels < 1) throw ConfigError("SceneConfig: channels must be >= 1");
  }

  CameraIntrinsics nominal_intrinsics() const {
    CameraIntrinsics k;
    k.fx = k.fy = focal;
    k.cx = 0.5 * (width - 1);
    k.cy = 0.5 * (height - 1);
    k.width = width;
    k.height = height;
    return k;
  }
};

// Textured plane n.X = delta, bounded by a rectangle in the plane unless
// infinite (the background). All geometry in the camera-1 frame.
struct Patch {
  Vec3 n;
  double delta = 0;
  Vec3 center;
  Vec3 e1, e2;
  double half_a = 0, half_b = 0;
  bool infinite = false;
  uint64_t texture_seed = 0;
  double checker_scale = 1.0;
  double noise_scale = 1.0;
};

struct PlanarScene {
  std::vector<Patch> patches;  // background plane last
  SceneConfig config;
};

// Deterministic in seed. Every camera-1 pixel ray is guaranteed to intersect
// the (infinite) background plane; all patch geometry lies within the
// configured depth bounds.
PlanarScene sample_scene(uint64_t seed, const SceneConfig& cfg);

// Ray-cast rendering with nearest-intersection visibility. `world_to_cam`
// maps camera-1 (scene) coordinates into the rendered camera's frame.
// image is {channels,H,W} intensity in [0,1]; depth is {H,W} camera-frame z.
void render_view(const PlanarScene& scene, const CameraIntrinsics& k, const PoseSE3& world_to_cam,
                 Tensor& image, Tensor& depth);

}  // namespace gldepth
