#pragma once

#include <cstdint>
#include <vector>

#include "gldepth/camera.hpp"
#include "gldepth/labels.hpp"
#include "gldepth/rng.hpp"
#include "gldepth/scene.hpp"
#include "gldepth/tensor.hpp"

namespace gldepth {

// Dense-label sentinel for label counts.
inline constexpr int kDenseLabels = -1;

enum class LabelMode { uniform, center };

struct MotionConfig {
  double rot_max_deg = 10.0;  // per-axis rotation bound
  double t_min = 0.05;        // translation norm range before normalization
  double t_max = 0.5;
};

// Two-view training/evaluation sample. Geometry lives in the camera-1 frame;
// pose maps camera-1 coordinates to camera-2.
struct RenderedPair {
  Tensor image1, image2;  // {C,H,W}, intensity in [0,1]
  Tensor depth1;          // {H,W}, camera-1 depth
  Tensor flow;            // {2,H,W}, pixel displacements into image 2
  std::vector<uint8_t> occlusion;  // H*W, 1 where not visible in view 2
  CameraIntrinsics k1, k2;
  PoseSE3 pose;
  SparseLabelSet labels;
  Tensor flow_corruption;  // {H,W} per-pixel corruption magnitude; empty if clean
  uint64_t seed = 0;

  int width() const { return depth1.dim(1); }
  int height() const { return depth1.dim(0); }
  bool occluded(int x, int y) const {
    return occlusion[static_cast<size_t>(y) * width() + x] != 0;
  }
};

struct FlowResult {
  Tensor flow;  // {2,H,W}
  std::vector<uint8_t> occlusion;
};

// Analytic flow: backproject through k1 at the given depth, transform by
// pose, project through k2. Occlusion marks points behind camera 2, outside
// its image, or failing the z-buffer test against depth2 at relative
// tolerance tau_occ (when depth2 is provided).
FlowResult compute_flow(const Tensor& depth1, const CameraIntrinsics& k1,
                        const CameraIntrinsics& k2, const PoseSE3& pose,
                        const Tensor* depth2 = nullptr, double tau_occ = 0.01);

// Removes the monocular scale ambiguity: depth1 and t jointly divided by
// |t|; flow is untouched (it is invariant under that scaling). Labels, when
// present, are rescaled consistently. Throws DegenerateError for |t| < eps_t.
void normalize_pair(RenderedPair& pair, double eps_t = 1e-6);

// n distinct labeled pixels with z = 1/depth; kDenseLabels labels every
// pixel. center mode picks the n pixels nearest the image center.
SparseLabelSet sample_sparse_labels(const Tensor& depth1, int n, LabelMode mode, Rng& rng);

// Independent multiplicative perturbation of fx, fy, cx, cy, each by a
// uniform factor in [1-maxfrac, 1+maxfrac].
CameraIntrinsics perturb_intrinsics(const CameraIntrinsics& k, Rng& rng, double maxfrac);

struct FlowCorruption {
  double sigma = 0.0;         // Gaussian noise std, px, per component
  double outlier_frac = 0.0;  // fraction of pixels hit by outliers
  double outlier_mag = 0.0;   // max outlier displacement, px
};

// Adds i.i.d. Gaussian noise, then displaces an outlier_frac fraction of
// pixels by a uniform random vector of magnitude up to outlier_mag. The
// returned {H,W} tensor records each pixel's total corruption magnitude.
Tensor corrupt_flow(Tensor& flow, Rng& rng, const FlowCorruption& c);

// Training augmentation: horizontal mirror and 180-degree rotation, each
// with probability 1/2. All fields are transformed consistently, including
// intrinsics and pose, so the reprojection identity keeps holding.
void augment(RenderedPair& pair, Rng& rng);
void apply_mirror(RenderedPair& pair);
void apply_rot180(RenderedPair& pair);

struct DataConfig {
  SceneConfig scene;
  MotionConfig motion;
  int n_labels = 1;  // kDenseLabels for dense supervision
  LabelMode label_mode = LabelMode::uniform;
  double intrinsics_perturb = 0.0;  // maxfrac; 0 disables
  FlowCorruption corruption;
  double tau_occ = 0.01;
  uint64_t seed = 1;
};

// Pure function of (config.seed, salt, index): regenerating a sample is
// bit-identical. salt separates train/test splits.
RenderedPair make_sample(const DataConfig& cfg, uint64_t salt, uint64_t index);
std::vector<RenderedPair> make_dataset(const DataConfig& cfg, uint64_t salt, int count);

}  // namespace gldepth
