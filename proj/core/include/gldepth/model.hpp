#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "gldepth/pair.hpp"
#include "gldepth/params.hpp"
#include "gldepth/tape.hpp"

namespace gldepth {

enum class LocalSource { flow, images };

struct ModelConfig {
  int width = 64;
  int height = 48;
  int image_channels = 1;
  double leaky_slope = 0.1;
  bool use_image_pair = true;    // feed images (next to flow) to the global module
  bool use_coordconv = true;     // append x/y coordinate channels to the local input
  bool use_global_module = true; // generate filter banks from g; else learn static banks
  LocalSource local_source = LocalSource::flow;
  double epsilon_z = 1e-3;       // guard for depth = 1 / max(z, epsilon_z)
  // Small Enc-Dec channel plan; 54 in the third slot is selectable.
  std::array<int, 4> encdec_channels{16, 32, 64, 128};

  int global_in_channels() const {
    return (use_image_pair ? 2 * image_channels : 0) + 2;
  }
  int local_in_channels() const {
    return (local_source == LocalSource::flow ? 2 : 2 * image_channels) +
           (use_coordconv ? 2 : 0);
  }

  void validate() const {
    if (width % 16 != 0 || height % 16 != 0)
      throw ConfigError("ModelConfig: spatial dims must be divisible by 16, got " +
                        std::to_string(width) + "x" + std::to_string(height));
    if (image_channels < 1) throw ConfigError("ModelConfig: image_channels must be >= 1");
    if (!(leaky_slope > 0 && leaky_slope < 1))
      throw ConfigError("ModelConfig: leaky_slope must be in (0,1)");
  }
};

// Filter bank plan of the generated local network: three 3x3 banks with
// 20, 10, 20 output channels over the local input, then a fixed 20->1 head.
struct BankPlan {
  int c_in = 4;
  static constexpr int kBankOut[3] = {20, 10, 20};

  int in_channels(int bank) const { return bank == 0 ? c_in : kBankOut[bank - 1]; }
  int weight_count(int bank) const { return kBankOut[bank] * in_channels(bank) * 9; }
  int bias_count(int bank) const { return kBankOut[bank]; }
  // Perceptron output length: weights and biases of the three banks.
  int total() const {
    int n = 0;
    for (int b = 0; b < 3; ++b) n += weight_count(b) + bias_count(b);
    return n;
  }
};

// x- and y-coordinate channels spanning [-1, 1]; {2,H,W}.
Tensor coord_channels(int height, int width);

class DepthEstimator {
 public:
  virtual ~DepthEstimator() = default;
  // Inverse-depth prediction {1,H,W}. train=true registers parameters with
  // gradients; inputs themselves are never differentiated.
  virtual Var forward_z(Tape& t, const RenderedPair& sample, bool train) const = 0;
  virtual ParamSet& params() = 0;
  virtual const ParamSet& params() const = 0;
  virtual std::string kind() const = 0;
  virtual const ModelConfig& config() const = 0;
  // Per-layer activation standard deviations for initialization sanity checks.
  virtual std::vector<std::pair<std::string, double>> activation_stds(
      const RenderedPair& sample) const = 0;
};

// Global-local architecture: a strided convolutional encoder pools into a
// 6-vector g; a linear perceptron expands g into three convolutional filter
// banks that are applied to the flow field (with coordinate channels); a
// fixed 3x3 convolution shrinks 20 channels to the inverse-depth map.
class GlobalLocalModel : public DepthEstimator {
 public:
  static constexpr int kGlobalParams = 6;

  GlobalLocalModel(const ModelConfig& cfg, uint64_t seed);

  struct ForwardResult {
    Var g;                      // invalid when the global module is ablated
    std::array<Var, 6> banks;   // b1w, b1b, b2w, b2b, b3w, b3b
    Var z;                      // {1,H,W}
  };

  ForwardResult forward(Tape& t, const RenderedPair& sample, bool train) const;
  Var forward_z(Tape& t, const RenderedPair& sample, bool train) const override;

  // Global path only: 6-vector g. Requires use_global_module.
  Var global_forward(Tape& t, const RenderedPair& sample, bool train) const;

  // Generated banks flattened in perceptron order, for the filter dumps.
  Tensor dump_filters(const RenderedPair& sample) const;

  ParamSet& params() override { return params_; }
  const ParamSet& params() const override { return params_; }
  std::string kind() const override { return "global-local"; }
  const ModelConfig& config() const override { return cfg_; }
  std::vector<std::pair<std::string, double>> activation_stds(
      const RenderedPair& sample) const override;

  const BankPlan& bank_plan() const { return plan_; }
  // Offset of each of the six segments in the perceptron output.
  std::array<long, 6> bank_offsets() const;

  Tensor assemble_global_input(const RenderedPair& sample) const;
  Tensor assemble_local_input(const RenderedPair& sample) const;

 private:
  ModelConfig cfg_;
  BankPlan plan_;
  ParamSet params_;
  Tensor coords_;
};

// Reduced encoder-decoder baseline: four strided convolutions with kernel
// sizes (7,5,3,3), a mirrored decoder with nearest-neighbor upsampling and
// skip connections, and a final 3x3 convolution to one channel.
class SmallEncDec : public DepthEstimator {
 public:
  SmallEncDec(const ModelConfig& cfg, uint64_t seed);

  Var forward_z(Tape& t, const RenderedPair& sample, bool train) const override;
  ParamSet& params() override { return params_; }
  const ParamSet& params() const override { return params_; }
  std::string kind() const override { return "small-encdec"; }
  const ModelConfig& config() const override { return cfg_; }
  std::vector<std::pair<std::string, double>> activation_stds(
      const RenderedPair& sample) const override;

  Tensor assemble_input(const RenderedPair& sample) const;

 private:
  ModelConfig cfg_;
  ParamSet params_;
};

std::unique_ptr<DepthEstimator> make_model(const std::string& kind, const ModelConfig& cfg,
                                           uint64_t seed);

// Depth from predicted inverse depth, guarded away from the pole.
inline double depth_from_z(double z, double epsilon_z) {
  return 1.0 / std::max(z, epsilon_z);
}

}  // namespace gldepth
