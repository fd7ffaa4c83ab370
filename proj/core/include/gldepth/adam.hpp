#pragma once

#include "gldepth/params.hpp"

namespace gldepth {

// Bias-corrected Adam. Reference defaults; the learning rate matches the
// training default and is overridden per run.
struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig cfg;
  long t = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  static AdamState init(const ParamSet& params, AdamConfig cfg = {});
};

// One optimizer step over params.grad. Increments state.t by exactly 1.
// Throws NumericError naming the parameter if its gradient is non-finite.
void adam_step(ParamSet& params, AdamState& state);

}  // namespace gldepth
