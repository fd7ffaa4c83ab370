#pragma once

#include <cstdint>
#include <vector>

#include "gldepth/tensor.hpp"

namespace gldepth {

struct MetricsRecord {
  double abs_inv = 0;
  double abs_rel = 0;
  double s_rmse = 0;
  long n_pixels = 0;
};

// Depth-accuracy metrics over the pixels where include[i] != 0 (all pixels
// when include is null). d is ground truth, dhat the prediction; both must
// be positive on the evaluated set or EvalError is thrown.
double abs_inv(const Tensor& d, const Tensor& dhat, const std::vector<uint8_t>* include = nullptr);
double abs_rel(const Tensor& d, const Tensor& dhat, const std::vector<uint8_t>* include = nullptr);
// Scale-invariant log RMSE: sqrt(mean(E^2) - mean(E)^2), E = ln(d/dhat).
double s_rmse(const Tensor& d, const Tensor& dhat, const std::vector<uint8_t>* include = nullptr);

MetricsRecord compute_metrics(const Tensor& d, const Tensor& dhat,
                              const std::vector<uint8_t>* include = nullptr);

}  // namespace gldepth
