#include "gldepth/metrics.hpp"

#include <cmath>

#include "gldepth/errors.hpp"

namespace gldepth {

namespace {

template <class Fn>
void for_masked(const Tensor& d, const Tensor& dhat, const std::vector<uint8_t>* include, Fn fn) {
  if (!d.same_shape(dhat)) throw UsageError("metrics: shape mismatch");
  if (include && static_cast<long>(include->size()) != d.numel())
    throw UsageError("metrics: mask size mismatch");
  long n = 0;
  for (long i = 0; i < d.numel(); ++i) {
    if (include && !(*include)[static_cast<size_t>(i)]) continue;
    const double dv = d.data[static_cast<size_t>(i)];
    const double hv = dhat.data[static_cast<size_t>(i)];
    if (dv <= 0 || hv <= 0) throw EvalError("metrics: non-positive depth under the mask");
    fn(dv, hv);
    ++n;
  }
  if (n == 0) throw UsageError("metrics: empty evaluation mask");
}

}  // namespace

double abs_inv(const Tensor& d, const Tensor& dhat, const std::vector<uint8_t>* include) {
  double acc = 0;
  long n = 0;
  for_masked(d, dhat, include, [&](double dv, double hv) {
    acc += std::abs(1.0 / dv - 1.0 / hv);
    ++n;
  });
  return acc / static_cast<double>(n);
}

double abs_rel(const Tensor& d, const Tensor& dhat, const std::vector<uint8_t>* include) {
  double acc = 0;
  long n = 0;
  for_masked(d, dhat, include, [&](double dv, double hv) {
    acc += std::abs(dv - hv) / dv;
    ++n;
  });
  return acc / static_cast<double>(n);
}

double s_rmse(const Tensor& d, const Tensor& dhat, const std::vector<uint8_t>* include) {
  double sum = 0, sumsq = 0;
  long n = 0;
  for_masked(d, dhat, include, [&](double dv, double hv) {
    const double e = std::log(dv / hv);
    sum += e;
    sumsq += e * e;
    ++n;
  });
  const double mean = sum / static_cast<double>(n);
  const double meansq = sumsq / static_cast<double>(n);
  return std::sqrt(std::max(0.0, meansq - mean * mean));
}

MetricsRecord compute_metrics(const Tensor& d, const Tensor& dhat,
                              const std::vector<uint8_t>* include) {
  MetricsRecord r;
  r.abs_inv = abs_inv(d, dhat, include);
  r.abs_rel = abs_rel(d, dhat, include);
  r.s_rmse = s_rmse(d, dhat, include);
  long n = 0;
  if (include) {
    for (uint8_t v : *include)
      if (v) ++n;
  } else {
    n = d.numel();
  }
  r.n_pixels = n;
  return r;
}

}  // namespace gldepth
