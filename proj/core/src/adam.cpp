#include "gldepth/adam.hpp"

#include <cmath>

#include "gldepth/errors.hpp"

namespace gldepth {

AdamState AdamState::init(const ParamSet& params, AdamConfig cfg) {
  AdamState st;
  st.cfg = cfg;
  st.t = 0;
  st.m.reserve(params.size());
  st.v.reserve(params.size());
  for (const auto& p : params.items) {
    st.m.push_back(Tensor::zeros(p.value.shape));
    st.v.push_back(Tensor::zeros(p.value.shape));
  }
  return st;
}

void adam_step(ParamSet& params, AdamState& state) {
  if (state.m.size() != params.size())
    throw UsageError("adam_step: state does not match parameter set");
  for (const auto& p : params.items)
    if (!p.grad.all_finite())
      throw NumericError("adam_step: non-finite gradient for parameter '" + p.name + "'");

  state.t += 1;
  const auto& c = state.cfg;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
  for (size_t i = 0; i < params.size(); ++i) {
    Param& p = params.items[i];
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (long j = 0; j < p.value.numel(); ++j) {
      const double g = p.grad.data[j];
      m.data[j] = c.beta1 * m.data[j] + (1.0 - c.beta1) * g;
      v.data[j] = c.beta2 * v.data[j] + (1.0 - c.beta2) * g * g;
      const double mhat = m.data[j] / bc1;
      const double vhat = v.data[j] / bc2;
      p.value.data[j] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

}  // namespace gldepth
