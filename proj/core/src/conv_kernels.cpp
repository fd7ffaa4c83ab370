#include "gldepth/conv_kernels.hpp"

namespace gldepth::kernels {

namespace {

// Valid output-x range for a given tap offset: indices x in [lo, hi) such
// that x*stride + dx - pad lands inside [0, W).
inline void tap_range_x(int ow, int w, int stride, int dx, int pad, int& lo, int& hi) {
  const int off = dx - pad;
  lo = 0;
  while (lo < ow && lo * stride + off < 0) ++lo;
  hi = ow;
  while (hi > lo && (hi - 1) * stride + off >= w) --hi;
}

}  // namespace

void conv2d_forward(const Tensor& input, const Tensor& filters, const Tensor& bias,
                    int stride, Tensor& out) {
  const int c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int c_out = filters.dim(0), k = filters.dim(2);
  if (filters.ndim() != 4 || filters.dim(1) != c_in)
    throw ConfigError("conv2d: filter channels " + filters.shape_str() +
                      " do not match input " + input.shape_str());
  if (filters.dim(3) != k || k % 2 == 0) throw ConfigError("conv2d: kernel must be square and odd");
  if (bias.numel() != c_out) throw ConfigError("conv2d: bias length does not match output channels");
  if (stride < 1) throw ConfigError("conv2d: stride must be positive");

  const int pad = (k - 1) / 2;
  const int oh = (h + stride - 1) / stride;
  const int ow = (w + stride - 1) / stride;
  out = Tensor({c_out, oh, ow});

  for (int o = 0; o < c_out; ++o) {
    double* out_o = &out.data[static_cast<size_t>(o) * oh * ow];
    const double b = bias(o);
    for (long i = 0; i < static_cast<long>(oh) * ow; ++i) out_o[i] = b;
    for (int c = 0; c < c_in; ++c) {
      const double* in_c = &input.data[static_cast<size_t>(c) * h * w];
      for (int dy = 0; dy < k; ++dy) {
        for (int dx = 0; dx < k; ++dx) {
          const double wt = filters(o, c, dy, dx);
          if (wt == 0.0) continue;
          int xlo, xhi;
          tap_range_x(ow, w, stride, dx, pad, xlo, xhi);
          const int off = dx - pad;
          for (int y = 0; y < oh; ++y) {
            const int yi = y * stride + dy - pad;
            if (yi < 0 || yi >= h) continue;
            const double* in_row = in_c + static_cast<size_t>(yi) * w + off;
            double* out_row = out_o + static_cast<size_t>(y) * ow;
            if (stride == 1) {
              for (int x = xlo; x < xhi; ++x) out_row[x] += wt * in_row[x];
            } else {
              for (int x = xlo; x < xhi; ++x) out_row[x] += wt * in_row[static_cast<long>(x) * stride];
            }
          }
        }
      }
    }
  }
}

void conv2d_backward(const Tensor& input, const Tensor& filters, int stride,
                     const Tensor& grad_out, Tensor* grad_input, Tensor* grad_filters,
                     Tensor* grad_bias) {
  const int c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int c_out = filters.dim(0), k = filters.dim(2);
  const int pad = (k - 1) / 2;
  const int oh = grad_out.dim(1), ow = grad_out.dim(2);

  if (grad_bias) {
    for (int o = 0; o < c_out; ++o) {
      const double* g = &grad_out.data[static_cast<size_t>(o) * oh * ow];
      double acc = 0.0;
      for (long i = 0; i < static_cast<long>(oh) * ow; ++i) acc += g[i];
      (*grad_bias)(o) += acc;
    }
  }

  for (int o = 0; o < c_out; ++o) {
    const double* go = &grad_out.data[static_cast<size_t>(o) * oh * ow];
    for (int c = 0; c < c_in; ++c) {
      const double* in_c = &input.data[static_cast<size_t>(c) * h * w];
      double* gi_c = grad_input ? &grad_input->data[static_cast<size_t>(c) * h * w] : nullptr;
      for (int dy = 0; dy < k; ++dy) {
        for (int dx = 0; dx < k; ++dx) {
          int xlo, xhi;
          tap_range_x(ow, w, stride, dx, pad, xlo, xhi);
          const int off = dx - pad;
          double wacc = 0.0;
          const double wt = filters(o, c, dy, dx);
          for (int y = 0; y < oh; ++y) {
            const int yi = y * stride + dy - pad;
            if (yi < 0 || yi >= h) continue;
            const double* in_row = in_c + static_cast<size_t>(yi) * w + off;
            const double* go_row = go + static_cast<size_t>(y) * ow;
            if (grad_filters) {
              if (stride == 1) {
                for (int x = xlo; x < xhi; ++x) wacc += go_row[x] * in_row[x];
              } else {
                for (int x = xlo; x < xhi; ++x) wacc += go_row[x] * in_row[static_cast<long>(x) * stride];
              }
            }
            if (gi_c && wt != 0.0) {
              double* gi_row = gi_c + static_cast<size_t>(yi) * w + off;
              if (stride == 1) {
                for (int x = xlo; x < xhi; ++x) gi_row[x] += wt * go_row[x];
              } else {
                for (int x = xlo; x < xhi; ++x) gi_row[static_cast<long>(x) * stride] += wt * go_row[x];
              }
            }
          }
          if (grad_filters) (*grad_filters)(o, c, dy, dx) += wacc;
        }
      }
    }
  }
}

}  // namespace gldepth::kernels
