#pragma once

#include "gldepth/tensor.hpp"

namespace gldepth::kernels {

// Direct 2D convolution with zero "same" padding of (k-1)/2 per side.
// input {C,H,W}, filters {O,C,k,k} with k odd, bias {O}, stride >= 1.
// Output shape is {O, ceil(H/stride), ceil(W/stride)}.
void conv2d_forward(const Tensor& input, const Tensor& filters, const Tensor& bias,
                    int stride, Tensor& out);

// Gradients of a scalar loss through conv2d_forward. Any of the gradient
// outputs may be null to skip its computation. Accumulates (+=) into the
// provided tensors, which must be pre-shaped.
void conv2d_backward(const Tensor& input, const Tensor& filters, int stride,
                     const Tensor& grad_out, Tensor* grad_input, Tensor* grad_filters,
                     Tensor* grad_bias);

}  // namespace gldepth::kernels
