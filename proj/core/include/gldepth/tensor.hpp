#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "gldepth/errors.hpp"

namespace gldepth {

// Dense row-major array of doubles. Conventions used throughout:
//   feature maps {C,H,W}, filter banks {O,C,k,k}, vectors {n}, scalars {1}.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(numel_of(shape)), 0.0);
  }

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }

  static Tensor full(std::vector<int> s, double v) {
    Tensor t(std::move(s));
    for (auto& x : t.data) x = v;
    return t;
  }

  static Tensor scalar(double v) {
    Tensor t({1});
    t.data[0] = v;
    return t;
  }

  static Tensor from(std::vector<int> s, std::vector<double> values) {
    if (numel_of(s) != static_cast<long>(values.size()))
      throw ConfigError("Tensor::from: shape does not match value count");
    Tensor t;
    t.shape = std::move(s);
    t.data = std::move(values);
    return t;
  }

  long numel() const { return static_cast<long>(data.size()); }

  static long numel_of(const std::vector<int>& s) {
    long n = 1;
    for (int d : s) {
      if (d <= 0) throw ConfigError("Tensor: non-positive extent in shape");
      n *= d;
    }
    return n;
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  int dim(int i) const { return shape[static_cast<size_t>(i)]; }
  int ndim() const { return static_cast<int>(shape.size()); }

  double& operator()(int i) { return data[static_cast<size_t>(i)]; }
  double operator()(int i) const { return data[static_cast<size_t>(i)]; }

  double& operator()(int i, int j) { return data[static_cast<size_t>(i) * dim(1) + j]; }
  double operator()(int i, int j) const { return data[static_cast<size_t>(i) * dim(1) + j]; }

  double& operator()(int c, int y, int x) {
    return data[(static_cast<size_t>(c) * dim(1) + y) * dim(2) + x];
  }
  double operator()(int c, int y, int x) const {
    return data[(static_cast<size_t>(c) * dim(1) + y) * dim(2) + x];
  }

  double& operator()(int o, int c, int y, int x) {
    return data[((static_cast<size_t>(o) * dim(1) + c) * dim(2) + y) * dim(3) + x];
  }
  double operator()(int o, int c, int y, int x) const {
    return data[((static_cast<size_t>(o) * dim(1) + c) * dim(2) + y) * dim(3) + x];
  }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  void fill(double v) {
    for (auto& x : data) x = v;
  }

  std::string shape_str() const {
    std::string s = "{";
    for (size_t i = 0; i < shape.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape[i]);
    }
    return s + "}";
  }
};

}  // namespace gldepth
