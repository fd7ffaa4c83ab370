#pragma once

#include <string>
#include <vector>

#include "gldepth/tensor.hpp"

namespace gldepth {

// Named trainable tensor plus its gradient accumulator.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
};

struct ParamSet {
  std::vector<Param> items;

  Param& add(std::string name, std::vector<int> shape) {
    items.push_back({std::move(name), Tensor::zeros(shape), Tensor::zeros(shape)});
    return items.back();
  }

  Param& operator[](size_t i) { return items[i]; }
  const Param& operator[](size_t i) const { return items[i]; }
  size_t size() const { return items.size(); }

  Param* find(const std::string& name) {
    for (auto& p : items)
      if (p.name == name) return &p;
    return nullptr;
  }

  void zero_grad() {
    for (auto& p : items) p.grad.fill(0.0);
  }

  long total_count() const {
    long n = 0;
    for (const auto& p : items) n += p.value.numel();
    return n;
  }
};

}  // namespace gldepth
