#pragma once

#include <functional>
#include <vector>

#include "gldepth/labels.hpp"
#include "gldepth/tensor.hpp"

namespace gldepth {

// Reverse-mode differentiation tape. Operations append nodes in topological
// order (parents always precede children); backward() walks the record once
// in reverse, accumulating gradients by summation at fan-in nodes, then
// clears the operation record. A tape is single-use: build, backward, read
// gradients, discard (or reset()).
class Tape {
 public:
  struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaves. leaf() stores a copy; leaf_ref() borrows external storage that
  // must outlive the tape (used for model parameters and input rasters).
  Var leaf(Tensor value, bool requires_grad = true);
  Var leaf_ref(const Tensor* value, bool requires_grad = true);

  const Tensor& value(Var v) const;
  bool has_grad(Var v) const;
  const Tensor& grad(Var v) const;
  // acc += scale * grad(v); no-op if no gradient flowed into v.
  void add_grad_into(Var v, Tensor& acc, double scale) const;

  // Core ops.
  Var conv2d(Var input, Var filters, Var bias, int stride);
  Var leaky_relu(Var x, double slope);
  Var global_avg_pool(Var x);
  Var linear(Var x, Var weight, Var bias);

  // Elementwise / structural.
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double c);
  Var sum(Var a);
  Var slice(Var a, long offset, long count);
  Var reshape(Var a, std::vector<int> shape);
  Var concat_channels(const std::vector<Var>& parts);
  Var upsample_nearest2(Var a);

  // Loss terms. Sub-gradient of |x| at 0 is 0.
  Var sparse_l1(Var zmap, const SparseLabelSet& labels);
  Var smoothness(Var zmap, const Tensor& image);
  Var l1_to(Var pred, const Tensor& target);

  // Populates gradients of all leaves reachable from `loss`, then clears the
  // operation record. Throws UsageError on non-scalar loss or reuse.
  void backward(Var loss);
  void reset();

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;  // set for leaf_ref nodes
    Tensor grad;
    bool requires_grad = false;
    std::function<void(Tape&, int)> back;

    const Tensor& val() const { return external ? *external : owned; }
  };

  Var push(Tensor value, bool requires_grad, std::function<void(Tape&, int)> back);
  Node& node(Var v);
  const Node& node(Var v) const;
  Tensor& ensure_grad(int id);
  const Tensor& val(int id) const { return nodes_[static_cast<size_t>(id)].val(); }

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

using Var = Tape::Var;

}  // namespace gldepth
