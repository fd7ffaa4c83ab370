#include "gldepth/tape.hpp"

#include <cmath>

#include "gldepth/conv_kernels.hpp"

namespace gldepth {

namespace {

inline double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

Var Tape::leaf(Tensor value, bool requires_grad) {
  if (consumed_) throw UsageError("Tape: cannot extend a consumed tape");
  Node n;
  n.owned = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf_ref(const Tensor* value, bool requires_grad) {
  if (consumed_) throw UsageError("Tape: cannot extend a consumed tape");
  Node n;
  n.external = value;
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::push(Tensor value, bool requires_grad, std::function<void(Tape&, int)> back) {
  if (consumed_) throw UsageError("Tape: cannot extend a consumed tape");
  Node n;
  n.owned = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tape::Node& Tape::node(Var v) {
  if (!v.valid() || v.id >= static_cast<int>(nodes_.size()))
    throw UsageError("Tape: invalid variable handle");
  return nodes_[static_cast<size_t>(v.id)];
}

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || v.id >= static_cast<int>(nodes_.size()))
    throw UsageError("Tape: invalid variable handle");
  return nodes_[static_cast<size_t>(v.id)];
}

const Tensor& Tape::value(Var v) const { return node(v).val(); }

bool Tape::has_grad(Var v) const { return node(v).grad.numel() > 0; }

const Tensor& Tape::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.numel() == 0) throw UsageError("Tape::grad: no gradient flowed into this variable");
  return n.grad;
}

void Tape::add_grad_into(Var v, Tensor& acc, double sc) const {
  const Node& n = node(v);
  if (n.grad.numel() == 0) return;
  if (acc.numel() != n.grad.numel()) throw UsageError("Tape::add_grad_into: shape mismatch");
  for (long i = 0; i < acc.numel(); ++i) acc.data[i] += sc * n.grad.data[i];
}

Tensor& Tape::ensure_grad(int id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (n.grad.numel() == 0) n.grad = Tensor::zeros(n.val().shape);
  return n.grad;
}

Var Tape::conv2d(Var input, Var filters, Var bias, int stride) {
  const Tensor& in = value(input);
  const Tensor& f = value(filters);
  const Tensor& b = value(bias);
  if (in.ndim() != 3) throw ConfigError("conv2d: input must be {C,H,W}, got " + in.shape_str());
  Tensor out;
  kernels::conv2d_forward(in, f, b, stride, out);
  const bool rg = node(input).requires_grad || node(filters).requires_grad || node(bias).requires_grad;
  const int ii = input.id, fi = filters.id, bi = bias.id;
  return push(std::move(out), rg, [ii, fi, bi, stride](Tape& t, int self) {
    const Tensor& g = t.nodes_[static_cast<size_t>(self)].grad;
    Tensor* gi = t.nodes_[static_cast<size_t>(ii)].requires_grad ? &t.ensure_grad(ii) : nullptr;
    Tensor* gf = t.nodes_[static_cast<size_t>(fi)].requires_grad ? &t.ensure_grad(fi) : nullptr;
    Tensor* gb = t.nodes_[static_cast<size_t>(bi)].requires_grad ? &t.ensure_grad(bi) : nullptr;
    kernels::conv2d_backward(t.val(ii), t.val(fi), stride, g, gi, gf, gb);
  });
}

Var Tape::leaky_relu(Var x, double slope) {
  if (!(slope > 0.0 && slope < 1.0)) throw ConfigError("leaky_relu: slope must be in (0,1)");
  const Tensor& in = value(x);
  Tensor out = in;
  for (auto& v : out.data)
    if (v < 0.0) v *= slope;
  const int xi = x.id;
  return push(std::move(out), node(x).requires_grad, [xi, slope](Tape& t, int self) {
    const Tensor& g = t.nodes_[static_cast<size_t>(self)].grad;
    const Tensor& in = t.val(xi);
    Tensor& gi = t.ensure_grad(xi);
    for (long i = 0; i < g.numel(); ++i)
      gi.data[i] += g.data[i] * (in.data[i] > 0.0 ? 1.0 : slope);
  });
}

Var Tape::global_avg_pool(Var x) {
  const Tensor& in = value(x);
  if (in.ndim() != 3) throw ConfigError("global_avg_pool: input must be {C,H,W}");
  const int c = in.dim(0);
  const long hw = static_cast<long>(in.dim(1)) * in.dim(2);
  Tensor out({c});
  for (int i = 0; i < c; ++i) {
    double acc = 0.0;
    const double* p = &in.data[static_cast<size_t>(i) * hw];
    for (long j = 0; j < hw; ++j) acc += p[j];
    out(i) = acc / static_cast<double>(hw);
  }
  const int xi = x.id;
  return push(std::move(out), node(x).requires_grad, [xi, c, hw](Tape& t, int self) {
    const Tensor& g = t.nodes_[static_cast<size_t>(self)].grad;
    Tensor& gi = t.ensure_grad(xi);
    for (int i = 0; i < c; ++i) {
      const double gv = g(i) / static_cast<double>(hw);
      double* p = &gi.data[static_cast<size_t>(i) * hw];
      for (long j = 0; j < hw; ++j) p[j] += gv;
    }
  });
}

Var Tape::linear(Var x, Var weight, Var bias) {
  const Tensor& xv = value(x);
  const Tensor& wv = value(weight);
  const Tensor& bv = value(bias);
  if (wv.ndim() != 2 || xv.ndim() != 1 || bv.ndim() != 1 || wv.dim(1) != xv.dim(0) ||
      wv.dim(0) != bv.dim(0))
    throw ConfigError("linear: dimension mismatch W" + wv.shape_str() + " x" + xv.shape_str() +
                      " b" + bv.shape_str());
  const int m = wv.dim(0), nn = wv.dim(1);
  Tensor out({m});
  for (int i = 0; i < m; ++i) {
    double acc = bv(i);
    const double* wrow = &wv.data[static_cast<size_t>(i) * nn];
    for (int j = 0; j < nn; ++j) acc += wrow[j] * xv.data[static_cast<size_t>(j)];
    out(i) = acc;
  }
  const bool rg = node(x).requires_grad || node(weight).requires_grad || node(bias).requires_grad;
  const int xi = x.id, wi = weight.id, bi = bias.id;
  return push(std::move(out), rg, [xi, wi, bi, m, nn](Tape& t, int self) {
    const Tensor& g = t.nodes_[static_cast<size_t>(self)].grad;
    const Tensor& xv = t.val(xi);
    const Tensor& wv = t.val(wi);
    if (t.nodes_[static_cast<size_t>(bi)].requires_grad) {
      Tensor& gb = t.ensure_grad(bi);
      for (int i = 0; i < m; ++i) gb(i) += g(i);
    }
    if (t.nodes_[static_cast<size_t>(wi)].requires_grad) {
      Tensor& gw = t.ensure_grad(wi);
      for (int i = 0; i < m; ++i) {
        const double gi = g(i);
        double* row = &gw.data[static_cast<size_t>(i) * nn];
        for (int j = 0; j < nn; ++j) row[j] += gi * xv.data[static_cast<size_t>(j)];
      }
    }
    if (t.nodes_[static_cast<size_t>(xi)].requires_grad) {
      Tensor& gx = t.ensure_grad(xi);
      for (int i = 0; i < m; ++i) {
        const double gi = g(i);
        const double* row = &wv.data[static_cast<size_t>(i) * nn];
        for (int j = 0; j < nn; ++j) gx.data[static_cast<size_t>(j)] += gi * row[j];
      }
    }
  });
}

Var Tape::add(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (!av.same_shape(bv)) throw ConfigError("add: shape mismatch");
  Tensor out = av;
  for (long i = 0; i < out.numel(); ++i) out.data[i] += bv.data[i];
  const bool rg = node(a).requires_grad || node(b).requires_grad;
  const int ai = a.id, bi = b.id;
  return push(std::move(out), rg, [ai, bi](Tape& t, int self) {
    const Tensor& g = t.nodes_[static_cast<size_t>(self)].grad;
    if (t.nodes_[static_cast<size_t>(ai)].requires_grad) {
      Tensor& ga = t.ensure_grad(ai);
      for (long i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i];
    }
    if (t.nodes_[static_cast<size_t>(bi)].requires_grad) {
      Tensor& gb = t.ensure_grad(bi);
      for (long i = 0; i < g.numel(); ++i) gb.data[i] += g.data[i];
    }
  });
}

Var Tape::sub(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (!av.same_shape(bv)) throw ConfigError("sub: shape mismatch");
  Tensor out = av;
  for (long i = 0; i < out.numel(); ++i) out.data[i] -= bv.data[i];
  const bool rg = node(a).requires_grad || node(b).requires_grad;
  const int ai = a.id, bi = b.id;
  return push(std::move(out), rg, [ai, bi](Tape& t, int self) {
    const Tensor& g = t.nodes_[static_cast<size_t>(self)].grad;
    if (t.nodes_[static_cast<size_t>(ai)].requires_grad) {
      Tensor& ga = t.ensure_grad(ai);
      for (long i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i];
    }
    if (t.nodes_[static_cast<size_t>(bi)].requires_grad) {
      Tensor& gb = t.ensure_grad(bi);
      for (long i = 0; i < g.numel(); ++i) gb.data[i] -= g.data[i];
    }
  });
}

Var Tape::mul(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (!av.same_shape(bv)) throw ConfigError("mul: shape mismatch");
  Tensor out = av;
  for (long i = 0; i < out.numel(); ++i) out.data[i] *= bv.data[i];
  const bool rg = node(a).requires_grad || node(b).requires_grad;
  const int ai = a.id, bi = b.id;
  return push(std::move(out), rg, [ai, bi](Tape& t, int self) {
    const Tensor& g = t.nodes_[static_cast<size_t>(self)].grad;
    const Tensor& av = t.val(ai);
    const Tensor& bv = t.val(bi);
    if (t.nodes_[static_cast<size_t>(ai)].requires_grad) {
      Tensor& ga = t.ensure_grad(ai);
      for (long i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i] * bv.data[i];
    }
    if (t.nodes_[static_cast<size_t>(bi)].requires_grad) {
      Tensor& gb = t.ensure_grad(bi);
      for (long i = 0; i < g.numel(); ++i) gb.data[i] += g.data[i] * av.data[i];
    }
  });
}

Var Tape::scale(Var a, double c) {
  Tensor out = value(a);
  for (auto& v : out.data) v *= c;
  const int ai = a.id;
  return push(std::move(out), node(a).requires_grad, [ai, c](Tape& t, int self) {
    const Tensor& g = t.nodes_[static_cast<size_t>(self)].grad;
    Tensor& ga = t.ensure_grad(ai);
    for (long i = 0; i < g.numel(); ++i) ga.data[i] += c * g.data[i];
  });
}

Var Tape::sum(Var a) {
  const Tensor& av = value(a);
  double acc = 0.0;
  for (double v : av.data) acc += v;
  const int ai = a.id;
  return push(Tensor::scalar(acc), node(a).requires_grad, [ai](Tape& t, int self) {
    const double g = t.nodes_[static_cast<size_t>(self)].grad.data[0];
    Tensor& ga = t.ensure_grad(ai);
    for (long i = 0; i < ga.numel(); ++i) ga.data[i] += g;
  });
}

Var Tape::slice(Var a, long offset, long count) {
  const Tensor& av = value(a);
  if (offset < 0 || count <= 0 || offset + count > av.numel())
    throw ConfigError("slice: range out of bounds");
  Tensor out({static_cast<int>(count)});
  for (long i = 0; i < count; ++i) out.data[static_cast<size_t>(i)] = av.data[static_cast<size_t>(offset + i)];
  const int ai = a.id;
  return push(std::move(out), node(a).requires_grad, [ai, offset, count](Tape& t, int self) {
    const Tensor& g = t.nodes_[static_cast<size_t>(self)].grad;
    Tensor& ga = t.ensure_grad(ai);
    for (long i = 0; i < count; ++i) ga.data[static_cast<size_t>(offset + i)] += g.data[static_cast<size_t>(i)];
  });
}

Var Tape::reshape(Var a, std::vector<int> shape) {
  const Tensor& av = value(a);
  if (Tensor::numel_of(shape) != av.numel()) throw ConfigError("reshape: element count mismatch");
  Tensor out;
  out.shape = std::move(shape);
  out.data = av.data;
  const int ai = a.id;
  return push(std::move(out), node(a).requires_grad, [ai](Tape& t, int self) {
    const Tensor& g = t.nodes_[static_cast<size_t>(self)].grad;
    Tensor& ga = t.ensure_grad(ai);
    for (long i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i];
  });
}

Var Tape::concat_channels(const std::vector<Var>& parts) {
  if (parts.empty()) throw ConfigError("concat_channels: empty input list");
  const Tensor& first = value(parts[0]);
  if (first.ndim() != 3) throw ConfigError("concat_channels: inputs must be {C,H,W}");
  const int h = first.dim(1), w = first.dim(2);
  int c_total = 0;
  bool rg = false;
  for (Var p : parts) {
    const Tensor& pv = value(p);
    if (pv.ndim() != 3 || pv.dim(1) != h || pv.dim(2) != w)
      throw ConfigError("concat_channels: spatial shape mismatch");
    c_total += pv.dim(0);
    rg = rg || node(p).requires_grad;
  }
  Tensor out({c_total, h, w});
  size_t pos = 0;
  for (Var p : parts) {
    const Tensor& pv = value(p);
    std::copy(pv.data.begin(), pv.data.end(), out.data.begin() + static_cast<long>(pos));
    pos += pv.data.size();
  }
  std::vector<int> ids;
  ids.reserve(parts.size());
  for (Var p : parts) ids.push_back(p.id);
  return push(std::move(out), rg, [ids](Tape& t, int self) {
    const Tensor& g = t.nodes_[static_cast<size_t>(self)].grad;
    size_t pos = 0;
    for (int id : ids) {
      const long n = t.val(id).numel();
      if (t.nodes_[static_cast<size_t>(id)].requires_grad) {
        Tensor& gp = t.ensure_grad(id);
        for (long i = 0; i < n; ++i) gp.data[static_cast<size_t>(i)] += g.data[pos + static_cast<size_t>(i)];
      }
      pos += static_cast<size_t>(n);
    }
  });
}

Var Tape::upsample_nearest2(Var a) {
  const Tensor& av = value(a);
  if (av.ndim() != 3) throw ConfigError("upsample_nearest2: input must be {C,H,W}");
  const int c = av.dim(0), h = av.dim(1), w = av.dim(2);
  Tensor out({c, 2 * h, 2 * w});
  for (int i = 0; i < c; ++i)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double v = av(i, y, x);
        out(i, 2 * y, 2 * x) = v;
        out(i, 2 * y, 2 * x + 1) = v;
        out(i, 2 * y + 1, 2 * x) = v;
        out(i, 2 * y + 1, 2 * x + 1) = v;
      }
  const int ai = a.id;
  return push(std::move(out), node(a).requires_grad, [ai, c, h, w](Tape& t, int self) {
    const Tensor& g = t.nodes_[static_cast<size_t>(self)].grad;
    Tensor& ga = t.ensure_grad(ai);
    for (int i = 0; i < c; ++i)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          ga.data[(static_cast<size_t>(i) * h + y) * w + x] +=
              g(i, 2 * y, 2 * x) + g(i, 2 * y, 2 * x + 1) + g(i, 2 * y + 1, 2 * x) +
              g(i, 2 * y + 1, 2 * x + 1);
  });
}

Var Tape::sparse_l1(Var zmap, const SparseLabelSet& labels) {
  const Tensor& zv = value(zmap);
  if (zv.ndim() != 3 || zv.dim(0) != 1)
    throw ConfigError("sparse_l1: prediction must be {1,H,W}");
  if (labels.empty()) throw UsageError("sparse_l1: empty label set");
  const int h = zv.dim(1), w = zv.dim(2);
  double acc = 0.0;
  for (const auto& p : labels.pixels) {
    if (p.x < 0 || p.x >= w || p.y < 0 || p.y >= h)
      throw ConfigError("sparse_l1: label pixel out of bounds");
    acc += std::abs(zv(0, p.y, p.x) - p.z);
  }
  const double inv_n = 1.0 / static_cast<double>(labels.count());
  const int zi = zmap.id;
  // Copy the pixels so the closure does not depend on the caller's lifetime.
  std::vector<LabelPixel> px = labels.pixels;
  return push(Tensor::scalar(acc * inv_n), node(zmap).requires_grad,
              [zi, px = std::move(px), inv_n, w](Tape& t, int self) {
                const double g = t.nodes_[static_cast<size_t>(self)].grad.data[0];
                const Tensor& zv = t.val(zi);
                Tensor& gz = t.ensure_grad(zi);
                for (const auto& p : px) {
                  const size_t idx = static_cast<size_t>(p.y) * w + p.x;
                  gz.data[idx] += g * inv_n * sign0(zv.data[idx] - p.z);
                }
              });
}

Var Tape::smoothness(Var zmap, const Tensor& image) {
  const Tensor& zv = value(zmap);
  if (zv.ndim() != 3 || zv.dim(0) != 1)
    throw ConfigError("smoothness: prediction must be {1,H,W}");
  if (image.ndim() != 3 || image.dim(1) != zv.dim(1) || image.dim(2) != zv.dim(2))
    throw ConfigError("smoothness: image/prediction spatial shape mismatch");
  const int h = zv.dim(1), w = zv.dim(2);
  const int ch = image.dim(0);

  // Edge weights from forward-differenced image gradients, averaged over
  // channels; the last row/column uses the zero-gradient convention.
  Tensor wx({h, w}), wy({h, w});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double gx = 0.0, gy = 0.0;
      for (int c = 0; c < ch; ++c) {
        if (x + 1 < w) gx += std::abs(image(c, y, x + 1) - image(c, y, x));
        if (y + 1 < h) gy += std::abs(image(c, y + 1, x) - image(c, y, x));
      }
      wx(y, x) = (x + 1 < w) ? std::exp(-gx / ch) : 0.0;
      wy(y, x) = (y + 1 < h) ? std::exp(-gy / ch) : 0.0;
    }

  const double inv_n = 1.0 / (static_cast<double>(h) * w);
  double acc = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (x + 1 < w) acc += std::abs(zv(0, y, x + 1) - zv(0, y, x)) * wx(y, x);
      if (y + 1 < h) acc += std::abs(zv(0, y + 1, x) - zv(0, y, x)) * wy(y, x);
    }

  const int zi = zmap.id;
  return push(Tensor::scalar(acc * inv_n), node(zmap).requires_grad,
              [zi, wx = std::move(wx), wy = std::move(wy), inv_n, h, w](Tape& t, int self) {
                const double g = t.nodes_[static_cast<size_t>(self)].grad.data[0];
                const Tensor& zv = t.val(zi);
                Tensor& gz = t.ensure_grad(zi);
                for (int y = 0; y < h; ++y)
                  for (int x = 0; x < w; ++x) {
                    const size_t i = static_cast<size_t>(y) * w + x;
                    if (x + 1 < w) {
                      const double s = sign0(zv.data[i + 1] - zv.data[i]) * wx(y, x) * inv_n * g;
                      gz.data[i + 1] += s;
                      gz.data[i] -= s;
                    }
                    if (y + 1 < h) {
                      const double s = sign0(zv.data[i + w] - zv.data[i]) * wy(y, x) * inv_n * g;
                      gz.data[i + w] += s;
                      gz.data[i] -= s;
                    }
                  }
              });
}

Var Tape::l1_to(Var pred, const Tensor& target) {
  const Tensor& pv = value(pred);
  if (pv.numel() != target.numel()) throw ConfigError("l1_to: shape mismatch");
  double acc = 0.0;
  for (long i = 0; i < pv.numel(); ++i) acc += std::abs(pv.data[i] - target.data[i]);
  const double inv_n = 1.0 / static_cast<double>(pv.numel());
  const int pi = pred.id;
  Tensor tgt = target;
  return push(Tensor::scalar(acc * inv_n), node(pred).requires_grad,
              [pi, tgt = std::move(tgt), inv_n](Tape& t, int self) {
                const double g = t.nodes_[static_cast<size_t>(self)].grad.data[0];
                const Tensor& pv = t.val(pi);
                Tensor& gp = t.ensure_grad(pi);
                for (long i = 0; i < pv.numel(); ++i)
                  gp.data[i] += g * inv_n * sign0(pv.data[i] - tgt.data[i]);
              });
}

void Tape::backward(Var loss) {
  if (consumed_) throw UsageError("Tape::backward: tape already consumed");
  const Tensor& lv = value(loss);
  if (lv.numel() != 1) throw UsageError("Tape::backward: loss must be scalar");
  if (!std::isfinite(lv.data[0])) throw NumericError("Tape::backward: non-finite loss value");
  ensure_grad(loss.id).data[0] = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (n.back && n.grad.numel() > 0) n.back(*this, i);
    n.back = nullptr;
  }
  consumed_ = true;
}

void Tape::reset() {
  nodes_.clear();
  consumed_ = false;
}

}  // namespace gldepth
