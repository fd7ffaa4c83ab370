#pragma once

#include "gldepth/labels.hpp"
#include "gldepth/tape.hpp"

namespace gldepth {

struct LossWeights {
  double lambda_p = 5.0;  // depth term
  double lambda_s = 2.0;  // smoothness term

  void validate() const {
    if (lambda_p < 0 || lambda_s < 0) throw ConfigError("LossWeights: weights must be nonnegative");
  }
};

// L1 on inverse depth, averaged over the labeled subset.
inline Var loss_depth(Tape& t, Var zmap, const SparseLabelSet& labels) {
  return t.sparse_l1(zmap, labels);
}

// Edge-aware first-order smoothness of the inverse-depth map, averaged over
// the image plane.
inline Var loss_smooth(Tape& t, Var zmap, const Tensor& image1) {
  return t.smoothness(zmap, image1);
}

inline Var loss_total(Tape& t, Var zmap, const SparseLabelSet& labels, const Tensor& image1,
                      const LossWeights& w) {
  return t.add(t.scale(loss_depth(t, zmap, labels), w.lambda_p),
               t.scale(loss_smooth(t, zmap, image1), w.lambda_s));
}

}  // namespace gldepth
