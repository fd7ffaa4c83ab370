#pragma once

#include <vector>

namespace gldepth {

// One supervised pixel: integer coordinates and ground-truth inverse depth.
struct LabelPixel {
  int x = 0;
  int y = 0;
  double z = 0.0;
};

struct SparseLabelSet {
  std::vector<LabelPixel> pixels;

  size_t count() const { return pixels.size(); }
  bool empty() const { return pixels.empty(); }
};

}  // namespace gldepth
