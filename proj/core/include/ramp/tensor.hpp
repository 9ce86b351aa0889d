#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "ramp/error.hpp"

namespace ramp {

// Dense channel-major float volume (C x H x W), the working currency of the
// encoder. Row-major within a channel.
struct Tensor3 {
  int c = 0, h = 0, w = 0;
  std::vector<float> v;

  Tensor3() = default;
  Tensor3(int c_, int h_, int w_)
      : c(c_), h(h_), w(w_),
        v(static_cast<std::size_t>(c_) * h_ * w_, 0.0f) {
    if (c_ < 0 || h_ < 0 || w_ < 0) throw Error("negative tensor dimension");
  }

  float& at(int ci, int y, int x) {
    return v[(static_cast<std::size_t>(ci) * h + y) * w + x];
  }
  float at(int ci, int y, int x) const {
    return v[(static_cast<std::size_t>(ci) * h + y) * w + x];
  }

  float* channel(int ci) { return v.data() + static_cast<std::size_t>(ci) * h * w; }
  const float* channel(int ci) const {
    return v.data() + static_cast<std::size_t>(ci) * h * w;
  }

  std::size_t size() const { return v.size(); }
  bool same_shape(const Tensor3& o) const { return c == o.c && h == o.h && w == o.w; }
  void fill(float value) { std::fill(v.begin(), v.end(), value); }
};

}  // namespace ramp
