#pragma once

#include <cstddef>
#include <vector>

#include "ramp/error.hpp"

namespace ramp {

// Single-channel float image, row-major.
struct ImageF32 {
  int width = 0, height = 0;
  std::vector<float> v;

  ImageF32() = default;
  ImageF32(int width_, int height_, float fill = 0.0f)
      : width(width_), height(height_),
        v(static_cast<std::size_t>(width_) * height_, fill) {
    if (width_ <= 0 || height_ <= 0) throw Error("non-positive image dimension");
  }

  float& at(int y, int x) { return v[static_cast<std::size_t>(y) * width + x]; }
  float at(int y, int x) const { return v[static_cast<std::size_t>(y) * width + x]; }
};

}  // namespace ramp
