#pragma once

#include <vector>

#include "ramp/geometry.hpp"
#include "ramp/rng.hpp"
#include "ramp/tensor.hpp"

namespace ramp {

inline constexpr double kSigmaMax = 100.0;
inline constexpr int kFeatureScale = 4;  // feature maps live at 1/4 image resolution

// Per-edge correction: a pixel offset to add to the projected center and a
// diagonal confidence weight (inverse-variance style, in [0, kSigmaMax];
// zero masks the edge out of the solver).
struct CorrectionEstimate {
  Vec2 delta{0, 0};
  Vec2 sigma{1, 1};
  bool masked = false;
};

// Feature dot products at integer offsets around a projected center.
struct CorrelationGrid {
  int radius = 3;
  std::vector<float> scores;  // (2R+1)^2, row-major over (dy, dx)
  bool masked = false;

  float at(int dy, int dx) const {
    const int side = 2 * radius + 1;
    return scores[static_cast<std::size_t>(dy + radius) * side + (dx + radius)];
  }
};

// score(o) = < m_source at the patch's source pixel, m_target bilinearly
// sampled at projected_center/4 + o > for every integer offset o in [-R, R]^2.
// Centers outside the R-margin of the target map return zeros with the
// masked flag set.
CorrelationGrid correlation_lookup(const Tensor3& m_source, const Tensor3& m_target,
                                   const Patch& patch, const Vec2& projected_center,
                                   int radius);

// Soft-argmax over the grid: softmax(scores / temperature) weights the
// offsets; delta is the weighted mean offset scaled back to full resolution,
// sigma the reciprocal spread per axis.
CorrectionEstimate estimate_softargmax(const CorrelationGrid& grid, double temperature);

// Ground-truth correction for synthetic runs.
CorrectionEstimate estimate_oracle(const Vec2& gt_track, const Vec2& projected_center,
                                   double noise_std, Rng& rng);

}  // namespace ramp
