#include "ramp/correction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ramp/error.hpp"

namespace ramp {
namespace {

// Bilinear read of one channel plane with edge clamping.
float sample_plane(const float* plane, int h, int w, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0, fy = y - y0;
  const double v00 = plane[static_cast<std::size_t>(y0) * w + x0];
  const double v01 = plane[static_cast<std::size_t>(y0) * w + x1];
  const double v10 = plane[static_cast<std::size_t>(y1) * w + x0];
  const double v11 = plane[static_cast<std::size_t>(y1) * w + x1];
  return static_cast<float>((1 - fy) * ((1 - fx) * v00 + fx * v01) +
                            fy * ((1 - fx) * v10 + fx * v11));
}

}  // namespace

CorrelationGrid correlation_lookup(const Tensor3& m_source, const Tensor3& m_target,
                                   const Patch& patch, const Vec2& projected_center,
                                   int radius) {
  if (radius < 1) throw Error("correlation_lookup: radius must be >= 1");
  if (m_source.c != m_target.c)
    throw Error("correlation_lookup: feature channel mismatch");
  const int side = 2 * radius + 1;
  CorrelationGrid grid;
  grid.radius = radius;
  grid.scores.assign(static_cast<std::size_t>(side) * side, 0.0f);

  const double cx = projected_center.x() / kFeatureScale;
  const double cy = projected_center.y() / kFeatureScale;
  if (cx < radius || cx > m_target.w - 1 - radius || cy < radius ||
      cy > m_target.h - 1 - radius) {
    grid.masked = true;
    return grid;
  }

  const Vec2 src = patch.center();
  const double sx = src.x() / kFeatureScale;
  const double sy = src.y() / kFeatureScale;

  std::vector<float> source_feature(m_source.c);
  for (int ci = 0; ci < m_source.c; ++ci)
    source_feature[ci] = sample_plane(m_source.channel(ci), m_source.h, m_source.w, sx, sy);

  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      double score = 0;
      for (int ci = 0; ci < m_target.c; ++ci) {
        score += static_cast<double>(source_feature[ci]) *
                 sample_plane(m_target.channel(ci), m_target.h, m_target.w, cx + dx,
                              cy + dy);
      }
      grid.scores[static_cast<std::size_t>(dy + radius) * side + (dx + radius)] =
          static_cast<float>(score);
    }
  }
  return grid;
}

CorrectionEstimate estimate_softargmax(const CorrelationGrid& grid, double temperature) {
  if (!(temperature > 0)) throw Error("estimate_softargmax: temperature must be positive");
  CorrectionEstimate out;
  if (grid.masked) {
    out.delta = Vec2::Zero();
    out.sigma = Vec2::Zero();
    out.masked = true;
    return out;
  }

  const int r = grid.radius;
  double max_score = -std::numeric_limits<double>::infinity();
  for (float s : grid.scores) max_score = std::max(max_score, static_cast<double>(s));

  double wsum = 0, mx = 0, my = 0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const double w = std::exp((grid.at(dy, dx) - max_score) / temperature);
      wsum += w;
      mx += w * dx;
      my += w * dy;
    }
  }
  mx /= wsum;
  my /= wsum;

  double vx = 0, vy = 0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const double w = std::exp((grid.at(dy, dx) - max_score) / temperature) / wsum;
      vx += w * (dx - mx) * (dx - mx);
      vy += w * (dy - my) * (dy - my);
    }
  }

  out.delta = Vec2(kFeatureScale * mx, kFeatureScale * my);
  out.sigma = Vec2(std::min(1.0 / (1e-3 + vx), kSigmaMax),
                   std::min(1.0 / (1e-3 + vy), kSigmaMax));
  return out;
}

CorrectionEstimate estimate_oracle(const Vec2& gt_track, const Vec2& projected_center,
                                   double noise_std, Rng& rng) {
  CorrectionEstimate out;
  out.delta = gt_track - projected_center;
  if (noise_std > 0) {
    out.delta.x() += rng.gaussian(0.0, noise_std);
    out.delta.y() += rng.gaussian(0.0, noise_std);
  }
  out.sigma = Vec2(1, 1);
  return out;
}

}  // namespace ramp
