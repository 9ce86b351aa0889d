#pragma once

#include <optional>
#include <vector>

#include "ramp/ba.hpp"
#include "ramp/geometry.hpp"
#include "ramp/patches.hpp"
#include "ramp/spline.hpp"

namespace ramp {

// How a fitted track is pushed past its last knot: extend the final spline
// piece, or rebuild a cubic that comes to rest at the target time.
enum class ExtrapolationMode { kSplineTail, kSmoothStop };

struct ForecastConfig {
  int history_frames = 11;
  int min_knots = 4;
  int min_tracks = 6;
  ExtrapolationMode extrapolation = ExtrapolationMode::kSplineTail;
  LmConfig lm{.steps = 8};
};

// Knot sequence for one live patch: projected center + correction at each
// unmasked observation inside the trailing history window.
struct PatchTrack {
  int patch_id = 0;
  std::vector<double> times;
  std::vector<Vec2> points;
  Vec2 latest_sigma{1, 1};
};

std::vector<PatchTrack> collect_patch_tracks(const PatchGraph& graph, const ForecastConfig& cfg);

// Predicted center of one track at the forecast time.
struct ForecastTarget {
  int patch_id = 0;
  Vec2 center{0, 0};
  Vec2 sigma{1, 1};
};

// Constant-velocity extrapolation of the last two window poses to t_target
// (time-scaled twist). Falls back to the last pose for a single frame.
Se3Pose constant_velocity_pose(const PatchGraph& graph, double t_target);

// Single-pose bundle adjustment: every window pose and every depth frozen,
// only the pose at t_target free, minimizing the sigma-weighted distance
// between each target center and the patch reprojection. Leaves the graph
// untouched.
Se3Pose solve_forecast_ba(const PatchGraph& graph, const Intrinsics& intrinsics,
                          const std::vector<ForecastTarget>& targets, const Se3Pose& init,
                          const LmConfig& lm, LmReport* report = nullptr);

// Full forecast: spline-fit the patch tracks, extrapolate them to t_target,
// run the single-pose BA from a constant-velocity initialization. Empty when
// fewer than cfg.min_tracks patches carry cfg.min_knots observations; the
// caller then falls back to constant-velocity initialization.
std::optional<Se3Pose> forecast_pose(const PatchGraph& graph, const Intrinsics& intrinsics,
                                     double t_target, const ForecastConfig& cfg,
                                     LmReport* report = nullptr);

}  // namespace ramp
