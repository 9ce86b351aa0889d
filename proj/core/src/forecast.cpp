#include "ramp/forecast.hpp"

#include <algorithm>
#include <map>
#include <string>
#include <utility>

#include "ramp/error.hpp"

namespace ramp {

std::vector<PatchTrack> collect_patch_tracks(const PatchGraph& graph, const ForecastConfig& cfg) {
  std::vector<PatchTrack> tracks;
  if (graph.frames.empty()) return tracks;
  const int window_start = graph.newest_frame_index() - (cfg.history_frames - 1);

  struct Obs {
    int frame_index;
    Vec2 point;
    Vec2 sigma;
  };
  std::map<int, std::vector<Obs>> by_patch;
  for (const PatchEdge& e : graph.edges) {
    if (e.masked || e.frame_index < window_start) continue;
    by_patch[e.patch_id].push_back({e.frame_index, e.center + e.delta, e.sigma});
  }

  for (auto& [patch_id, obs] : by_patch) {
    if (obs.size() < static_cast<std::size_t>(cfg.min_knots)) continue;
    std::sort(obs.begin(), obs.end(),
              [](const Obs& a, const Obs& b) { return a.frame_index < b.frame_index; });
    PatchTrack track;
    track.patch_id = patch_id;
    for (const Obs& o : obs) {
      const FrameRecord* frame = graph.frame(o.frame_index);
      if (!frame) throw Error("forecast: edge references missing frame " + std::to_string(o.frame_index));
      track.times.push_back(frame->timestamp);
      track.points.push_back(o.point);
    }
    track.latest_sigma = obs.back().sigma;
    tracks.push_back(std::move(track));
  }
  return tracks;
}

Se3Pose constant_velocity_pose(const PatchGraph& graph, double t_target) {
  if (graph.frames.empty()) return {};
  if (graph.frames.size() == 1) return graph.frames.back().pose;
  const FrameRecord& a = graph.frames[graph.frames.size() - 2];
  const FrameRecord& b = graph.frames.back();
  const double dt = b.timestamp - a.timestamp;
  if (dt <= 0.0) return b.pose;
  const double alpha = (t_target - b.timestamp) / dt;
  const Vec6 xi = (a.pose.inverse() * b.pose).log();
  return b.pose.retract(alpha * xi);
}

Se3Pose solve_forecast_ba(const PatchGraph& graph, const Intrinsics& intrinsics,
                          const std::vector<ForecastTarget>& targets, const Se3Pose& init,
                          const LmConfig& lm, LmReport* report) {
  if (graph.frames.empty()) throw Error("forecast: empty graph");
  const int oldest = graph.oldest_frame_index();

  BaProblem problem;
  problem.intrinsics = intrinsics;
  problem.optimize_depths = false;
  for (const FrameRecord& f : graph.frames) problem.poses.push_back(f.pose);
  problem.n_fixed = static_cast<int>(problem.poses.size());
  problem.poses.push_back(init);
  const int forecast_frame = problem.n_fixed;

  for (const ForecastTarget& target : targets) {
    const Patch* patch = graph.patch(target.patch_id);
    if (!patch) throw Error("forecast: unknown patch id " + std::to_string(target.patch_id));
    Patch local = *patch;
    local.frame_index -= oldest;
    const int patch_slot = static_cast<int>(problem.patches.size());
    problem.patches.push_back(std::move(local));

    BaEdge edge;
    edge.patch = patch_slot;
    edge.frame = forecast_frame;
    edge.center = target.center;
    edge.sigma = target.sigma;
    problem.edges.push_back(edge);
  }

  LmReport local_report = lm_solve(problem, lm);
  if (report) *report = std::move(local_report);
  return problem.poses.back();
}

std::optional<Se3Pose> forecast_pose(const PatchGraph& graph, const Intrinsics& intrinsics,
                                     double t_target, const ForecastConfig& cfg,
                                     LmReport* report) {
  const std::vector<PatchTrack> tracks = collect_patch_tracks(graph, cfg);
  if (tracks.size() < static_cast<std::size_t>(cfg.min_tracks)) return std::nullopt;

  std::vector<ForecastTarget> targets;
  targets.reserve(tracks.size());
  for (const PatchTrack& track : tracks) {
    const TrackSpline spline = fit_track_spline(track.times, track.points);
    ForecastTarget target;
    target.patch_id = track.patch_id;
    target.center = cfg.extrapolation == ExtrapolationMode::kSmoothStop
                        ? extrapolate(spline, t_target)
                        : extrapolate_tail(spline, t_target);
    target.sigma = track.latest_sigma;
    targets.push_back(target);
  }

  const Se3Pose init = constant_velocity_pose(graph, t_target);
  return solve_forecast_ba(graph, intrinsics, targets, init, cfg.lm, report);
}

}  // namespace ramp
