#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ramp/events.hpp"
#include "ramp/geometry.hpp"
#include "ramp/image.hpp"

namespace ramp {

enum class TrajectoryKind { kStatic, kConstantVelocity, kCircular, kSplineWaypoints };

// Synthetic world: a seeded point cloud inside a box, a closed-form camera
// trajectory, Gaussian-splat intensity frames, and exact projected tracks.
struct SceneSpec {
  std::uint64_t seed = 1;
  int n_points = 500;
  Vec3 box_min{-2.0, -1.5, 3.0};
  Vec3 box_max{2.0, 1.5, 8.0};
  TrajectoryKind kind = TrajectoryKind::kConstantVelocity;
  int n_frames = 200;
  double frame_rate = 30.0;
  Intrinsics intrinsics{260.0, 260.0, 160.0, 120.0, 320, 240};
  Vec3 linear_velocity{0.25, 0.0, 0.0};   // body-frame m/s (constant twist)
  Vec3 angular_velocity{0.0, 0.0, 0.0};   // body-frame rad/s
  double circle_radius = 1.0;
  double circle_rate = 0.5;               // rad/s around the world z axis
  std::vector<std::pair<double, Vec3>> waypoints;  // (time, camera center)
  double splat_sigma = 1.5;               // pixels
  double splat_peak = 0.8;
  double background = 0.1;
  double min_visibility = 0.8;            // per-point fraction of frames
};

struct Scene {
  std::vector<Vec3> points;
  std::vector<Se3Pose> poses;       // camera-to-world, one per frame
  std::vector<double> timestamps;   // frame i at i / frame_rate
};

// Deterministic scene sampling; retries up to 100 derived seeds until every
// point projects inside the image in at least min_visibility of the frames.
Scene generate_scene(const SceneSpec& spec);

// Exact projected center of one world point, or nothing when it falls
// behind the camera or outside the image.
struct PointProjection {
  Vec2 pixel{0, 0};
  double depth = 0.0;
};
// Independent pinhole math on purpose: tests cross-check these tracks
// against the patch projection path.
std::optional<PointProjection> project_point(const Se3Pose& pose, const Intrinsics& intrinsics,
                                             const Vec3& point);

struct TrackPoint {
  int frame = 0;
  int point_id = 0;
  double x = 0.0, y = 0.0;
  double inv_depth = 0.0;
};

struct RenderResult {
  std::vector<ImageF32> frames;     // intensities in [0, 1]
  std::vector<TrackPoint> tracks;   // every visible (frame, point) pair
};

RenderResult render_frames(const Scene& scene, const SceneSpec& spec);

void write_tracks_csv(const std::string& path, const std::vector<TrackPoint>& tracks);
std::vector<TrackPoint> read_tracks_csv(const std::string& path);

// Writes frames/frame_%06d.pgm, frames.txt (timestamp + relative path per
// line), events.evt, gt.tum, and tracks.csv under out_dir.
void emit_dataset(const std::string& out_dir, const Scene& scene, const RenderResult& rendered,
                  const EventStream& events);

// generate + render + synthesize events + emit, returning the scene.
Scene build_dataset(const SceneSpec& spec, const EgmConfig& egm, const std::string& out_dir);

}  // namespace ramp
