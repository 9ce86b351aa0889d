#include "ramp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ramp/error.hpp"
#include "ramp/formats.hpp"
#include "ramp/rng.hpp"
#include "ramp/spline.hpp"

namespace ramp {

namespace {

std::vector<Se3Pose> trajectory_poses(const SceneSpec& spec, const std::vector<double>& times) {
  std::vector<Se3Pose> poses;
  poses.reserve(times.size());
  switch (spec.kind) {
    case TrajectoryKind::kStatic: {
      poses.assign(times.size(), Se3Pose());
      break;
    }
    case TrajectoryKind::kConstantVelocity: {
      Vec6 xi;
      xi << spec.linear_velocity, spec.angular_velocity;
      for (const double t : times) poses.push_back(Se3Pose::exp(t * xi));
      break;
    }
    case TrajectoryKind::kCircular: {
      for (const double t : times) {
        const double theta = spec.circle_rate * t;
        Se3Pose pose;
        pose.t = Vec3(spec.circle_radius * std::cos(theta), spec.circle_radius * std::sin(theta),
                      0.0);
        poses.push_back(pose);
      }
      break;
    }
    case TrajectoryKind::kSplineWaypoints: {
      if (spec.waypoints.size() < 2)
        throw Error("scene: spline-waypoints needs at least 2 waypoints, got " +
                    std::to_string(spec.waypoints.size()));
      std::vector<double> wt;
      std::vector<double> wx, wy, wz;
      for (const auto& [t, p] : spec.waypoints) {
        wt.push_back(t);
        wx.push_back(p.x());
        wy.push_back(p.y());
        wz.push_back(p.z());
      }
      const Spline1D sx = Spline1D::fit(wt, wx);
      const Spline1D sy = Spline1D::fit(wt, wy);
      const Spline1D sz = Spline1D::fit(wt, wz);
      for (const double t : times) {
        Se3Pose pose;
        pose.t = Vec3(sx.eval(t), sy.eval(t), sz.eval(t));
        poses.push_back(pose);
      }
      break;
    }
  }
  return poses;
}

}  // namespace

std::optional<PointProjection> project_point(const Se3Pose& pose, const Intrinsics& intrinsics,
                                             const Vec3& point) {
  const Vec3 cam = pose.q.conjugate() * (point - pose.t);
  if (cam.z() <= kMinProjectiveDepth) return std::nullopt;
  const double u = intrinsics.fx * cam.x() / cam.z() + intrinsics.cx;
  const double v = intrinsics.fy * cam.y() / cam.z() + intrinsics.cy;
  if (u < 0.0 || u > intrinsics.width - 1.0 || v < 0.0 || v > intrinsics.height - 1.0)
    return std::nullopt;
  return PointProjection{{u, v}, cam.z()};
}

Scene generate_scene(const SceneSpec& spec) {
  if (spec.n_points <= 0) throw Error("scene: n_points must be positive");
  if (spec.n_frames <= 0) throw Error("scene: n_frames must be positive");
  if (!(spec.frame_rate > 0)) throw Error("scene: frame_rate must be positive");
  for (int axis = 0; axis < 3; ++axis)
    if (!(spec.box_min(axis) <= spec.box_max(axis))) throw Error("scene: empty bounding box");

  Scene scene;
  scene.timestamps.resize(spec.n_frames);
  for (int i = 0; i < spec.n_frames; ++i) scene.timestamps[i] = i / spec.frame_rate;
  scene.poses = trajectory_poses(spec, scene.timestamps);

  const int min_visible = static_cast<int>(std::ceil(spec.min_visibility * spec.n_frames));
  for (int attempt = 0; attempt < 100; ++attempt) {
    Rng rng(spec.seed + static_cast<std::uint64_t>(attempt));
    std::vector<Vec3> points(spec.n_points);
    for (Vec3& p : points)
      p = Vec3(rng.uniform(spec.box_min.x(), spec.box_max.x()),
               rng.uniform(spec.box_min.y(), spec.box_max.y()),
               rng.uniform(spec.box_min.z(), spec.box_max.z()));

    bool ok = true;
    for (const Vec3& p : points) {
      int visible = 0;
      for (const Se3Pose& pose : scene.poses)
        if (project_point(pose, spec.intrinsics, p)) ++visible;
      if (visible < min_visible) {
        ok = false;
        break;
      }
    }
    if (ok) {
      scene.points = std::move(points);
      return scene;
    }
  }
  throw Error("scene: no seed in [" + std::to_string(spec.seed) + ", " +
              std::to_string(spec.seed + 99) + "] kept every point visible in " +
              std::to_string(100.0 * spec.min_visibility) + "% of frames");
}

RenderResult render_frames(const Scene& scene, const SceneSpec& spec) {
  RenderResult out;
  const int width = spec.intrinsics.width, height = spec.intrinsics.height;
  const double sigma2 = spec.splat_sigma * spec.splat_sigma;
  const int reach = static_cast<int>(std::ceil(3.0 * spec.splat_sigma));

  for (std::size_t fi = 0; fi < scene.poses.size(); ++fi) {
    ImageF32 image(width, height, static_cast<float>(spec.background));
    for (std::size_t pi = 0; pi < scene.points.size(); ++pi) {
      const auto proj = project_point(scene.poses[fi], spec.intrinsics, scene.points[pi]);
      if (!proj) continue;
      const double u = proj->pixel.x(), v = proj->pixel.y();
      const int x0 = std::max(0, static_cast<int>(std::floor(u)) - reach);
      const int x1 = std::min(width - 1, static_cast<int>(std::ceil(u)) + reach);
      const int y0 = std::max(0, static_cast<int>(std::floor(v)) - reach);
      const int y1 = std::min(height - 1, static_cast<int>(std::ceil(v)) + reach);
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          const double d2 = (x - u) * (x - u) + (y - v) * (y - v);
          image.at(y, x) += static_cast<float>(spec.splat_peak * std::exp(-d2 / (2.0 * sigma2)));
        }
      out.tracks.push_back({static_cast<int>(fi), static_cast<int>(pi), u, v, 1.0 / proj->depth});
    }
    for (float& value : image.v) value = std::min(1.0f, value);
    out.frames.push_back(std::move(image));
  }
  return out;
}

void write_tracks_csv(const std::string& path, const std::vector<TrackPoint>& tracks) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "frame,point_id,x,y,inv_depth\n";
  char line[160];
  for (const TrackPoint& tp : tracks) {
    std::snprintf(line, sizeof(line), "%d,%d,%.17g,%.17g,%.17g\n", tp.frame, tp.point_id, tp.x,
                  tp.y, tp.inv_depth);
    out << line;
  }
  if (!out.good()) throw Error("write failed on " + path);
}

std::vector<TrackPoint> read_tracks_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::vector<TrackPoint> tracks;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line != "frame,point_id,x,y,inv_depth")
        throw Error(path + ": unexpected tracks header '" + line + "'");
      continue;
    }
    if (line.empty()) continue;
    TrackPoint tp;
    std::istringstream fields(line);
    char c1, c2, c3, c4;
    if (!(fields >> tp.frame >> c1 >> tp.point_id >> c2 >> tp.x >> c3 >> tp.y >> c4 >>
          tp.inv_depth) ||
        c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',')
      throw Error(path + ":" + std::to_string(line_no) + ": malformed tracks row '" + line + "'");
    tracks.push_back(tp);
  }
  return tracks;
}

void emit_dataset(const std::string& out_dir, const Scene& scene, const RenderResult& rendered,
                  const EventStream& events) {
  if (scene.poses.size() != rendered.frames.size() ||
      scene.timestamps.size() != rendered.frames.size())
    throw Error("dataset: frame/pose/timestamp count mismatch");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "frames", ec);
  if (ec) throw Error("cannot create " + out_dir + "/frames: " + ec.message());

  std::ofstream manifest(fs::path(out_dir) / "frames.txt", std::ios::trunc);
  if (!manifest) throw Error("cannot open " + out_dir + "/frames.txt for writing");
  char name[64], stamp[48];
  for (std::size_t i = 0; i < rendered.frames.size(); ++i) {
    std::snprintf(name, sizeof(name), "frames/frame_%06zu.pgm", i);
    write_pgm((fs::path(out_dir) / name).string(), rendered.frames[i]);
    std::snprintf(stamp, sizeof(stamp), "%.17g", scene.timestamps[i]);
    manifest << stamp << ' ' << name << '\n';
  }
  if (!manifest.good()) throw Error("write failed on " + out_dir + "/frames.txt");

  write_evt0((fs::path(out_dir) / "events.evt").string(), events);

  std::vector<TumEntry> gt(scene.poses.size());
  for (std::size_t i = 0; i < scene.poses.size(); ++i)
    gt[i] = {scene.timestamps[i], scene.poses[i]};
  write_tum((fs::path(out_dir) / "gt.tum").string(), gt);

  write_tracks_csv((fs::path(out_dir) / "tracks.csv").string(), rendered.tracks);
}

Scene build_dataset(const SceneSpec& spec, const EgmConfig& egm, const std::string& out_dir) {
  const Scene scene = generate_scene(spec);
  const RenderResult rendered = render_frames(scene, spec);
  const EventStream events = synthesize_events(rendered.frames, scene.timestamps, egm);
  emit_dataset(out_dir, scene, rendered, events);
  return scene;
}

}  // namespace ramp
