#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ramp/encoder.hpp"
#include "ramp/error.hpp"
#include "ramp/evaluation.hpp"
#include "ramp/events.hpp"
#include "ramp/formats.hpp"
#include "ramp/parallel.hpp"
#include "ramp/pipeline.hpp"
#include "ramp/rng.hpp"
#include "ramp/spline.hpp"
#include "ramp/synth.hpp"

namespace {

// Bad flags and unknown config keys exit with code 2; domain errors with 1.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("RAMP_ODO_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw UsageError(std::string("RAMP_ODO_SEED is not a number: '") + env + "'");
    }
  }
  return 0;
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config key '" + key + "': expected a number, got '" + value + "'");
  }
}

std::int64_t to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config key '" + key + "': expected an integer, got '" + value + "'");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "on" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "off" || value == "no") return false;
  throw UsageError("config key '" + key + "': expected a boolean, got '" + value + "'");
}

void apply_pipeline_config(const std::map<std::string, std::string>& kv,
                           ramp::PipelineConfig& cfg) {
  for (const auto& [key, value] : kv) {
    if (key == "correction") {
      if (value == "oracle")
        cfg.correction_mode = ramp::CorrectionMode::kOracle;
      else if (value == "softargmax")
        cfg.correction_mode = ramp::CorrectionMode::kSoftargmax;
      else
        throw UsageError("config key 'correction': expected oracle|softargmax, got '" + value +
                         "'");
    } else if (key == "weights") {
      cfg.weights_path = value;
    } else if (key == "scale") {
      cfg.scale = to_double(key, value);
    } else if (key == "events_per_stack") {
      cfg.events_per_stack = to_int(key, value);
    } else if (key == "min_events_between_frames") {
      cfg.min_events_between_frames = to_int(key, value);
    } else if (key == "filter_frames") {
      cfg.filter_frames = to_bool(key, value);
    } else if (key == "rounds_per_frame") {
      cfg.rounds_per_frame = static_cast<int>(to_int(key, value));
    } else if (key == "bootstrap_frames") {
      cfg.bootstrap_frames = static_cast<int>(to_int(key, value));
    } else if (key == "use_forecast") {
      cfg.use_forecast = to_bool(key, value);
    } else if (key == "fx") {
      cfg.intrinsics.fx = to_double(key, value);
    } else if (key == "fy") {
      cfg.intrinsics.fy = to_double(key, value);
    } else if (key == "cx") {
      cfg.intrinsics.cx = to_double(key, value);
    } else if (key == "cy") {
      cfg.intrinsics.cy = to_double(key, value);
    } else if (key == "corr_radius") {
      cfg.corr_radius = static_cast<int>(to_int(key, value));
    } else if (key == "temperature") {
      cfg.softargmax_temperature = to_double(key, value);
    } else if (key == "peak_min") {
      cfg.peak_min = to_double(key, value);
    } else if (key == "oracle_noise_std") {
      cfg.oracle_noise_std = to_double(key, value);
    } else if (key == "assoc_radius") {
      cfg.assoc_radius = to_double(key, value);
    } else if (key == "n_patches") {
      cfg.patches.n_patches = static_cast<int>(to_int(key, value));
    } else if (key == "patch_size") {
      cfg.patches.p = static_cast<int>(to_int(key, value));
    } else if (key == "nms_radius") {
      cfg.patches.nms_radius = static_cast<int>(to_int(key, value));
    } else if (key == "window_r") {
      cfg.patches.window_r = static_cast<int>(to_int(key, value));
    } else if (key == "border") {
      cfg.patches.border = static_cast<int>(to_int(key, value));
    } else if (key == "lm_steps") {
      cfg.lm.steps = static_cast<int>(to_int(key, value));
    } else if (key == "lambda_init") {
      cfg.lm.lambda_init = to_double(key, value);
    } else if (key == "encoder_channels") {
      cfg.encoder.channels = static_cast<int>(to_int(key, value));
    } else if (key == "msf_half") {
      cfg.encoder.msf_half = static_cast<int>(to_int(key, value));
    } else if (key == "msf_quarter") {
      cfg.encoder.msf_quarter = static_cast<int>(to_int(key, value));
    } else if (key == "matching_channels") {
      cfg.encoder.matching_channels = static_cast<int>(to_int(key, value));
    } else if (key == "context_channels") {
      cfg.encoder.context_channels = static_cast<int>(to_int(key, value));
    } else if (key == "init_range") {
      cfg.encoder.init_range = to_double(key, value);
    } else if (key == "history_frames") {
      cfg.forecast.history_frames = static_cast<int>(to_int(key, value));
    } else if (key == "min_knots") {
      cfg.forecast.min_knots = static_cast<int>(to_int(key, value));
    } else if (key == "min_tracks") {
      cfg.forecast.min_tracks = static_cast<int>(to_int(key, value));
    } else if (key == "extrapolation") {
      if (value == "tail")
        cfg.forecast.extrapolation = ramp::ExtrapolationMode::kSplineTail;
      else if (value == "smooth-stop")
        cfg.forecast.extrapolation = ramp::ExtrapolationMode::kSmoothStop;
      else
        throw UsageError("config key 'extrapolation': expected tail|smooth-stop, got '" + value +
                         "'");
    } else if (key == "forecast_lm_steps") {
      cfg.forecast.lm.steps = static_cast<int>(to_int(key, value));
    } else {
      throw UsageError("unknown config key '" + key + "'");
    }
  }
}

void apply_scene_spec(const std::map<std::string, std::string>& kv, ramp::SceneSpec& spec,
                      ramp::EgmConfig& egm) {
  bool cx_set = false, cy_set = false;
  for (const auto& [key, value] : kv) {
    if (key == "seed") {
      spec.seed = static_cast<std::uint64_t>(to_int(key, value));
    } else if (key == "n_points") {
      spec.n_points = static_cast<int>(to_int(key, value));
    } else if (key == "kind") {
      if (value == "static")
        spec.kind = ramp::TrajectoryKind::kStatic;
      else if (value == "constant-velocity")
        spec.kind = ramp::TrajectoryKind::kConstantVelocity;
      else if (value == "circular")
        spec.kind = ramp::TrajectoryKind::kCircular;
      else if (value == "spline-waypoints")
        spec.kind = ramp::TrajectoryKind::kSplineWaypoints;
      else
        throw UsageError(
            "config key 'kind': expected static|constant-velocity|circular|spline-waypoints, "
            "got '" +
            value + "'");
    } else if (key == "n_frames") {
      spec.n_frames = static_cast<int>(to_int(key, value));
    } else if (key == "frame_rate") {
      spec.frame_rate = to_double(key, value);
    } else if (key == "width") {
      spec.intrinsics.width = static_cast<int>(to_int(key, value));
    } else if (key == "height") {
      spec.intrinsics.height = static_cast<int>(to_int(key, value));
    } else if (key == "fx") {
      spec.intrinsics.fx = to_double(key, value);
    } else if (key == "fy") {
      spec.intrinsics.fy = to_double(key, value);
    } else if (key == "cx") {
      spec.intrinsics.cx = to_double(key, value);
      cx_set = true;
    } else if (key == "cy") {
      spec.intrinsics.cy = to_double(key, value);
      cy_set = true;
    } else if (key == "box_min_x") {
      spec.box_min.x() = to_double(key, value);
    } else if (key == "box_min_y") {
      spec.box_min.y() = to_double(key, value);
    } else if (key == "box_min_z") {
      spec.box_min.z() = to_double(key, value);
    } else if (key == "box_max_x") {
      spec.box_max.x() = to_double(key, value);
    } else if (key == "box_max_y") {
      spec.box_max.y() = to_double(key, value);
    } else if (key == "box_max_z") {
      spec.box_max.z() = to_double(key, value);
    } else if (key == "vel_x") {
      spec.linear_velocity.x() = to_double(key, value);
    } else if (key == "vel_y") {
      spec.linear_velocity.y() = to_double(key, value);
    } else if (key == "vel_z") {
      spec.linear_velocity.z() = to_double(key, value);
    } else if (key == "ang_x") {
      spec.angular_velocity.x() = to_double(key, value);
    } else if (key == "ang_y") {
      spec.angular_velocity.y() = to_double(key, value);
    } else if (key == "ang_z") {
      spec.angular_velocity.z() = to_double(key, value);
    } else if (key == "circle_radius") {
      spec.circle_radius = to_double(key, value);
    } else if (key == "circle_rate") {
      spec.circle_rate = to_double(key, value);
    } else if (key == "waypoints") {
      spec.waypoints.clear();
      std::istringstream items(value);
      std::string item;
      while (std::getline(items, item, ';')) {
        double t, x, y, z;
        if (std::sscanf(item.c_str(), "%lf:%lf:%lf:%lf", &t, &x, &y, &z) != 4)
          throw UsageError("config key 'waypoints': expected t:x:y:z;... got '" + item + "'");
        spec.waypoints.emplace_back(t, ramp::Vec3(x, y, z));
      }
    } else if (key == "splat_sigma") {
      spec.splat_sigma = to_double(key, value);
    } else if (key == "splat_peak") {
      spec.splat_peak = to_double(key, value);
    } else if (key == "background") {
      spec.background = to_double(key, value);
    } else if (key == "min_visibility") {
      spec.min_visibility = to_double(key, value);
    } else if (key == "contrast_threshold") {
      egm.contrast_threshold = to_double(key, value);
    } else if (key == "log_eps") {
      egm.log_eps = to_double(key, value);
    } else {
      throw UsageError("unknown config key '" + key + "'");
    }
  }
  if (!cx_set) spec.intrinsics.cx = (spec.intrinsics.width - 1) / 2.0;
  if (!cy_set) spec.intrinsics.cy = (spec.intrinsics.height - 1) / 2.0;
}

std::vector<ramp::TumEntry> trajectory_entries(const ramp::TrajectoryEstimate& est) {
  std::vector<ramp::TumEntry> out;
  for (const auto& e : est.frame_entries()) out.push_back({e.timestamp, e.pose});
  return out;
}

// Ground truth rows whose timestamps match the estimate's, for inline ATE
// after frame filtering.
std::vector<ramp::TumEntry> match_gt(const std::vector<ramp::TumEntry>& est,
                                     const std::vector<ramp::TumEntry>& gt) {
  std::vector<ramp::TumEntry> out;
  std::size_t cursor = 0;
  for (const auto& e : est) {
    while (cursor < gt.size() && gt[cursor].timestamp < e.timestamp - 1e-9) ++cursor;
    if (cursor >= gt.size() || std::abs(gt[cursor].timestamp - e.timestamp) > 1e-9)
      throw ramp::Error("no ground-truth pose at timestamp " + std::to_string(e.timestamp));
    out.push_back(gt[cursor]);
  }
  return out;
}

int cmd_run(const std::string& frames_dir, const std::string& events_file,
            const std::string& config_file, const std::string& out_file,
            const std::string& gt_file, std::optional<std::uint64_t> seed_flag, int workers) {
  ramp::set_worker_count(workers);
  ramp::Dataset data = ramp::load_dataset(frames_dir);
  if (!events_file.empty()) data.events = ramp::read_evt0(events_file);

  ramp::PipelineConfig cfg;
  if (!config_file.empty()) apply_pipeline_config(ramp::read_config_file(config_file), cfg);
  cfg.seed = resolve_seed(seed_flag);

  const ramp::TrajectoryEstimate traj = ramp::run_pipeline(data, cfg);
  ramp::write_trajectory_tum(out_file, traj);
  std::printf("poses=%zu forecasts=%zu -> %s\n", traj.frame_entries().size(),
              traj.entries.size() - traj.frame_entries().size(), out_file.c_str());

  if (!gt_file.empty()) {
    const auto est = trajectory_entries(traj);
    const auto gt = match_gt(est, ramp::read_tum(gt_file));
    const auto result = ramp::align_trajectories(est, gt, true);
    std::printf("ATE_RMSE=%.9f\n", result.ate_rmse);
  }
  return 0;
}

int cmd_synth(const std::string& spec_file, const std::string& out_dir,
              std::optional<std::uint64_t> seed_flag) {
  ramp::SceneSpec spec;
  ramp::EgmConfig egm;
  if (!spec_file.empty()) apply_scene_spec(ramp::read_config_file(spec_file), spec, egm);
  if (seed_flag) spec.seed = *seed_flag;

  const ramp::Scene scene = ramp::build_dataset(spec, egm, out_dir);

  // A ready-to-run pipeline config: the camera model plus an event budget
  // scaled to this dataset's actual event rate.
  const ramp::Dataset data = ramp::load_dataset(out_dir);
  std::vector<std::int64_t> per_pair;
  for (std::size_t i = 1; i < data.frame_times.size(); ++i) {
    const auto& ev = data.events.events;
    const auto lo = std::lower_bound(ev.begin(), ev.end(), data.frame_times[i - 1],
                                     [](const ramp::Event& e, double t) { return e.t <= t; });
    const auto hi = std::lower_bound(ev.begin(), ev.end(), data.frame_times[i],
                                     [](const ramp::Event& e, double t) { return e.t <= t; });
    per_pair.push_back(hi - lo);
  }
  std::sort(per_pair.begin(), per_pair.end());
  const std::int64_t median = per_pair.empty() ? 0 : per_pair[per_pair.size() / 2];
  const double scale = median > 0 ? 0.5 * static_cast<double>(median) / 600000.0 : 1.0;

  std::ofstream cfg(std::filesystem::path(out_dir) / "pipeline.cfg", std::ios::trunc);
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "fx=%.17g\nfy=%.17g\ncx=%.17g\ncy=%.17g\nscale=%.17g\n",
                spec.intrinsics.fx, spec.intrinsics.fy, spec.intrinsics.cx, spec.intrinsics.cy,
                scale);
  cfg << buf;
  if (!cfg.good()) throw ramp::Error("write failed on " + out_dir + "/pipeline.cfg");

  std::printf("frames=%d events=%zu points=%d -> %s\n", spec.n_frames,
              data.events.events.size(), spec.n_points, out_dir.c_str());
  return 0;
}

int cmd_eval(const std::string& est_file, const std::string& gt_file,
             const std::string& manifest_file, bool rigid, double tau_max, int n_grid,
             const std::string& csv_file, const std::string& json_file) {
  if (manifest_file.empty()) {
    const auto est = ramp::read_tum(est_file);
    const auto gt = ramp::read_tum(gt_file);
    const auto result = ramp::align_trajectories(est, gt, !rigid);
    std::printf("ATE_RMSE=%.9f\n", result.ate_rmse);
    return 0;
  }

  std::ifstream in(manifest_file);
  if (!in) throw ramp::Error("cannot open " + manifest_file);
  std::vector<std::pair<std::string, double>> ates;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string name, est_path, gt_path;
    if (!(fields >> name >> est_path >> gt_path))
      throw ramp::Error(manifest_file + ":" + std::to_string(line_no) +
                        ": expected '<name> <est.tum> <gt.tum>'");
    const auto result =
        ramp::align_trajectories(ramp::read_tum(est_path), ramp::read_tum(gt_path), !rigid);
    std::printf("%s ATE_RMSE=%.9f\n", name.c_str(), result.ate_rmse);
    ates.emplace_back(name, result.ate_rmse);
  }
  const ramp::EvalReport report = ramp::evaluate_sequences(ates, tau_max, n_grid);
  std::printf("AUC=%.9f\n", report.auc);
  if (!csv_file.empty()) ramp::write_eval_csv(csv_file, report);
  if (!json_file.empty()) ramp::write_eval_json(json_file, report);
  return 0;
}

int cmd_bench(int width, int height, int workers, int samples, int channels) {
  ramp::EncoderConfig cfg;
  cfg.width = width;
  cfg.height = height;
  cfg.channels = channels;
  cfg.msf_half = 2 * channels;
  cfg.msf_quarter = 3 * channels;
  cfg.matching_channels = 2 * channels;
  cfg.context_channels = 2 * channels;
  const ramp::BenchReport report = ramp::bench_encoder(cfg, samples, workers);

  nlohmann::json doc;
  doc["workers"] = report.workers;
  doc["n_samples"] = report.n_samples;
  doc["parallel_ms_per_sample"] = report.parallel_ms_per_sample;
  doc["sequential_ms_per_sample"] = report.sequential_ms_per_sample;
  doc["speedup"] = report.speedup;
  for (const auto& stage : report.stages) doc["stages"][stage.name] = stage.mean_ms;
  std::printf("%s\n", doc.dump(2).c_str());
  return 0;
}

int cmd_selftest() {
  int failures = 0;
  const auto check = [&](const char* name, bool ok) {
    std::printf("[%s] %s\n", ok ? "PASS" : "FAIL", name);
    if (!ok) ++failures;
  };

  {
    ramp::Rng rng(11);
    std::vector<double> t, x;
    for (int i = 0; i < 6; ++i) {
      t.push_back(i * 0.25);
      x.push_back(rng.uniform(-5, 5));
    }
    const ramp::Spline1D s = ramp::Spline1D::fit(t, x);
    double worst = 0;
    for (std::size_t i = 0; i < t.size(); ++i) worst = std::max(worst, std::abs(s.eval(t[i]) - x[i]));
    check("spline knot interpolation", worst < 1e-9);

    const ramp::Cubic g = ramp::smooth_stop_cubic(s.eval(t.back()), s.derivative(t.back()),
                                                  t.back(), t.back() + 0.5);
    const double c1 = std::abs(g.eval(t.back()) - s.eval(t.back()));
    const double c2 = std::abs(g.derivative(t.back()) - s.derivative(t.back()));
    const double c3 = std::abs(g.derivative(t.back() + 0.5));
    const double c4 = std::abs(g.second_derivative(t.back() + 0.5));
    check("extrapolation boundary constraints", std::max({c1, c2, c3, c4}) < 1e-9);
  }

  {
    ramp::Rng rng(12);
    std::vector<ramp::Event> events;
    for (int i = 0; i < 500; ++i)
      events.push_back({0.5, static_cast<std::uint16_t>(rng.uniform_int(0, 31)),
                        static_cast<std::uint16_t>(rng.uniform_int(0, 23)),
                        static_cast<std::int8_t>(rng.uniform01() < 0.5 ? -1 : 1)});
    for (int i = 0; i < 500; ++i) events[i].t = rng.uniform(0.0, 1.0);
    std::sort(events.begin(), events.end(),
              [](const ramp::Event& a, const ramp::Event& b) { return a.t < b.t; });
    const ramp::EventStack stack = ramp::build_stack(events, 32, 24, 0.0, 1.0);
    double net = 0;
    for (const float v : stack.data) net += v;
    int expected = 0;
    for (const auto& e : events) expected += e.polarity;
    check("event stack conserves net polarity", std::abs(net - expected) < 1e-6);
  }

  {
    ramp::Rng rng(13);
    std::vector<ramp::Vec3> est;
    for (int i = 0; i < 40; ++i)
      est.emplace_back(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    const ramp::Se3Pose xf = ramp::Se3Pose::exp(
        (ramp::Vec6() << 0.3, -0.2, 0.5, 0.2, -0.1, 0.25).finished());
    const double s_true = 1.7;
    std::vector<ramp::Vec3> gt;
    for (const auto& p : est) gt.push_back(s_true * (xf.q * p) + xf.t);
    const ramp::AlignmentResult r = ramp::umeyama_align(est, gt, true);
    check("similarity alignment recovery",
          std::abs(r.scale - s_true) < 1e-9 && r.ate_rmse < 1e-9);
  }

  {
    ramp::CorrelationGrid grid;
    grid.radius = 3;
    grid.scores.assign(49, -100.0f);
    grid.scores[((-1) + 3) * 7 + (2 + 3)] = 50.0f;
    const ramp::CorrectionEstimate est = ramp::estimate_softargmax(grid, 1.0);
    check("soft-argmax spike golden",
          (est.delta - ramp::Vec2(8, -4)).norm() < 1e-6 &&
              std::abs(est.sigma.x() - ramp::kSigmaMax) < 1e-6);
  }

  std::printf("selftest: %s\n", failures == 0 ? "all passed" : "FAILURES");
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event+frame visual odometry with recurrent fusion encoders"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed_flag;
  std::string frames_dir, events_file, config_file, out_file, gt_file;
  std::string spec_file, out_dir;
  std::string est_file, manifest_file, csv_file, json_file;
  bool rigid = false;
  double tau_max = 1.0;
  int n_grid = 100;
  int width = 640, height = 480, workers = 1, samples = 20, channels = 4;

  auto* run = app.add_subcommand("run", "Run visual odometry on a dataset");
  run->add_option("--frames", frames_dir, "Dataset directory containing frames.txt")->required();
  run->add_option("--events", events_file, "EVT0 event file (default: <frames>/events.evt)");
  run->add_option("--config", config_file, "key=value pipeline configuration");
  run->add_option("--out", out_file, "Output TUM trajectory path")->required();
  run->add_option("--gt", gt_file, "Ground-truth TUM file for inline ATE");
  run->add_option("--seed", seed_flag, "Seed (default: RAMP_ODO_SEED, then 0)");
  run->add_option("--workers", workers, "Worker thread cap");

  auto* synth = app.add_subcommand("synth", "Emit a synthetic dataset");
  synth->add_option("--spec", spec_file, "key=value scene specification");
  synth->add_option("--out", out_dir, "Output dataset directory")->required();
  synth->add_option("--seed", seed_flag, "Seed override");

  auto* eval = app.add_subcommand("eval", "Trajectory error against ground truth");
  eval->add_option("--est", est_file, "Estimated TUM trajectory");
  eval->add_option("--gt", gt_file, "Ground-truth TUM trajectory");
  eval->add_option("--manifest", manifest_file, "Lines of '<name> <est.tum> <gt.tum>' for AUC");
  eval->add_flag("--rigid", rigid, "Rigid alignment instead of similarity");
  eval->add_option("--tau-max", tau_max, "Largest success threshold");
  eval->add_option("--n-grid", n_grid, "Number of thresholds");
  eval->add_option("--csv", csv_file, "Write per-sequence CSV here");
  eval->add_option("--json", json_file, "Write summary JSON here");

  auto* bench = app.add_subcommand("bench-encoder", "Encoder stage timing");
  bench->add_option("--width", width, "Image width");
  bench->add_option("--height", height, "Image height");
  bench->add_option("--workers", workers, "Worker threads for the parallel pass");
  bench->add_option("--samples", samples, "Timed samples");
  bench->add_option("--channels", channels, "Encoder width");

  auto* selftest = app.add_subcommand("selftest", "Built-in invariant checks");
  (void)selftest;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed())
      return cmd_run(frames_dir, events_file, config_file, out_file, gt_file, seed_flag, workers);
    if (synth->parsed()) return cmd_synth(spec_file, out_dir, seed_flag);
    if (eval->parsed()) {
      if (manifest_file.empty() && (est_file.empty() || gt_file.empty()))
        throw UsageError("eval needs --est and --gt, or --manifest");
      return cmd_eval(est_file, gt_file, manifest_file, rigid, tau_max, n_grid, csv_file,
                      json_file);
    }
    if (bench->parsed()) return cmd_bench(width, height, workers, samples, channels);
    if (selftest->parsed()) return cmd_selftest();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ramp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
