#include "ramp/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <utility>

#include <Eigen/Dense>

#include "ramp/error.hpp"
#include "ramp/formats.hpp"
#include "ramp/rng.hpp"

namespace ramp {

namespace {

// Untrained matching features share strong cross-channel structure, which
// gives every correlation cell a large common score and buries the true-match
// contrast. Jointly decorrelating the channels (zero-phase whitening of the
// channel covariance over the image) removes that shared component so dot
// products respond to local content.
void whiten_channels(Tensor3& t) {
  const Eigen::Index n = static_cast<Eigen::Index>(t.h) * t.w;
  const int C = t.c;
  if (n == 0 || C == 0) return;
  Eigen::MatrixXd f(C, n);
  for (int ci = 0; ci < C; ++ci) {
    const float* p = t.channel(ci);
    for (Eigen::Index i = 0; i < n; ++i) f(ci, i) = p[i];
  }
  f.colwise() -= f.rowwise().mean().eval();
  const Eigen::MatrixXd cov = f * f.transpose() / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const double floor = 1e-12 + 1e-6 * es.eigenvalues().maxCoeff();
  const Eigen::VectorXd inv_scale =
      es.eigenvalues().array().max(floor).rsqrt().matrix();
  const Eigen::MatrixXd w =
      es.eigenvectors() * inv_scale.asDiagonal() * es.eigenvectors().transpose();
  f = (w * f).eval();
  for (int ci = 0; ci < C; ++ci) {
    float* p = t.channel(ci);
    for (Eigen::Index i = 0; i < n; ++i) p[i] = static_cast<float>(f(ci, i));
  }
}

// Dividing each pixel's feature vector by its own magnitude (softened by the
// median magnitude) turns the correlation into a cosine-like score, so bright
// or busy regions cannot dominate the match grid.
void normalize_pixels(Tensor3& t) {
  const std::size_t n = static_cast<std::size_t>(t.h) * t.w;
  if (n == 0) return;
  std::vector<double> norms(n, 0.0);
  for (int ci = 0; ci < t.c; ++ci) {
    const float* p = t.channel(ci);
    for (std::size_t i = 0; i < n; ++i) norms[i] += static_cast<double>(p[i]) * p[i];
  }
  for (std::size_t i = 0; i < n; ++i) norms[i] = std::sqrt(norms[i]);
  std::vector<double> med = norms;
  std::nth_element(med.begin(), med.begin() + n / 2, med.end());
  const double eps = std::max(1e-6, med[n / 2]);
  for (int ci = 0; ci < t.c; ++ci) {
    float* p = t.channel(ci);
    for (std::size_t i = 0; i < n; ++i)
      p[i] = static_cast<float>(p[i] / (norms[i] + eps));
  }
}

Tensor3 image_tensor(const ImageF32& image) {
  Tensor3 t(1, image.height, image.width);
  std::copy(image.v.begin(), image.v.end(), t.v.begin());
  return t;
}

std::int64_t gt_key(int frame, int point_id) {
  return (static_cast<std::int64_t>(frame) << 32) | static_cast<std::uint32_t>(point_id);
}

}  // namespace

std::int64_t PipelineConfig::scaled_events_per_stack() const {
  return std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::llround(static_cast<double>(events_per_stack) * scale)));
}

std::int64_t PipelineConfig::scaled_min_events_between_frames() const {
  return std::max<std::int64_t>(
      0, static_cast<std::int64_t>(
             std::llround(static_cast<double>(min_events_between_frames) * scale)));
}

std::vector<TrajectoryEntry> TrajectoryEstimate::frame_entries() const {
  std::vector<TrajectoryEntry> out;
  for (const TrajectoryEntry& e : entries)
    if (!e.forecast) out.push_back(e);
  return out;
}

Dataset load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  Dataset data;

  const fs::path manifest = fs::path(dir) / "frames.txt";
  std::ifstream in(manifest);
  if (!in) throw Error("cannot open " + manifest.string());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    double t;
    std::string rel;
    if (!(fields >> t >> rel))
      throw Error(manifest.string() + ":" + std::to_string(line_no) +
                  ": expected '<timestamp> <path>'");
    if (!data.frame_times.empty() && t <= data.frame_times.back())
      throw Error(manifest.string() + ":" + std::to_string(line_no) +
                  ": non-increasing frame timestamp");
    data.frame_times.push_back(t);
    data.frames.push_back(read_pgm((fs::path(dir) / rel).string()));
    if (data.frames.back().width != data.frames.front().width ||
        data.frames.back().height != data.frames.front().height)
      throw Error(manifest.string() + ":" + std::to_string(line_no) + ": frame size changed");
  }
  if (data.frames.empty()) throw Error(manifest.string() + ": no frames listed");

  const fs::path events = fs::path(dir) / "events.evt";
  if (fs::exists(events)) data.events = read_evt0(events.string());

  const fs::path tracks = fs::path(dir) / "tracks.csv";
  if (fs::exists(tracks)) data.tracks = read_tracks_csv(tracks.string());
  return data;
}

std::vector<SensorSample> prepare_stream(const std::vector<double>& frame_times,
                                         const std::vector<ImageF32>& frames,
                                         const EventStream& events, const PipelineConfig& cfg) {
  if (frames.size() < 2)
    throw Error("prepare_stream: need at least 2 frames, got " + std::to_string(frames.size()));
  if (frames.size() != frame_times.size())
    throw Error("prepare_stream: frame/timestamp count mismatch");
  for (std::size_t i = 1; i < frame_times.size(); ++i)
    if (frame_times[i] <= frame_times[i - 1])
      throw Error("prepare_stream: non-increasing frame timestamp at index " + std::to_string(i));
  if (cfg.stacks_per_frame_pair < 1)
    throw Error("prepare_stream: stacks_per_frame_pair must be positive");

  const std::int64_t per_stack = cfg.scaled_events_per_stack();
  const std::int64_t min_between = cfg.scaled_min_events_between_frames();

  const auto count_between = [&](double ta, double tb) {
    const auto lo = std::upper_bound(events.events.begin(), events.events.end(), ta,
                                     [](double t, const Event& e) { return t < e.t; });
    const auto hi = std::upper_bound(events.events.begin(), events.events.end(), tb,
                                     [](double t, const Event& e) { return t < e.t; });
    return static_cast<std::int64_t>(hi - lo);
  };

  const int width = frames.front().width, height = frames.front().height;
  std::vector<SensorSample> stream;
  const auto push_stack = [&](double instant) {
    const auto slice = slice_last_n(events, static_cast<std::size_t>(per_stack), instant);
    if (slice.empty()) return;
    double t_start = slice.front().t;
    if (!(t_start < instant)) t_start = instant - 1e-9;
    stream.push_back(SensorSample::stack(instant, build_stack(slice, width, height, t_start, instant)));
  };

  stream.push_back(SensorSample::frame(frame_times[0], image_tensor(frames[0])));
  std::size_t prev = 0;
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (cfg.filter_frames && count_between(frame_times[prev], frame_times[i]) < min_between)
      continue;
    for (int k = 1; k <= cfg.stacks_per_frame_pair; ++k) {
      const double instant =
          frame_times[prev] +
          (frame_times[i] - frame_times[prev]) * k / cfg.stacks_per_frame_pair;
      push_stack(instant);
    }
    stream.push_back(SensorSample::frame(frame_times[i], image_tensor(frames[i])));
    prev = i;
  }
  return stream;
}

struct Pipeline::Impl {
  PipelineConfig cfg;
  Encoder encoder;
  FusionState state;
  PatchGraph graph;
  ImageF32 density;
  bool have_density = false;
  int frame_count = 0;
  int next_patch_id = 0;
  Rng oracle_rng;
  std::unordered_map<std::int64_t, Vec2> gt_pixel;
  std::unordered_map<int, std::vector<TrackPoint>> tracks_by_frame;
  std::unordered_map<int, int> patch_point;
  bool have_tracks = false;
  std::vector<TrajectoryEntry> frame_traj;
  LmReport last_report;
  int debug_grids = 0;
  std::vector<TrajectoryEntry> forecast_traj;

  static Encoder build_encoder(const PipelineConfig& cfg, int width, int height) {
    EncoderConfig ec = cfg.encoder;
    ec.width = width;
    ec.height = height;
    if (!cfg.weights_path.empty()) return Encoder(ec, WeightArchive::load(cfg.weights_path));
    ec.init_seed += cfg.seed * 0x9e3779b97f4a7c15ull;
    return Encoder(ec);
  }

  Impl(const PipelineConfig& config, int width, int height)
      : cfg(config), encoder(build_encoder(config, width, height)),
        state(encoder.make_state()), density(width, height, 0.0f),
        oracle_rng(config.seed ^ 0x6f7261636cull) {
    cfg.intrinsics.width = width;
    cfg.intrinsics.height = height;
    if (cfg.bootstrap_frames < 2)
      throw Error("pipeline: bootstrap_frames must be at least 2, got " +
                  std::to_string(cfg.bootstrap_frames));
  }

  void set_tracks(const std::vector<TrackPoint>& tracks) {
    gt_pixel.clear();
    tracks_by_frame.clear();
    for (const TrackPoint& tp : tracks) {
      gt_pixel[gt_key(tp.frame, tp.point_id)] = Vec2(tp.x, tp.y);
      tracks_by_frame[tp.frame].push_back(tp);
    }
    have_tracks = !tracks.empty();
  }

  void accumulate_density(const Tensor3& payload) {
    for (int y = 0; y < density.height; ++y)
      for (int x = 0; x < density.width; ++x) {
        float sum = 0;
        for (int b = 0; b < EventStack::kBins; ++b) sum += std::abs(payload.at(b, y, x));
        density.at(y, x) = sum;
      }
    have_density = true;
  }

  // Oracle plumbing: adopt the nearest ground-truth track point as the patch
  // center so its stored track is exactly the patch's true pixel trajectory.
  void associate_patches(std::vector<Patch>& fresh, int frame) {
    const auto it = tracks_by_frame.find(frame);
    if (it == tracks_by_frame.end()) return;
    for (Patch& patch : fresh) {
      const Vec2 c = patch.center();
      double best = cfg.assoc_radius;
      const TrackPoint* hit = nullptr;
      for (const TrackPoint& tp : it->second) {
        const double d = (Vec2(tp.x, tp.y) - c).norm();
        if (d < best) {
          best = d;
          hit = &tp;
        }
      }
      if (hit) {
        patch_point[patch.patch_index] = hit->point_id;
        patch = Patch::centered(patch.frame_index, patch.patch_index, hit->x, hit->y, patch.p,
                                patch.inv_depth);
      }
    }
  }

  void refresh_and_correct() {
    for (PatchEdge& e : graph.edges) {
      const Patch* patch = graph.patch(e.patch_id);
      const FrameRecord* target = graph.frame(e.frame_index);
      const FrameRecord* source = graph.frame(patch->frame_index);
      const CenterProjection proj =
          project_center(target->pose, source->pose, cfg.intrinsics, *patch);
      if (!proj.valid) {
        e.masked = true;
        e.sigma = Vec2::Zero();
        continue;
      }
      e.center = proj.pixel;

      CorrectionEstimate est;
      if (cfg.correction_mode == CorrectionMode::kOracle) {
        const auto assoc = patch_point.find(e.patch_id);
        const auto gt = assoc == patch_point.end()
                            ? gt_pixel.end()
                            : gt_pixel.find(gt_key(e.frame_index, assoc->second));
        if (assoc == patch_point.end() || gt == gt_pixel.end()) {
          est.masked = true;
          est.sigma = Vec2::Zero();
        } else {
          est = estimate_oracle(gt->second, e.center, cfg.oracle_noise_std, oracle_rng);
        }
      } else {
        const CorrelationGrid grid =
            correlation_lookup(source->features->matching, target->features->matching, *patch,
                               e.center, cfg.corr_radius);
        est = estimate_softargmax(grid, cfg.softargmax_temperature);
        // Patches whose scene point has left the view (or was never salient)
        // still produce grids; their best score is indistinguishable from
        // random-feature noise, so drop the edge instead of feeding the
        // solver a confident falsehood.
        if (!grid.masked && cfg.peak_min > 0) {
          const float best = *std::max_element(grid.scores.begin(), grid.scores.end());
          if (best < cfg.peak_min) {
            est.masked = true;
            est.sigma = Vec2::Zero();
            est.delta = Vec2::Zero();
          }
        }
        if (debug_grids > 0 && !grid.masked) {
          --debug_grids;
          float lo = grid.scores[0], hi = grid.scores[0];
          double mean = 0, var = 0;
          for (float s : grid.scores) { lo = std::min(lo, s); hi = std::max(hi, s); mean += s; }
          mean /= grid.scores.size();
          for (float s : grid.scores) var += (s - mean) * (s - mean);
          var /= grid.scores.size();
          std::fprintf(stderr, "grid: min=%.4g max=%.4g std=%.4g delta=(%.2f,%.2f) sigma=(%.3g,%.3g)\n",
                       lo, hi, std::sqrt(var), est.delta.x(), est.delta.y(), est.sigma.x(), est.sigma.y());
        }
      }
      e.delta = est.delta;
      e.sigma = est.sigma;
      e.masked = est.masked;
    }
  }

  void solve_window_ba() {
    BaProblem problem;
    problem.intrinsics = cfg.intrinsics;
    problem.n_fixed = std::max(1, std::min(2, static_cast<int>(graph.frames.size()) - 1));
    const int oldest = graph.oldest_frame_index();
    for (const FrameRecord& f : graph.frames) problem.poses.push_back(f.pose);

    std::unordered_map<int, int> slot;
    slot.reserve(graph.patches.size());
    for (const Patch& p : graph.patches) {
      slot[p.patch_index] = static_cast<int>(problem.patches.size());
      Patch local = p;
      local.frame_index -= oldest;
      problem.patches.push_back(std::move(local));
    }
    for (const PatchEdge& e : graph.edges) {
      BaEdge be;
      be.patch = slot.at(e.patch_id);
      be.frame = e.frame_index - oldest;
      be.center = e.center;
      be.delta = e.delta;
      be.sigma = e.sigma;
      be.masked = e.masked;
      problem.edges.push_back(be);
    }

    last_report = lm_solve(problem, cfg.lm);

    for (std::size_t i = 0; i < graph.frames.size(); ++i) graph.frames[i].pose = problem.poses[i];
    for (Patch& p : graph.patches) p.inv_depth = problem.patches[slot.at(p.patch_index)].inv_depth;
  }

  void process(const SensorSample& sample) {
    if (sample.sensor == Sensor::kEvents) {
      encoder.encode_next(state, sample);
      accumulate_density(sample.payload);
      return;
    }

    auto features = std::make_shared<FeatureMaps>(encoder.encode_next(state, sample));
    whiten_channels(features->matching);
    normalize_pixels(features->matching);
    const int j = frame_count++;
    const double t = sample.timestamp;

    Se3Pose init;
    if (!graph.frames.empty() && j >= cfg.bootstrap_frames) {
      std::optional<Se3Pose> fc;
      if (cfg.use_forecast) fc = forecast_pose(graph, cfg.intrinsics, t, cfg.forecast);
      if (fc) {
        init = *fc;
        forecast_traj.push_back({t, *fc, true});
      } else {
        init = constant_velocity_pose(graph, t);
      }
    }
    if (cfg.correction_mode == CorrectionMode::kOracle && !have_tracks)
      throw Error("pipeline: oracle corrections need ground-truth tracks");

    ImageF32 zeros;
    const ImageF32* dens = &density;
    if (!have_density) {
      zeros = ImageF32(density.width, density.height, 0.0f);
      dens = &zeros;
    }
    const auto corners =
        extract_corners(*dens, cfg.patches, cfg.seed * 1000003ull + static_cast<std::uint64_t>(j));
    std::vector<Patch> fresh;
    fresh.reserve(corners.size());
    for (const auto& [x, y] : corners)
      fresh.push_back(Patch::centered(j, next_patch_id++, x, y, cfg.patches.p, 1.0));
    backfill_depth_init(graph, fresh);
    if (cfg.correction_mode == CorrectionMode::kOracle) associate_patches(fresh, j);

    FrameRecord record;
    record.index = j;
    record.timestamp = t;
    record.pose = init;
    record.features = std::move(features);
    add_frame(graph, std::move(record), std::move(fresh), cfg.patches);

    if (graph.frames.size() >= 2) {
      const bool debug = std::getenv("RAMP_ODO_DEBUG") != nullptr;
      const bool timing = std::getenv("RAMP_ODO_TIMING") != nullptr;
      const auto tick = std::chrono::steady_clock::now();
      double ms_correct = 0, ms_ba = 0;
      // The first poses double as the window gauge once they stop being
      // optimized, so let the small bootstrap graphs iterate further before
      // their estimates freeze into the anchor role.
      const int rounds = cfg.rounds_per_frame * (j <= 4 ? 4 : 1);
      for (int round = 0; round < rounds; ++round) {
        if (debug && j == 10 && round == 0) debug_grids = 6;
        const auto t_c = std::chrono::steady_clock::now();
        refresh_and_correct();
        ms_correct += std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t_c)
                          .count();
        if (debug) {
          int unmasked = 0;
          double mean_delta = 0;
          for (const PatchEdge& e : graph.edges)
            if (!e.masked) {
              ++unmasked;
              mean_delta += e.delta.norm();
            }
          if (unmasked > 0) mean_delta /= unmasked;
          std::fprintf(stderr, "frame %d round %d: edges=%zu unmasked=%d mean|delta|=%.4f", j,
                       round, graph.edges.size(), unmasked, mean_delta);
        }
        const auto t_b = std::chrono::steady_clock::now();
        solve_window_ba();
        ms_ba += std::chrono::duration<double, std::milli>(
                     std::chrono::steady_clock::now() - t_b)
                     .count();
        if (debug) {
          std::fprintf(stderr, " cost %.6g -> %.6g\n", last_report.initial_cost,
                       last_report.final_cost);
        }
      }
      if (timing) {
        const double ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - tick)
                              .count();
        std::fprintf(stderr, "frame %d: correct+ba %.1f ms (correct %.1f, ba %.1f)\n", j, ms,
                     ms_correct, ms_ba);
      }
    }

    frame_traj.push_back({t, Se3Pose(), false});
    for (const FrameRecord& f : graph.frames)
      frame_traj[static_cast<std::size_t>(f.index)] = {f.timestamp, f.pose, false};
  }
};

Pipeline::Pipeline(const PipelineConfig& cfg, int width, int height)
    : impl_(std::make_unique<Impl>(cfg, width, height)) {}
Pipeline::~Pipeline() = default;
Pipeline::Pipeline(Pipeline&&) noexcept = default;
Pipeline& Pipeline::operator=(Pipeline&&) noexcept = default;

void Pipeline::set_oracle_tracks(const std::vector<TrackPoint>& tracks) {
  impl_->set_tracks(tracks);
}

void Pipeline::process_sample(const SensorSample& sample) { impl_->process(sample); }

const PatchGraph& Pipeline::graph() const { return impl_->graph; }
const FusionState& Pipeline::encoder_state() const { return impl_->state; }

TrajectoryEstimate Pipeline::trajectory() const {
  TrajectoryEstimate out;
  out.entries = impl_->frame_traj;
  out.entries.insert(out.entries.end(), impl_->forecast_traj.begin(), impl_->forecast_traj.end());
  return out;
}

TrajectoryEstimate run_pipeline(const Dataset& data, const PipelineConfig& cfg) {
  if (data.frames.empty()) throw Error("pipeline: empty dataset");
  const std::vector<SensorSample> stream =
      prepare_stream(data.frame_times, data.frames, data.events, cfg);
  Pipeline pipe(cfg, data.frames.front().width, data.frames.front().height);
  if (cfg.correction_mode == CorrectionMode::kOracle) pipe.set_oracle_tracks(data.tracks);
  for (const SensorSample& sample : stream) pipe.process_sample(sample);
  return pipe.trajectory();
}

void write_trajectory_tum(const std::string& path, const TrajectoryEstimate& estimate) {
  std::vector<TumEntry> entries;
  for (const TrajectoryEntry& e : estimate.entries)
    if (!e.forecast) entries.push_back({e.timestamp, e.pose});
  write_tum(path, entries);
}

}  // namespace ramp
