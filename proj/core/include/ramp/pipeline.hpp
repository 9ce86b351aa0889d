#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ramp/ba.hpp"
#include "ramp/correction.hpp"
#include "ramp/encoder.hpp"
#include "ramp/events.hpp"
#include "ramp/forecast.hpp"
#include "ramp/geometry.hpp"
#include "ramp/patches.hpp"
#include "ramp/synth.hpp"

namespace ramp {

enum class CorrectionMode { kOracle, kSoftargmax };

struct PipelineConfig {
  std::string weights_path;  // empty: seeded random initialization
  std::uint64_t seed = 0;
  EncoderConfig encoder;     // widths shrunk for desk-scale runtimes below
  PatchConfig patches;
  LmConfig lm;
  ForecastConfig forecast;
  int rounds_per_frame = 4;
  int bootstrap_frames = 8;
  bool use_forecast = true;
  CorrectionMode correction_mode = CorrectionMode::kSoftargmax;

  // Event budget: the full-scale counts, multiplied by `scale` before use.
  double scale = 1.0;
  std::int64_t events_per_stack = 600000;
  std::int64_t min_events_between_frames = 1200000;
  int stacks_per_frame_pair = 2;
  bool filter_frames = false;

  Intrinsics intrinsics{260.0, 260.0, 160.0, 120.0, 320, 240};
  int corr_radius = 3;
  double softargmax_temperature = 0.1;
  double peak_min = 0.07;  // correlation peak floor; weaker grids are masked
  double oracle_noise_std = 0.0;
  double assoc_radius = 5.0;  // patch-to-track pairing limit, pixels

  PipelineConfig() {
    encoder.channels = 4;
    encoder.msf_half = 8;
    encoder.msf_quarter = 12;
    encoder.matching_channels = 8;
    encoder.context_channels = 8;
    encoder.init_range = 0.3;  // keeps random matching features non-degenerate at these widths
  }

  std::int64_t scaled_events_per_stack() const;
  std::int64_t scaled_min_events_between_frames() const;
};

struct TrajectoryEntry {
  double timestamp = 0.0;
  Se3Pose pose;
  bool forecast = false;
};

struct TrajectoryEstimate {
  std::vector<TrajectoryEntry> entries;  // frame poses, plus flagged forecasts

  std::vector<TrajectoryEntry> frame_entries() const;
};

// One frame per line of frames.txt; events and tracks are optional extras.
struct Dataset {
  std::vector<double> frame_times;
  std::vector<ImageF32> frames;
  EventStream events;
  std::vector<TrackPoint> tracks;
};

Dataset load_dataset(const std::string& dir);

// Interleaves frame samples with event-stack samples: for the pair (a, b),
// one stack at the mid-timestamp and one at b's timestamp, each holding the
// last scaled_events_per_stack events at or before its instant. Empty slices
// produce no stack. With filter_frames on, a successor frame arrives only
// once at least scaled_min_events_between_frames events separate it from the
// last kept frame.
std::vector<SensorSample> prepare_stream(const std::vector<double>& frame_times,
                                         const std::vector<ImageF32>& frames,
                                         const EventStream& events, const PipelineConfig& cfg);

class Pipeline {
 public:
  Pipeline(const PipelineConfig& cfg, int width, int height);
  ~Pipeline();
  Pipeline(Pipeline&&) noexcept;
  Pipeline& operator=(Pipeline&&) noexcept;

  // Ground-truth tracks for oracle corrections; required before the first
  // frame in oracle mode.
  void set_oracle_tracks(const std::vector<TrackPoint>& tracks);

  void process_sample(const SensorSample& sample);

  const PatchGraph& graph() const;
  const FusionState& encoder_state() const;
  TrajectoryEstimate trajectory() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

TrajectoryEstimate run_pipeline(const Dataset& data, const PipelineConfig& cfg);

// TUM lines for the non-forecast entries.
void write_trajectory_tum(const std::string& path, const TrajectoryEstimate& estimate);

}  // namespace ramp
