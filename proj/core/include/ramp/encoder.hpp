#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ramp/events.hpp"
#include "ramp/tensor.hpp"
#include "ramp/weights.hpp"

namespace ramp {

enum class Sensor { kEvents = 0, kImage = 1 };

struct EncoderConfig {
  int channels = 32;           // per-scale width, shared by s = 0, 1, 2
  int msf_half = 64;           // width at 1/2 resolution inside the fusion trunk
  int msf_quarter = 96;        // width at 1/4 resolution inside the fusion trunk
  int matching_channels = 128;
  int context_channels = 384;
  int frame_channels = 1;      // image-branch input channels (1 or 3)
  int height = 480, width = 640;
  std::uint64_t init_seed = 7;
  double init_range = 0.1;     // uniform(-range, range) when no archive given
};

// Timestamped payload: a C x H x W frame or a 5 x H x W event stack.
struct SensorSample {
  double timestamp = 0.0;
  Sensor sensor = Sensor::kImage;
  Tensor3 payload;

  static SensorSample frame(double t, Tensor3 image);
  static SensorSample stack(double t, const EventStack& s);
};

// Recurrent per-pixel state: per-sensor, per-scale (h, c) plus the shared
// cross-sensor summary maps.
struct FusionState {
  std::array<std::array<Tensor3, 3>, 2> h, c;  // [sensor][scale]
  std::array<Tensor3, 3> sigma;
  double last_timestamp = 0.0;
  bool empty = true;
};

struct FeatureMaps {
  Tensor3 matching;  // C_m x H/4 x W/4
  Tensor3 context;   // C_c x H/4 x W/4
  double timestamp = 0.0;
};

enum class FusionHead { kMatching = 0, kContext = 1 };

struct StageTimes {
  double sensor_encode_ms = 0;
  double intra_ms = 0;
  double inter_ms = 0;
  double msf_ms = 0;
  double total_ms = 0;
};

// The expected parameter catalog for a configuration: canonical names with
// shapes. Both random initialization and archive validation walk this list,
// so an archive loads iff it holds exactly these tensors.
struct ParamSpec {
  std::string name;
  std::vector<std::uint32_t> shape;
};
std::vector<ParamSpec> encoder_param_specs(const EncoderConfig& cfg);

class Encoder {
 public:
  // Seeded random initialization.
  explicit Encoder(const EncoderConfig& cfg);
  // Validates the archive against encoder_param_specs: missing tensors,
  // shape mismatches, and surplus tensors are all named in the error.
  Encoder(const EncoderConfig& cfg, const WeightArchive& archive);

  const EncoderConfig& config() const { return cfg_; }
  const WeightArchive& weights() const { return *weights_; }

  FusionState make_state() const;

  // Per-sensor convolutions at strides 1, 2, 4 (kernels 1, 3, 5).
  std::array<Tensor3, 3> sensor_encode(const SensorSample& sample) const;
  // Pixel-wise recurrent update of the given sensor's (h, c) at every scale.
  void intra_sensor_fuse(FusionState& state, Sensor sensor,
                         const std::array<Tensor3, 3>& f) const;
  // Per-pixel tanh(W [h ; sigma_prev] + b) refresh of the shared maps.
  void inter_sensor_fuse(FusionState& state, Sensor sensor) const;
  // Multi-scale fusion trunk for one head.
  Tensor3 multiscale_fuse(const Tensor3& s0, const Tensor3& s1, const Tensor3& s2,
                          FusionHead head) const;
  // Full step: encode, fuse, and produce both heads. Rejects samples older
  // than the state.
  FeatureMaps encode_next(FusionState& state, const SensorSample& sample,
                          StageTimes* times = nullptr) const;

  struct Impl;  // weight bindings, defined in the implementation

 private:
  EncoderConfig cfg_;
  std::shared_ptr<const WeightArchive> weights_;
  std::shared_ptr<const Impl> impl_;
};

struct BenchStage {
  std::string name;
  double mean_ms = 0;
};
struct BenchReport {
  int workers = 1;
  int n_samples = 0;
  double parallel_ms_per_sample = 0;
  double sequential_ms_per_sample = 0;  // in-repo serial reference
  double speedup = 0;
  std::vector<BenchStage> stages;       // parallel-path stage means
};

// Times encode_next over a synthetic frame/stack stream at the configured
// resolution, once with the requested worker count and once with the serial
// reference (workers = 1).
BenchReport bench_encoder(const EncoderConfig& cfg, int n_samples, int workers);

}  // namespace ramp
