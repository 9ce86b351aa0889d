#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ramp/image.hpp"

namespace ramp {

struct Event {
  double t = 0.0;
  std::uint16_t x = 0, y = 0;
  std::int8_t polarity = 1;  // +1 or -1
};

struct EventStream {
  int width = 0, height = 0;
  std::vector<Event> events;  // nondecreasing t
};

// Spatio-temporal histogram of signed polarities: 5 equal time bins over
// [t_start, t_end], one H x W plane per bin.
struct EventStack {
  static constexpr int kBins = 5;
  int width = 0, height = 0;
  double t_start = 0.0, t_end = 0.0;
  std::vector<float> data;  // kBins * height * width, bin-major

  EventStack() = default;
  EventStack(int width_, int height_, double t_start_, double t_end_)
      : width(width_), height(height_), t_start(t_start_), t_end(t_end_),
        data(static_cast<std::size_t>(kBins) * width_ * height_, 0.0f) {}

  float& at(int bin, int y, int x) {
    return data[(static_cast<std::size_t>(bin) * height + y) * width + x];
  }
  float at(int bin, int y, int x) const {
    return data[(static_cast<std::size_t>(bin) * height + y) * width + x];
  }
};

struct EgmConfig {
  double contrast_threshold = 0.2;
  double log_eps = 1e-3;  // intensity offset inside the log
};

// Bins events into a 5-bin stack. Events on the end boundary land in the last
// bin. Rejects events outside the window or the image bounds, naming the
// offending index.
EventStack build_stack(std::span<const Event> events, int width, int height,
                       double t_start, double t_end);

// The at-most-n events with the largest timestamps <= t, in time order.
std::span<const Event> slice_last_n(const EventStream& stream, std::size_t n, double t);

// Threshold-crossing event synthesis from intensity keyframes with linear
// interpolation of log intensity between frames. The per-pixel reference
// level resets to the exact crossing level, so between consecutive events of
// a pixel the accumulated log change is exactly the contrast threshold.
// Deterministic: the merged stream is sorted by (t, y, x, polarity).
EventStream synthesize_events(std::span<const ImageF32> frames,
                              std::span<const double> timestamps,
                              const EgmConfig& cfg);

// EVT0 container: "EVT0" magic, u32 width, u32 height, u64 count, then
// count records of (f64 t, u16 x, u16 y, i8 polarity, 3 zero bytes), all
// little-endian. Readers validate magic, bounds, polarity, and time order,
// reporting the byte offset of the first offense.
void write_evt0(const std::string& path, const EventStream& stream);
EventStream read_evt0(const std::string& path);

}  // namespace ramp
