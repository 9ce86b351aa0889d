#include "ramp/events.hpp"

#include <algorithm>
#include <cmath>

#include "ramp/error.hpp"
#include "ramp/parallel.hpp"

namespace ramp {

EventStack build_stack(std::span<const Event> events, int width, int height,
                       double t_start, double t_end) {
  if (width <= 0 || height <= 0) throw Error("build_stack: non-positive image size");
  if (!(t_end > t_start)) throw Error("build_stack: window end must exceed start");

  EventStack stack(width, height, t_start, t_end);
  const double span = t_end - t_start;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    if (e.x >= width || e.y >= height) {
      throw Error("build_stack: event " + std::to_string(i) + " at (" +
                  std::to_string(e.x) + "," + std::to_string(e.y) +
                  ") outside " + std::to_string(width) + "x" + std::to_string(height));
    }
    if (e.t < t_start || e.t > t_end) {
      throw Error("build_stack: event " + std::to_string(i) + " outside window");
    }
    int bin = static_cast<int>((e.t - t_start) / span * EventStack::kBins);
    bin = std::min(bin, EventStack::kBins - 1);
    stack.at(bin, e.y, e.x) += static_cast<float>(e.polarity);
  }
  return stack;
}

std::span<const Event> slice_last_n(const EventStream& stream, std::size_t n, double t) {
  const auto& ev = stream.events;
  auto end_it = std::upper_bound(ev.begin(), ev.end(), t,
                                 [](double value, const Event& e) { return value < e.t; });
  const std::size_t avail = static_cast<std::size_t>(end_it - ev.begin());
  const std::size_t take = std::min(n, avail);
  return std::span<const Event>(ev.data() + (avail - take), take);
}

EventStream synthesize_events(std::span<const ImageF32> frames,
                              std::span<const double> timestamps,
                              const EgmConfig& cfg) {
  if (frames.size() != timestamps.size())
    throw Error("synthesize_events: frame/timestamp count mismatch");
  if (frames.empty()) throw Error("synthesize_events: no frames");
  if (!(cfg.contrast_threshold > 0))
    throw Error("synthesize_events: contrast threshold must be positive");
  const int w = frames[0].width, h = frames[0].height;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    if (frames[k].width != w || frames[k].height != h)
      throw Error("synthesize_events: frame " + std::to_string(k) + " size mismatch");
    if (k > 0 && !(timestamps[k] > timestamps[k - 1]))
      throw Error("synthesize_events: timestamps must strictly increase");
    for (float value : frames[k].v) {
      if (!(value >= 0.0f))
        throw Error("synthesize_events: negative intensity in frame " + std::to_string(k));
    }
  }

  EventStream out;
  out.width = w;
  out.height = h;
  if (frames.size() == 1) return out;

  const double C = cfg.contrast_threshold;
  std::vector<std::vector<Event>> rows(h);

  parallel_for(0, h, [&](std::int64_t y0, std::int64_t y1) {
    for (std::int64_t y = y0; y < y1; ++y) {
      auto& row_events = rows[y];
      for (int x = 0; x < w; ++x) {
        double ref = std::log(static_cast<double>(frames[0].at(y, x)) + cfg.log_eps);
        double prev = ref;
        for (std::size_t k = 0; k + 1 < frames.size(); ++k) {
          const double next =
              std::log(static_cast<double>(frames[k + 1].at(y, x)) + cfg.log_eps);
          if (next == prev) continue;
          const double pol = next > prev ? 1.0 : -1.0;
          const double t0 = timestamps[k], t1 = timestamps[k + 1];
          for (;;) {
            const double cross = ref + pol * C;
            const bool hit = pol > 0 ? (cross > prev && cross <= next)
                                     : (cross < prev && cross >= next);
            if (!hit) break;
            const double t = t0 + (cross - prev) / (next - prev) * (t1 - t0);
            row_events.push_back(Event{t, static_cast<std::uint16_t>(x),
                                       static_cast<std::uint16_t>(y),
                                       static_cast<std::int8_t>(pol > 0 ? 1 : -1)});
            ref = cross;
          }
          prev = next;
        }
      }
    }
  });

  std::size_t total = 0;
  for (const auto& r : rows) total += r.size();
  out.events.reserve(total);
  for (const auto& r : rows) out.events.insert(out.events.end(), r.begin(), r.end());
  std::sort(out.events.begin(), out.events.end(), [](const Event& a, const Event& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.y != b.y) return a.y < b.y;
    if (a.x != b.x) return a.x < b.x;
    return a.polarity < b.polarity;
  });
  return out;
}

}  // namespace ramp
