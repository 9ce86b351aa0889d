#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <vector>

#include "ramp/encoder.hpp"
#include "ramp/geometry.hpp"
#include "ramp/image.hpp"

namespace ramp {

struct PatchConfig {
  int n_patches = 64;
  int p = 3;
  int nms_radius = 8;
  int window_r = 12;  // lookback: frame j keeps frames {j - window_r, ..., j}
  int border = 3;     // pixels near the image edge never selected
};

struct FrameRecord {
  int index = 0;
  double timestamp = 0.0;
  Se3Pose pose;
  std::shared_ptr<const FeatureMaps> features;
};

// One patch-to-frame observation. center caches the projected target pixel;
// delta and sigma come from the correction estimator. sigma entries are
// per-axis inverse variances (diagonal weight), zero to mask the edge out.
struct PatchEdge {
  int patch_id = 0;
  int frame_index = 0;
  Vec2 center{0, 0};
  Vec2 delta{0, 0};
  Vec2 sigma{1, 1};
  bool masked = false;
};

// Bipartite patch/frame graph over a sliding frame window.
struct PatchGraph {
  std::deque<FrameRecord> frames;
  std::vector<Patch> patches;  // live patches, ordered by insertion
  std::vector<PatchEdge> edges;

  const FrameRecord* frame(int index) const;
  FrameRecord* frame(int index);
  const Patch* patch(int patch_id) const;
  Patch* patch(int patch_id);
  int oldest_frame_index() const { return frames.empty() ? -1 : frames.front().index; }
  int newest_frame_index() const { return frames.empty() ? -1 : frames.back().index; }
};

// Greedy non-maximum suppression over a 3x3 box-summed density score.
// Highest score first, row-major tie-break, Chebyshev suppression radius,
// border exclusion; pads with seeded random positions (still respecting the
// radius and border) when fewer than n_patches positive-score pixels exist.
std::vector<std::pair<int, int>> extract_corners(const ImageF32& density,
                                                 const PatchConfig& cfg,
                                                 std::uint64_t fallback_seed = 0);

// Median inverse depth of live patches (mean of the middle two for even
// counts), or 1.0 for an empty graph, written into new_patches.
void backfill_depth_init(const PatchGraph& graph, std::vector<Patch>& new_patches);

// Appends the frame, connects new patches to every retained frame and every
// retained patch to the new frame, then evicts everything older than the
// window (frames, their patches, and edges touching either).
void add_frame(PatchGraph& graph, FrameRecord record, std::vector<Patch> new_patches,
               const PatchConfig& cfg);

// Retained-window edge count after `frames` frames with n new patches each;
// the closed form the graph must match at all times.
std::int64_t expected_edge_count(int frames, int n_patches, int window_r);

}  // namespace ramp
