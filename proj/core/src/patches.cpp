#include "ramp/patches.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "ramp/error.hpp"
#include "ramp/rng.hpp"

namespace ramp {

const FrameRecord* PatchGraph::frame(int index) const {
  for (const auto& f : frames)
    if (f.index == index) return &f;
  return nullptr;
}

FrameRecord* PatchGraph::frame(int index) {
  for (auto& f : frames)
    if (f.index == index) return &f;
  return nullptr;
}

const Patch* PatchGraph::patch(int patch_id) const {
  auto it = std::lower_bound(patches.begin(), patches.end(), patch_id,
                             [](const Patch& p, int id) { return p.patch_index < id; });
  if (it == patches.end() || it->patch_index != patch_id) return nullptr;
  return &*it;
}

Patch* PatchGraph::patch(int patch_id) {
  return const_cast<Patch*>(static_cast<const PatchGraph*>(this)->patch(patch_id));
}

std::vector<std::pair<int, int>> extract_corners(const ImageF32& density,
                                                 const PatchConfig& cfg,
                                                 std::uint64_t fallback_seed) {
  const int w = density.width, h = density.height;
  for (float v : density.v)
    if (!(v >= 0.0f)) throw Error("extract_corners: density must be nonnegative");

  std::vector<float> score(static_cast<std::size_t>(w) * h, 0.0f);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float s = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= h) continue;
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = x + dx;
          if (xx < 0 || xx >= w) continue;
          s += density.at(yy, xx);
        }
      }
      score[static_cast<std::size_t>(y) * w + x] = s;
    }
  }

  const int b = cfg.border;
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(w) * h);
  for (int y = b; y < h - b; ++y)
    for (int x = b; x < w - b; ++x)
      if (score[static_cast<std::size_t>(y) * w + x] > 0)
        order.push_back(y * w + x);
  std::sort(order.begin(), order.end(), [&](int lhs, int rhs) {
    const float sl = score[lhs], sr = score[rhs];
    if (sl != sr) return sl > sr;
    return lhs < rhs;  // row-major tie-break
  });

  std::vector<unsigned char> suppressed(static_cast<std::size_t>(w) * h, 0);
  std::vector<std::pair<int, int>> out;
  const auto suppress_around = [&](int cx, int cy) {
    const int r = cfg.nms_radius;
    for (int y = std::max(0, cy - r); y <= std::min(h - 1, cy + r); ++y)
      for (int x = std::max(0, cx - r); x <= std::min(w - 1, cx + r); ++x)
        suppressed[static_cast<std::size_t>(y) * w + x] = 1;
  };

  for (int idx : order) {
    if (static_cast<int>(out.size()) >= cfg.n_patches) break;
    if (suppressed[idx]) continue;
    const int y = idx / w, x = idx % w;
    out.emplace_back(x, y);
    suppress_around(x, y);
  }

  if (static_cast<int>(out.size()) < cfg.n_patches && h - 1 - b >= b && w - 1 - b >= b) {
    Rng rng(fallback_seed);
    const int max_attempts = 1000 * cfg.n_patches;
    for (int attempt = 0;
         attempt < max_attempts && static_cast<int>(out.size()) < cfg.n_patches;
         ++attempt) {
      const int x = rng.uniform_int(b, w - 1 - b);
      const int y = rng.uniform_int(b, h - 1 - b);
      if (suppressed[static_cast<std::size_t>(y) * w + x]) continue;
      out.emplace_back(x, y);
      suppress_around(x, y);
    }
  }
  return out;
}

void backfill_depth_init(const PatchGraph& graph, std::vector<Patch>& new_patches) {
  double init = 1.0;
  if (!graph.patches.empty()) {
    std::vector<double> depths;
    depths.reserve(graph.patches.size());
    for (const auto& p : graph.patches) depths.push_back(p.inv_depth);
    std::sort(depths.begin(), depths.end());
    const std::size_t n = depths.size();
    init = n % 2 == 1 ? depths[n / 2] : 0.5 * (depths[n / 2 - 1] + depths[n / 2]);
  }
  for (auto& p : new_patches) p.inv_depth = init;
}

void add_frame(PatchGraph& graph, FrameRecord record, std::vector<Patch> new_patches,
               const PatchConfig& cfg) {
  if (!graph.frames.empty() && record.index != graph.frames.back().index + 1)
    throw Error("add_frame: frame index " + std::to_string(record.index) +
                " does not follow " + std::to_string(graph.frames.back().index));
  const int j = record.index;
  const int oldest_keep = j - cfg.window_r;

  graph.frames.push_back(std::move(record));
  while (!graph.frames.empty() && graph.frames.front().index < oldest_keep)
    graph.frames.pop_front();

  std::unordered_set<int> dead;
  std::erase_if(graph.patches, [&](const Patch& p) {
    if (p.frame_index < oldest_keep) {
      dead.insert(p.patch_index);
      return true;
    }
    return false;
  });
  std::erase_if(graph.edges, [&](const PatchEdge& e) {
    return e.frame_index < oldest_keep || dead.count(e.patch_id) != 0;
  });

  for (const auto& p : graph.patches) {
    PatchEdge e;
    e.patch_id = p.patch_index;
    e.frame_index = j;
    e.center = p.center();
    graph.edges.push_back(e);
  }
  for (const auto& p : new_patches) {
    if (p.frame_index != j)
      throw Error("add_frame: new patch source frame does not match the new frame");
    for (const auto& f : graph.frames) {
      PatchEdge e;
      e.patch_id = p.patch_index;
      e.frame_index = f.index;
      e.center = p.center();
      graph.edges.push_back(e);
    }
  }
  for (auto& p : new_patches) graph.patches.push_back(std::move(p));
}

std::int64_t expected_edge_count(int frames, int n_patches, int window_r) {
  const std::int64_t w = std::min<std::int64_t>(frames, window_r + 1);
  return static_cast<std::int64_t>(n_patches) * w * w;
}

}  // namespace ramp
