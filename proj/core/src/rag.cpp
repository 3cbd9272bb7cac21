#include "graphleaf/rag.hpp"

#include <algorithm>
#include <cmath>

#include "graphleaf/error.hpp"

namespace graphleaf {

RegionGraph build_rag(const SegmentMap& seg, const NormalizedImage& image, std::uint32_t label) {
  if (seg.width != image.width || seg.height != image.height)
    throw InputError("segment map and image dimensions differ");
  if (seg.labels.size() != image.pixel_count() || seg.num_segments <= 0)
    throw InputError("segment map does not cover the image");

  const auto n = static_cast<std::size_t>(seg.num_segments);
  std::vector<double> sums(n * 3, 0.0);
  std::vector<std::size_t> counts(n, 0);
  for (std::size_t p = 0; p < seg.labels.size(); ++p) {
    const auto l = seg.labels[p];
    if (l < 0 || static_cast<std::size_t>(l) >= n) throw InputError("segment label out of range");
    ++counts[l];
    for (int c = 0; c < 3; ++c) sums[l * 3 + c] += image.pixels[p * 3 + c];
  }

  RegionGraph g;
  g.node_count = static_cast<std::uint32_t>(n);
  g.label = label;
  g.node_features.resize(n * 3);
  for (std::size_t i = 0; i < n; ++i) {
    if (counts[i] == 0) throw InputError("segment labels are not contiguous");
    for (int c = 0; c < 3; ++c)
      g.node_features[i * 3 + c] = static_cast<float>(sums[i * 3 + c] / static_cast<double>(counts[i]));
  }

  auto link = [&](std::int32_t a, std::int32_t b) {
    if (a == b) return;
    const auto u = static_cast<std::uint32_t>(std::min(a, b));
    const auto v = static_cast<std::uint32_t>(std::max(a, b));
    g.edges.emplace_back(u, v);
  };
  for (int y = 0; y < seg.height; ++y) {
    for (int x = 0; x < seg.width; ++x) {
      if (x + 1 < seg.width) link(seg.at(y, x), seg.at(y, x + 1));
      if (y + 1 < seg.height) link(seg.at(y, x), seg.at(y + 1, x));
    }
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  return g;
}

std::string validate_graph(const RegionGraph& graph) {
  if (graph.node_features.size() != static_cast<std::size_t>(graph.node_count) * RegionGraph::kFeatureDim)
    return "feature matrix size does not match node count";
  for (float f : graph.node_features)
    if (!std::isfinite(f) || f < -1.0f - 1e-6f || f > 1.0f + 1e-6f) return "feature value outside [-1, 1]";
  for (std::size_t i = 0; i < graph.edges.size(); ++i) {
    const auto [u, v] = graph.edges[i];
    if (u == v) return "self-loop";
    if (u > v) return "edge not in canonical u < v form";
    if (v >= graph.node_count) return "edge endpoint out of range";
    if (i > 0 && !(graph.edges[i - 1] < graph.edges[i])) return "edges not sorted or duplicated";
  }
  return {};
}

}  // namespace graphleaf
