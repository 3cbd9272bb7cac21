#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "graphleaf/image.hpp"
#include "graphleaf/slic.hpp"

namespace graphleaf {

/// Undirected edge stored canonically with first < second.
using Edge = std::pair<std::uint32_t, std::uint32_t>;

/// Region adjacency graph of one image: a node per superpixel carrying its
/// mean normalized RGB, an edge per pair of 4-adjacent superpixels.
struct RegionGraph {
  std::uint32_t node_count = 0;
  std::vector<float> node_features;  // node_count x 3, row-major
  std::vector<Edge> edges;           // sorted, u < v, unique
  std::uint32_t label = 0;

  static constexpr std::uint32_t kFeatureDim = 3;

  bool operator==(const RegionGraph&) const = default;
};

/// Throws InputError on dimension mismatch or an invalid segment map.
RegionGraph build_rag(const SegmentMap& seg, const NormalizedImage& image, std::uint32_t label);

/// Empty string when the graph satisfies every RegionGraph invariant,
/// otherwise a description of the first violation.
std::string validate_graph(const RegionGraph& graph);

}  // namespace graphleaf
