#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "graphleaf/rag.hpp"
#include "graphleaf/rng.hpp"

namespace graphleaf {

/// Disjoint union of several graphs processed in one pass. Node ids are
/// global; graph g owns nodes [node_offsets[g], node_offsets[g+1]) and
/// edges [edge_offsets[g], edge_offsets[g+1]).
struct GraphBatch {
  std::size_t feature_dim = RegionGraph::kFeatureDim;
  std::vector<float> features;  // node_count x feature_dim
  std::vector<Edge> edges;
  std::vector<std::uint32_t> membership;  // node -> graph, non-decreasing
  std::vector<std::uint32_t> node_offsets;
  std::vector<std::uint32_t> edge_offsets;
  std::vector<std::uint32_t> labels;
  std::vector<std::size_t> source_index;  // position of each graph in the input list

  std::size_t graph_count() const { return labels.size(); }
  std::size_t node_count() const { return membership.size(); }
};

/// Packs `graphs[order[i]]` in the given order.
GraphBatch make_batch(std::span<const RegionGraph> graphs, std::span<const std::size_t> order);

/// Splits the (optionally shuffled) graph list into runs of at most
/// `batch_size`. Empty input gives an empty list.
std::vector<GraphBatch> make_batches(std::span<const RegionGraph> graphs, std::size_t batch_size, bool shuffle,
                                     Rng& rng);
std::vector<GraphBatch> make_batches(std::span<const RegionGraph> graphs, std::size_t batch_size, bool shuffle,
                                     std::uint64_t seed);

}  // namespace graphleaf
