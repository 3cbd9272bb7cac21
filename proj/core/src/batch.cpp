#include "graphleaf/batch.hpp"

#include <algorithm>
#include <numeric>

#include "graphleaf/error.hpp"

namespace graphleaf {

GraphBatch make_batch(std::span<const RegionGraph> graphs, std::span<const std::size_t> order) {
  GraphBatch batch;
  batch.node_offsets.push_back(0);
  batch.edge_offsets.push_back(0);
  for (std::size_t idx : order) {
    if (idx >= graphs.size()) throw InputError("batch index out of range");
    const auto& g = graphs[idx];
    const auto offset = static_cast<std::uint32_t>(batch.node_count());
    const auto graph_id = static_cast<std::uint32_t>(batch.graph_count());
    batch.features.insert(batch.features.end(), g.node_features.begin(), g.node_features.end());
    batch.membership.insert(batch.membership.end(), g.node_count, graph_id);
    for (const auto& [u, v] : g.edges) batch.edges.emplace_back(u + offset, v + offset);
    batch.labels.push_back(g.label);
    batch.source_index.push_back(idx);
    batch.node_offsets.push_back(static_cast<std::uint32_t>(batch.node_count()));
    batch.edge_offsets.push_back(static_cast<std::uint32_t>(batch.edges.size()));
  }
  return batch;
}

std::vector<GraphBatch> make_batches(std::span<const RegionGraph> graphs, std::size_t batch_size, bool shuffle,
                                     Rng& rng) {
  if (batch_size == 0) throw InputError("batch size must be >= 1");
  std::vector<std::size_t> order(graphs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle) rng.shuffle(std::span<std::size_t>(order));

  std::vector<GraphBatch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t len = std::min(batch_size, order.size() - start);
    batches.push_back(make_batch(graphs, std::span<const std::size_t>(order).subspan(start, len)));
  }
  return batches;
}

std::vector<GraphBatch> make_batches(std::span<const RegionGraph> graphs, std::size_t batch_size, bool shuffle,
                                     std::uint64_t seed) {
  Rng rng = Rng(seed).fork("shuffle");
  return make_batches(graphs, batch_size, shuffle, rng);
}

}  // namespace graphleaf
