#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "graphleaf/rag.hpp"

namespace graphleaf {

enum class SplitTag : std::uint8_t { train = 0, test = 1 };

const char* to_string(SplitTag tag);

struct GraphDataset {
  std::vector<RegionGraph> graphs;
  std::vector<std::string> class_names;
  SplitTag split = SplitTag::train;

  bool operator==(const GraphDataset&) const = default;
};

/// Binary cache layout, all integers little-endian:
///
///   "RAGC" | u16 version=1
///   u32 class count, then per class: u32 byte length + UTF-8 name
///   u32 graph count, then per graph:
///     u32 label | u32 N | u32 E | N*3 f32 features (row-major) | E*2 u32 (u < v)
///   u8 split tag (0 = train, 1 = test)
inline constexpr char kCacheMagic[4] = {'R', 'A', 'G', 'C'};
inline constexpr std::uint16_t kCacheVersion = 1;

std::vector<std::uint8_t> encode_cache(const GraphDataset& dataset);
/// Throws FormatError on bad magic/version and CorruptionError (with the
/// byte offset) on truncated or inconsistent payloads.
GraphDataset decode_cache(const std::vector<std::uint8_t>& bytes);

/// Throws InputError for an invalid dataset and IoError when the file
/// cannot be written.
void write_cache(const GraphDataset& dataset, const std::filesystem::path& path);
GraphDataset read_cache(const std::filesystem::path& path);

/// JSON rendering for inspection. With `include_graphs` every node feature
/// and edge is emitted, otherwise only the summary.
std::string dataset_to_json(const GraphDataset& dataset, bool include_graphs);

struct DatasetSummary {
  std::vector<std::size_t> class_histogram;
  std::size_t min_nodes = 0, max_nodes = 0;
  double mean_nodes = 0.0;
  std::size_t min_edges = 0, max_edges = 0;
  double mean_edges = 0.0;
};

DatasetSummary summarize(const GraphDataset& dataset);

}  // namespace graphleaf
