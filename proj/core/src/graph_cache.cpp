#include "graphleaf/graph_cache.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include <nlohmann/json.hpp>

#include "graphleaf/error.hpp"
#include "bytes.hpp"

namespace graphleaf {
using detail::ByteReader;
using detail::ByteWriter;

namespace {

void validate_dataset(const GraphDataset& ds) {
  for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
    const auto& g = ds.graphs[i];
    if (g.label >= ds.class_names.size())
      throw InputError("graph " + std::to_string(i) + " label exceeds class count");
    if (auto why = validate_graph(g); !why.empty())
      throw InputError("graph " + std::to_string(i) + ": " + why);
  }
}

}  // namespace

const char* to_string(SplitTag tag) { return tag == SplitTag::train ? "train" : "test"; }

std::vector<std::uint8_t> encode_cache(const GraphDataset& dataset) {
  validate_dataset(dataset);
  ByteWriter w;
  w.raw(kCacheMagic, 4);
  w.u16(kCacheVersion);
  w.u32(static_cast<std::uint32_t>(dataset.class_names.size()));
  for (const auto& name : dataset.class_names) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.raw(name.data(), name.size());
  }
  w.u32(static_cast<std::uint32_t>(dataset.graphs.size()));
  for (const auto& g : dataset.graphs) {
    w.u32(g.label);
    w.u32(g.node_count);
    w.u32(static_cast<std::uint32_t>(g.edges.size()));
    for (float f : g.node_features) w.f32(f);
    for (const auto& [u, v] : g.edges) {
      w.u32(u);
      w.u32(v);
    }
  }
  w.u8(static_cast<std::uint8_t>(dataset.split));
  return w.take();
}

GraphDataset decode_cache(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 6 || std::memcmp(bytes.data(), kCacheMagic, 4) != 0)
    throw FormatError("not a graph cache (bad magic)");
  ByteReader r(bytes);
  r.str(4, "magic");
  const auto version = r.u16("version");
  if (version != kCacheVersion) throw FormatError("unsupported cache version " + std::to_string(version));

  GraphDataset ds;
  const auto class_count = r.u32("class count");
  r.need(static_cast<std::size_t>(class_count) * 4, "class table");
  for (std::uint32_t c = 0; c < class_count; ++c) {
    const auto len = r.u32("class name length");
    ds.class_names.push_back(r.str(len, "class name"));
  }

  const auto graph_count = r.u32("graph count");
  r.need(static_cast<std::size_t>(graph_count) * 12, "graph headers");
  ds.graphs.reserve(graph_count);
  for (std::uint32_t gi = 0; gi < graph_count; ++gi) {
    const auto start = r.offset();
    RegionGraph g;
    g.label = r.u32("graph label");
    g.node_count = r.u32("node count");
    const auto edge_count = r.u32("edge count");
    r.need(static_cast<std::size_t>(g.node_count) * 12 + static_cast<std::size_t>(edge_count) * 8, "graph payload");
    g.node_features.resize(static_cast<std::size_t>(g.node_count) * 3);
    for (auto& f : g.node_features) f = r.f32("node features");
    g.edges.resize(edge_count);
    for (auto& [u, v] : g.edges) {
      u = r.u32("edge endpoint");
      v = r.u32("edge endpoint");
    }
    if (g.label >= ds.class_names.size())
      throw CorruptionError("graph " + std::to_string(gi) + " label exceeds class count", start);
    if (auto why = validate_graph(g); !why.empty())
      throw CorruptionError("graph " + std::to_string(gi) + ": " + why, start);
    ds.graphs.push_back(std::move(g));
  }
  const auto tag = r.u8("split tag");
  if (tag > 1) throw CorruptionError("unknown split tag", r.offset() - 1);
  ds.split = static_cast<SplitTag>(tag);
  if (r.remaining() != 0) throw CorruptionError("trailing bytes after cache payload", r.offset());
  return ds;
}

void write_cache(const GraphDataset& dataset, const std::filesystem::path& path) {
  const auto bytes = encode_cache(dataset);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

GraphDataset read_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_cache(bytes);
}

DatasetSummary summarize(const GraphDataset& dataset) {
  DatasetSummary s;
  s.class_histogram.assign(dataset.class_names.size(), 0);
  if (dataset.graphs.empty()) return s;
  s.min_nodes = s.min_edges = std::numeric_limits<std::size_t>::max();
  for (const auto& g : dataset.graphs) {
    if (g.label < s.class_histogram.size()) ++s.class_histogram[g.label];
    s.min_nodes = std::min<std::size_t>(s.min_nodes, g.node_count);
    s.max_nodes = std::max<std::size_t>(s.max_nodes, g.node_count);
    s.min_edges = std::min(s.min_edges, g.edges.size());
    s.max_edges = std::max(s.max_edges, g.edges.size());
    s.mean_nodes += g.node_count;
    s.mean_edges += static_cast<double>(g.edges.size());
  }
  s.mean_nodes /= static_cast<double>(dataset.graphs.size());
  s.mean_edges /= static_cast<double>(dataset.graphs.size());
  return s;
}

std::string dataset_to_json(const GraphDataset& dataset, bool include_graphs) {
  const auto s = summarize(dataset);
  nlohmann::json j;
  j["split"] = to_string(dataset.split);
  j["class_names"] = dataset.class_names;
  j["graph_count"] = dataset.graphs.size();
  auto& hist = j["class_histogram"] = nlohmann::json::object();
  for (std::size_t c = 0; c < dataset.class_names.size(); ++c) hist[dataset.class_names[c]] = s.class_histogram[c];
  j["nodes"] = {{"min", s.min_nodes}, {"max", s.max_nodes}, {"mean", s.mean_nodes}};
  j["edges"] = {{"min", s.min_edges}, {"max", s.max_edges}, {"mean", s.mean_edges}};
  if (include_graphs) {
    auto& graphs = j["graphs"] = nlohmann::json::array();
    for (const auto& g : dataset.graphs) {
      nlohmann::json feats = nlohmann::json::array();
      for (std::uint32_t i = 0; i < g.node_count; ++i)
        feats.push_back({g.node_features[i * 3], g.node_features[i * 3 + 1], g.node_features[i * 3 + 2]});
      nlohmann::json edges = nlohmann::json::array();
      for (const auto& [u, v] : g.edges) edges.push_back({u, v});
      graphs.push_back({{"label", g.label}, {"node_count", g.node_count}, {"features", feats}, {"edges", edges}});
    }
  }
  return j.dump(2);
}

}  // namespace graphleaf
