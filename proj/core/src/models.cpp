#include "graphleaf/models.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "graphleaf/error.hpp"

namespace graphleaf {
namespace {

struct ParamSpec {
  std::string name;
  Shape shape;
  std::size_t fan_in;  // 0 = zero-initialised bias
};

std::vector<ParamSpec> param_specs(const ModelConfig& cfg) {
  cfg.validate();
  const auto hidden = static_cast<std::size_t>(cfg.hidden_dim);
  const auto heads = static_cast<std::size_t>(cfg.heads);
  std::vector<ParamSpec> specs;
  std::size_t width = static_cast<std::size_t>(cfg.input_dim);

  const int gcn_count = cfg.active_gcn_layers();
  for (int i = 0; i < gcn_count; ++i) {
    const std::string p = "gcn" + std::to_string(i) + ".";
    specs.push_back({p + "weight", {width, hidden}, width});
    specs.push_back({p + "bias", {hidden}, 0});
    width = hidden;
  }
  const int gat_count = cfg.active_gat_layers();
  for (int i = 0; i < gat_count; ++i) {
    const bool last = i == gat_count - 1;
    const std::size_t head_dim = last ? hidden : hidden / heads;
    const std::string p = "gat" + std::to_string(i) + ".";
    specs.push_back({p + "weight", {width, heads * head_dim}, width});
    specs.push_back({p + "att_target", {heads, head_dim}, 2 * head_dim});
    specs.push_back({p + "att_neighbor", {heads, head_dim}, 2 * head_dim});
    specs.push_back({p + "bias", {hidden}, 0});
    width = hidden;
  }
  specs.push_back({"classifier.weight", {hidden, static_cast<std::size_t>(cfg.num_classes)}, hidden});
  specs.push_back({"classifier.bias", {static_cast<std::size_t>(cfg.num_classes)}, 0});
  return specs;
}

// k-th pair (u < v) in lexicographic order that is not in the sorted list.
Edge nth_absent_pair(const std::vector<Edge>& present, std::size_t n, std::uint64_t k) {
  std::size_t cursor = 0;
  for (std::uint32_t u = 0; u + 1 < n; ++u) {
    for (std::uint32_t v = u + 1; v < n; ++v) {
      if (cursor < present.size() && present[cursor] == Edge{u, v}) {
        ++cursor;
      } else if (k-- == 0) {
        return {u, v};
      }
    }
  }
  throw InputError("no absent edge to insert");
}

void add_edge_sorted(std::vector<Edge>& edges, Edge e) {
  edges.insert(std::lower_bound(edges.begin(), edges.end(), e), e);
}

std::vector<Edge> canonical_edges(std::span<const Edge> edges, std::size_t n) {
  std::vector<Edge> out;
  out.reserve(edges.size());
  for (auto [u, v] : edges) {
    if (u >= n || v >= n) throw InputError("edge endpoint out of range");
    if (u == v) continue;
    out.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::vector<std::uint32_t>> neighbour_lists(std::span<const Edge> edges, std::size_t n) {
  std::vector<std::vector<std::uint32_t>> nbrs(n);
  for (auto [u, v] : canonical_edges(edges, n)) {
    nbrs[u].push_back(v);
    nbrs[v].push_back(u);
  }
  for (auto& list : nbrs) std::sort(list.begin(), list.end());
  return nbrs;
}

}  // namespace

std::string to_string(ModelVariant variant) {
  switch (variant) {
    case ModelVariant::gcn: return "gcn";
    case ModelVariant::gat: return "gat";
    case ModelVariant::hybrid: return "hybrid";
  }
  return "hybrid";
}

ModelVariant parse_variant(const std::string& name) {
  if (name == "gcn") return ModelVariant::gcn;
  if (name == "gat") return ModelVariant::gat;
  if (name == "hybrid") return ModelVariant::hybrid;
  throw InputError("unknown model variant '" + name + "'");
}

void ModelConfig::validate() const {
  if (hidden_dim < 1) throw InputError("hidden_dim must be >= 1");
  if (heads < 1) throw InputError("heads must be >= 1");
  if (input_dim < 1) throw InputError("input_dim must be >= 1");
  if (num_classes < 2) throw InputError("num_classes must be >= 2");
  if (!(edge_aug_p >= 0.0 && edge_aug_p <= 1.0)) throw InputError("edge_aug_p must lie in [0, 1]");
  if (leaky_slope < 0.0) throw InputError("leaky_slope must be non-negative");
  if (active_gcn_layers() < (variant == ModelVariant::gat ? 0 : 1)) throw InputError("gcn_layers must be >= 1");
  if (active_gat_layers() < (variant == ModelVariant::gcn ? 0 : 1)) throw InputError("gat_layers must be >= 1");
  if (active_gat_layers() > 1 && hidden_dim % heads != 0)
    throw InputError("hidden_dim must be divisible by heads for concatenating attention layers");
}

std::string model_config_to_json(const ModelConfig& cfg) {
  nlohmann::json j{{"variant", to_string(cfg.variant)}, {"hidden_dim", cfg.hidden_dim},
                   {"gcn_layers", cfg.gcn_layers},      {"gat_layers", cfg.gat_layers},
                   {"heads", cfg.heads},                {"num_classes", cfg.num_classes},
                   {"input_dim", cfg.input_dim},        {"edge_aug_p", cfg.edge_aug_p},
                   {"leaky_slope", cfg.leaky_slope}};
  return j.dump();
}

ModelConfig model_config_from_json(const std::string& text) {
  ModelConfig cfg;
  try {
    const auto j = nlohmann::json::parse(text);
    cfg.variant = parse_variant(j.at("variant").get<std::string>());
    cfg.hidden_dim = j.at("hidden_dim").get<int>();
    cfg.gcn_layers = j.at("gcn_layers").get<int>();
    cfg.gat_layers = j.at("gat_layers").get<int>();
    cfg.heads = j.at("heads").get<int>();
    cfg.num_classes = j.at("num_classes").get<int>();
    cfg.input_dim = j.value("input_dim", 3);
    cfg.edge_aug_p = j.value("edge_aug_p", 0.5);
    cfg.leaky_slope = j.value("leaky_slope", kLeakySlope);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad model config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

template <typename T>
SparseMatrix<T> normalize_adjacency(std::span<const Edge> edges, std::size_t n) {
  auto nbrs = neighbour_lists(edges, n);
  std::vector<T> inv_sqrt_deg(n);
  for (std::size_t i = 0; i < n; ++i) inv_sqrt_deg[i] = T{1} / std::sqrt(static_cast<T>(nbrs[i].size() + 1));

  SparseMatrix<T> a;
  a.rows = a.cols = n;
  a.row_ptr.push_back(0);
  for (std::size_t i = 0; i < n; ++i) {
    auto& list = nbrs[i];
    list.insert(std::lower_bound(list.begin(), list.end(), static_cast<std::uint32_t>(i)),
                static_cast<std::uint32_t>(i));
    for (auto j : list) {
      a.col.push_back(j);
      a.val.push_back(inv_sqrt_deg[i] * inv_sqrt_deg[j]);
    }
    a.row_ptr.push_back(a.col.size());
  }
  return a;
}

NeighborIndex build_neighbor_index(std::span<const Edge> edges, std::size_t n) {
  auto nbrs = neighbour_lists(edges, n);
  NeighborIndex index;
  index.nodes = n;
  index.row_ptr.push_back(0);
  for (std::size_t i = 0; i < n; ++i) {
    auto& list = nbrs[i];
    list.insert(std::lower_bound(list.begin(), list.end(), static_cast<std::uint32_t>(i)),
                static_cast<std::uint32_t>(i));
    index.col.insert(index.col.end(), list.begin(), list.end());
    index.row_ptr.push_back(index.col.size());
  }
  return index;
}

AugmentOutcome augment_edges_traced(std::span<const Edge> edges, std::size_t n, double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw InputError("augmentation probability must lie in [0, 1]");
  AugmentOutcome out;
  out.edges = canonical_edges(edges, n);

  const std::size_t max_edges = n < 2 ? 0 : n * (n - 1) / 2;
  if (rng.uniform01() < p && out.edges.size() < max_edges) {
    const Edge chosen = nth_absent_pair(out.edges, n, rng.uniform_int(max_edges - out.edges.size()));
    add_edge_sorted(out.edges, chosen);
    out.added = true;
  }
  if (rng.uniform01() < p && !out.edges.empty()) {
    const auto victim = rng.uniform_int(out.edges.size());
    out.edges.erase(out.edges.begin() + static_cast<std::ptrdiff_t>(victim));
    out.removed = true;
  }
  return out;
}

std::vector<Edge> augment_edges(std::span<const Edge> edges, std::size_t n, double p, Rng& rng) {
  return augment_edges_traced(edges, n, p, rng).edges;
}

template <typename T>
ParamSet<T> init_params(const ModelConfig& cfg, Rng& rng) {
  ParamSet<T> params;
  for (const auto& spec : param_specs(cfg)) {
    params.add(spec.name, spec.fan_in ? he_uniform_init<T>(spec.shape, spec.fan_in, rng) : Tensor<T>(spec.shape));
  }
  return params;
}

template <typename T>
void check_params(const ParamSet<T>& params, const ModelConfig& cfg) {
  const auto specs = param_specs(cfg);
  if (specs.size() != params.size())
    throw InputError("checkpoint has " + std::to_string(params.size()) + " parameters, config expects " +
                     std::to_string(specs.size()));
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& p = params.entries()[i];
    if (p.name != specs[i].name || p.value.shape() != specs[i].shape)
      throw InputError("parameter " + p.name + " does not match the model config");
  }
}

template <typename T>
std::vector<Var> bind_params(Tape<T>& tape, const ParamSet<T>& params, bool requires_grad) {
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const auto& p : params.entries())
    vars.push_back(requires_grad ? tape.parameter(p.value) : tape.constant(p.value));
  return vars;
}

namespace layers {

template <typename T>
Var gcn(Tape<T>& tape, Var h, std::shared_ptr<const SparseMatrix<T>> a_hat, Var weight, Var bias, bool activate,
        double slope) {
  const auto& w = tape.value(weight);
  if (w.rank() != 2 || tape.value(h).cols() != w.shape()[0]) throw InputError("gcn weight shape mismatch");
  Var pre;
  if (w.shape()[0] < w.shape()[1]) {
    pre = ops::matmul(tape, ops::spmm(tape, a_hat, h), weight);
  } else {
    pre = ops::spmm(tape, a_hat, ops::matmul(tape, h, weight));
  }
  pre = ops::add_bias(tape, pre, bias);
  return activate ? ops::leaky_relu(tape, pre, slope) : pre;
}

template <typename T>
Var gat(Tape<T>& tape, Var h, std::shared_ptr<const NeighborIndex> index, Var weight, Var att_target,
        Var att_neighbor, Var bias, std::size_t heads, bool concat, bool activate, double slope) {
  const auto& w = tape.value(weight);
  if (w.rank() != 2 || tape.value(h).cols() != w.shape()[0]) throw InputError("gat weight shape mismatch");
  Var z = ops::matmul(tape, h, weight);
  Var out = ops::gat_aggregate(tape, z, att_target, att_neighbor, std::move(index), heads, concat, slope);
  out = ops::add_bias(tape, out, bias);
  return activate ? ops::leaky_relu(tape, out, slope) : out;
}

}  // namespace layers

template <typename T>
Var model_forward(Tape<T>& tape, const GraphBatch& batch, const ParamSet<T>& params, std::span<const Var> vars,
                  const ModelConfig& cfg, bool training, Rng* rng) {
  cfg.validate();
  if (vars.size() != params.size()) throw InputError("bound variables do not match parameters");
  if (batch.feature_dim != static_cast<std::size_t>(cfg.input_dim))
    throw InputError("batch feature width does not match model input_dim");
  if (batch.graph_count() == 0) throw InputError("empty batch");
  auto var = [&](const std::string& name) { return vars[params.index_of(name)]; };

  const std::size_t n = batch.node_count();
  std::vector<Edge> edges;
  if (training && rng != nullptr && cfg.edge_aug_p > 0.0) {
    for (std::size_t g = 0; g < batch.graph_count(); ++g) {
      const auto offset = batch.node_offsets[g];
      std::vector<Edge> local;
      for (auto e = batch.edge_offsets[g]; e < batch.edge_offsets[g + 1]; ++e)
        local.emplace_back(batch.edges[e].first - offset, batch.edges[e].second - offset);
      const std::size_t local_n = batch.node_offsets[g + 1] - offset;
      for (auto [u, v] : augment_edges(local, local_n, cfg.edge_aug_p, *rng)) edges.emplace_back(u + offset, v + offset);
    }
  } else {
    edges = batch.edges;
  }

  std::vector<T> feats(batch.features.begin(), batch.features.end());
  Var h = tape.constant(Tensor<T>({n, batch.feature_dim}, std::move(feats)));

  const int gcn_count = cfg.active_gcn_layers();
  const int gat_count = cfg.active_gat_layers();
  if (gcn_count > 0) {
    auto a_hat = std::make_shared<const SparseMatrix<T>>(normalize_adjacency<T>(edges, n));
    for (int i = 0; i < gcn_count; ++i) {
      const std::string p = "gcn" + std::to_string(i) + ".";
      const bool feeds_readout = i == gcn_count - 1 && gat_count == 0;
      h = layers::gcn(tape, h, a_hat, var(p + "weight"), var(p + "bias"), !feeds_readout, cfg.leaky_slope);
    }
  }
  if (gat_count > 0) {
    auto index = std::make_shared<const NeighborIndex>(build_neighbor_index(edges, n));
    for (int i = 0; i < gat_count; ++i) {
      const std::string p = "gat" + std::to_string(i) + ".";
      const bool last = i == gat_count - 1;
      h = layers::gat(tape, h, index, var(p + "weight"), var(p + "att_target"), var(p + "att_neighbor"),
                      var(p + "bias"), static_cast<std::size_t>(cfg.heads), !last, !last, cfg.leaky_slope);
    }
  }

  auto membership = std::make_shared<const std::vector<std::uint32_t>>(batch.membership);
  Var pooled = ops::segment_mean(tape, h, membership, batch.graph_count());
  pooled = ops::leaky_relu(tape, pooled, cfg.leaky_slope);
  return ops::add_bias(tape, ops::matmul(tape, pooled, var("classifier.weight")), var("classifier.bias"));
}

template <typename T>
Tensor<T> model_logits(const GraphBatch& batch, const ParamSet<T>& params, const ModelConfig& cfg) {
  Tape<T> tape;
  const auto vars = bind_params(tape, params, false);
  return tape.value(model_forward(tape, batch, params, vars, cfg, false, nullptr));
}

#define GRAPHLEAF_INSTANTIATE_MODELS(T)                                                                            \
  template SparseMatrix<T> normalize_adjacency<T>(std::span<const Edge>, std::size_t);                             \
  template ParamSet<T> init_params<T>(const ModelConfig&, Rng&);                                                   \
  template void check_params<T>(const ParamSet<T>&, const ModelConfig&);                                           \
  template std::vector<Var> bind_params<T>(Tape<T>&, const ParamSet<T>&, bool);                                    \
  template Var layers::gcn<T>(Tape<T>&, Var, std::shared_ptr<const SparseMatrix<T>>, Var, Var, bool, double);      \
  template Var layers::gat<T>(Tape<T>&, Var, std::shared_ptr<const NeighborIndex>, Var, Var, Var, Var, std::size_t, \
                              bool, bool, double);                                                                 \
  template Var model_forward<T>(Tape<T>&, const GraphBatch&, const ParamSet<T>&, std::span<const Var>,             \
                                const ModelConfig&, bool, Rng*);                                                   \
  template Tensor<T> model_logits<T>(const GraphBatch&, const ParamSet<T>&, const ModelConfig&);

GRAPHLEAF_INSTANTIATE_MODELS(float)
GRAPHLEAF_INSTANTIATE_MODELS(double)

#undef GRAPHLEAF_INSTANTIATE_MODELS

}  // namespace graphleaf
