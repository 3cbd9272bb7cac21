#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "graphleaf/autograd.hpp"
#include "graphleaf/batch.hpp"
#include "graphleaf/ops.hpp"
#include "graphleaf/params.hpp"
#include "graphleaf/rag.hpp"
#include "graphleaf/rng.hpp"

namespace graphleaf {

enum class ModelVariant { gcn, gat, hybrid };

std::string to_string(ModelVariant variant);
/// Accepts "gcn", "gat" or "hybrid"; throws InputError otherwise.
ModelVariant parse_variant(const std::string& name);

struct ModelConfig {
  ModelVariant variant = ModelVariant::hybrid;
  int hidden_dim = 512;
  int gcn_layers = 2;
  int gat_layers = 2;
  int heads = 2;
  int num_classes = 2;
  int input_dim = 3;
  double edge_aug_p = 0.5;
  double leaky_slope = kLeakySlope;

  /// Throws InputError when a field is out of range.
  void validate() const;

  int active_gcn_layers() const { return variant == ModelVariant::gat ? 0 : gcn_layers; }
  int active_gat_layers() const { return variant == ModelVariant::gcn ? 0 : gat_layers; }

  bool operator==(const ModelConfig&) const = default;
};

std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& text);

/// D^-1/2 (A + I) D^-1/2 for the symmetric 0/1 adjacency of `edges`, with
/// D the degree of A + I. Rows list columns in increasing order.
template <typename T>
SparseMatrix<T> normalize_adjacency(std::span<const Edge> edges, std::size_t n);

/// Attention neighbourhoods: every node's neighbours plus itself.
NeighborIndex build_neighbor_index(std::span<const Edge> edges, std::size_t n);

struct AugmentOutcome {
  std::vector<Edge> edges;
  bool added = false;
  bool removed = false;
};

/// Training-time edge perturbation. With probability p one uniformly drawn
/// absent edge is inserted; then, independently with probability p, one
/// uniformly drawn edge of the result is deleted. Both gates always consume
/// a draw. Insertion is skipped on a complete graph and deletion on an
/// edgeless one. Output edges are canonical and sorted.
AugmentOutcome augment_edges_traced(std::span<const Edge> edges, std::size_t n, double p, Rng& rng);
std::vector<Edge> augment_edges(std::span<const Edge> edges, std::size_t n, double p, Rng& rng);

/// He-uniform weights, zero biases, drawn in parameter order.
template <typename T>
ParamSet<T> init_params(const ModelConfig& cfg, Rng& rng);

/// Throws InputError when names or shapes differ from init_params(cfg).
template <typename T>
void check_params(const ParamSet<T>& params, const ModelConfig& cfg);

/// Leaf variables for every parameter, in ParamSet order.
template <typename T>
std::vector<Var> bind_params(Tape<T>& tape, const ParamSet<T>& params, bool requires_grad);

namespace layers {

/// act(A_hat * H * W + b); the cheaper association order is used.
template <typename T>
Var gcn(Tape<T>& tape, Var h, std::shared_ptr<const SparseMatrix<T>> a_hat, Var weight, Var bias, bool activate,
        double slope = kLeakySlope);

/// act(attention(H * W) + b) with heads concatenated or averaged.
template <typename T>
Var gat(Tape<T>& tape, Var h, std::shared_ptr<const NeighborIndex> index, Var weight, Var att_target,
        Var att_neighbor, Var bias, std::size_t heads, bool concat, bool activate, double slope = kLeakySlope);

}  // namespace layers

/// Logits (G x C) for a batch. With `training` set and a generator given,
/// each graph's edges are augmented before propagation.
template <typename T>
Var model_forward(Tape<T>& tape, const GraphBatch& batch, const ParamSet<T>& params, std::span<const Var> vars,
                  const ModelConfig& cfg, bool training, Rng* rng);

/// Evaluation-mode forward pass without gradient bookkeeping.
template <typename T>
Tensor<T> model_logits(const GraphBatch& batch, const ParamSet<T>& params, const ModelConfig& cfg);

}  // namespace graphleaf
