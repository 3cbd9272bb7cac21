#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "graphleaf/autograd.hpp"
#include "graphleaf/tensor.hpp"

namespace graphleaf {

/// Compressed sparse row matrix with fixed (non-learnable) values.
template <typename T>
struct SparseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr;  // rows + 1
  std::vector<std::uint32_t> col;
  std::vector<T> val;

  Tensor<T> to_dense() const;
};

/// Per-node attention neighbourhoods in CSR form. Each list is sorted by
/// node id and contains the node itself.
struct NeighborIndex {
  std::size_t nodes = 0;
  std::vector<std::size_t> row_ptr;
  std::vector<std::uint32_t> col;
};

inline constexpr double kLeakySlope = 0.2;

// ---- plain tensor functions -------------------------------------------------

/// max(x, slope * x); x == 0 takes the slope branch for the derivative.
template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, double slope = kLeakySlope);

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& logits);

template <typename T>
struct CrossEntropy {
  T loss{};
  Tensor<T> probs;
  Tensor<T> grad_logits;  // (softmax - onehot) / B
};

/// Mean cross-entropy of B x C logits against class indices, using the
/// max-subtracted log-sum-exp. Throws InputError when C < 2 or a label is
/// out of range.
template <typename T>
CrossEntropy<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const std::uint32_t> labels);

/// Per-row cross-entropy values (unaveraged).
template <typename T>
std::vector<T> per_row_cross_entropy(const Tensor<T>& logits, std::span<const std::uint32_t> labels);

template <typename T>
struct GatOutput {
  Tensor<T> out;
  /// Attention weights aligned with NeighborIndex::col, one block per head:
  /// alpha[h * col.size() + e].
  std::vector<T> alpha;
  std::vector<T> pre;  // pre-activation scores, same layout
};

/// Multi-head attention aggregation over already-projected features.
/// `projected` is N x (heads * F); `att_target`/`att_neighbor` are heads x F.
/// Score for target i and neighbour j in head h is
/// LeakyReLU(att_target[h] . z_i + att_neighbor[h] . z_j), softmax-normalised
/// over the neighbourhood of i. Heads are concatenated (N x heads*F) or
/// averaged (N x F).
template <typename T>
GatOutput<T> gat_aggregate(const Tensor<T>& projected, const Tensor<T>& att_target, const Tensor<T>& att_neighbor,
                           const NeighborIndex& index, std::size_t heads, bool concat, double slope = kLeakySlope);

// ---- differentiable ops -----------------------------------------------------

namespace ops {

template <typename T>
Var matmul(Tape<T>& tape, Var a, Var b);

/// X (N x F) + b broadcast over rows; b has F elements.
template <typename T>
Var add_bias(Tape<T>& tape, Var x, Var bias);

template <typename T>
Var leaky_relu(Tape<T>& tape, Var x, double slope = kLeakySlope);

/// A * X for a fixed sparse A.
template <typename T>
Var spmm(Tape<T>& tape, std::shared_ptr<const SparseMatrix<T>> a, Var x);

template <typename T>
Var gat_aggregate(Tape<T>& tape, Var projected, Var att_target, Var att_neighbor,
                  std::shared_ptr<const NeighborIndex> index, std::size_t heads, bool concat,
                  double slope = kLeakySlope);

/// Row means grouped by `membership` (node -> group), G x F output.
/// Throws InputError when a group is empty.
template <typename T>
Var segment_mean(Tape<T>& tape, Var x, std::shared_ptr<const std::vector<std::uint32_t>> membership,
                 std::size_t groups);

/// Scalar mean cross-entropy.
template <typename T>
Var softmax_cross_entropy(Tape<T>& tape, Var logits, std::vector<std::uint32_t> labels);

/// Sum of elementwise product with a fixed tensor; reduces any tensor to a
/// scalar with a non-trivial gradient (used by gradient checks).
template <typename T>
Var weighted_sum(Tape<T>& tape, Var x, Tensor<T> weights);

}  // namespace ops
}  // namespace graphleaf
