#include "graphleaf/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace graphleaf {
namespace {

template <typename T>
void require_matrix(const Tensor<T>& t, const char* what) {
  if (t.rank() != 2) throw InputError(std::string(what) + " must be a matrix");
}

template <typename T>
void check_gat_shapes(const Tensor<T>& z, const Tensor<T>& at, const Tensor<T>& an, const NeighborIndex& index,
                      std::size_t heads) {
  if (heads == 0) throw InputError("attention needs at least one head");
  require_matrix(z, "projected features");
  if (at.rows() != heads || an.rows() != heads || at.size() != an.size())
    throw InputError("attention vectors must be heads x F");
  if (z.cols() != heads * at.cols()) throw InputError("projected width must equal heads * F");
  if (index.nodes != z.rows() || index.row_ptr.size() != index.nodes + 1)
    throw InputError("neighbour index does not match node count");
}

template <typename T>
struct GatGrads {
  Tensor<T> projected, att_target, att_neighbor;
};

template <typename T>
GatGrads<T> gat_backward(const Tensor<T>& z, const Tensor<T>& at, const Tensor<T>& an, const NeighborIndex& index,
                         std::size_t heads, bool concat, double slope, const GatOutput<T>& fwd,
                         const Tensor<T>& d_out) {
  const std::size_t n = z.rows(), f = at.cols(), edges = index.col.size(), width = z.cols();
  GatGrads<T> g{Tensor<T>(z.shape()), Tensor<T>(at.shape()), Tensor<T>(an.shape())};
  std::vector<T> d_alpha(edges), d_left(n), d_right(n), upstream(f);
  const T head_scale = concat ? T{1} : T{1} / static_cast<T>(heads);

  for (std::size_t h = 0; h < heads; ++h) {
    const T* alpha = fwd.alpha.data() + h * edges;
    const T* pre = fwd.pre.data() + h * edges;
    std::fill(d_left.begin(), d_left.end(), T{0});
    std::fill(d_right.begin(), d_right.end(), T{0});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < f; ++c)
        upstream[c] = (concat ? d_out(i, h * f + c) : d_out(i, c)) * head_scale;
      T weighted = 0;
      for (std::size_t e = index.row_ptr[i]; e < index.row_ptr[i + 1]; ++e) {
        const std::size_t j = index.col[e];
        const T* zj = z.data() + j * width + h * f;
        T* dzj = g.projected.data() + j * width + h * f;
        T dot = 0;
        for (std::size_t c = 0; c < f; ++c) {
          dot += upstream[c] * zj[c];
          dzj[c] += alpha[e] * upstream[c];
        }
        d_alpha[e] = dot;
        weighted += alpha[e] * dot;
      }
      for (std::size_t e = index.row_ptr[i]; e < index.row_ptr[i + 1]; ++e) {
        const T d_score = alpha[e] * (d_alpha[e] - weighted);
        const T d_pre = d_score * (pre[e] > T{0} ? T{1} : static_cast<T>(slope));
        d_left[i] += d_pre;
        d_right[index.col[e]] += d_pre;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const T* zi = z.data() + i * width + h * f;
      T* dzi = g.projected.data() + i * width + h * f;
      for (std::size_t c = 0; c < f; ++c) {
        g.att_target(h, c) += d_left[i] * zi[c];
        g.att_neighbor(h, c) += d_right[i] * zi[c];
        dzi[c] += d_left[i] * at(h, c) + d_right[i] * an(h, c);
      }
    }
  }
  return g;
}

}  // namespace

template <typename T>
Tensor<T> SparseMatrix<T>::to_dense() const {
  Tensor<T> out = Tensor<T>::matrix(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t e = row_ptr[r]; e < row_ptr[r + 1]; ++e) out(r, col[e]) += val[e];
  return out;
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, double slope) {
  if (slope < 0) throw InputError("leaky slope must be non-negative");
  Tensor<T> out(x.shape());
  const T s = static_cast<T>(slope);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > T{0} ? x[i] : s * x[i];
  return out;
}

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& logits) {
  Tensor<T> out(logits.shape());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto in = logits.row(r);
    auto o = out.row(r);
    const T mx = *std::max_element(in.begin(), in.end());
    T sum = 0;
    for (std::size_t c = 0; c < in.size(); ++c) sum += (o[c] = std::exp(in[c] - mx));
    for (auto& v : o) v /= sum;
  }
  return out;
}

template <typename T>
std::vector<T> per_row_cross_entropy(const Tensor<T>& logits, std::span<const std::uint32_t> labels) {
  require_matrix(logits, "logits");
  const std::size_t b = logits.rows(), c = logits.cols();
  if (c < 2) throw InputError("cross-entropy needs at least two classes");
  if (labels.size() != b) throw InputError("label count does not match logit rows");
  std::vector<T> out(b);
  for (std::size_t r = 0; r < b; ++r) {
    if (labels[r] >= c) throw InputError("label " + std::to_string(labels[r]) + " out of range");
    const auto row = logits.row(r);
    const T mx = *std::max_element(row.begin(), row.end());
    T sum = 0;
    for (T v : row) sum += std::exp(v - mx);
    out[r] = std::log(sum) + mx - row[labels[r]];
  }
  return out;
}

template <typename T>
CrossEntropy<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const std::uint32_t> labels) {
  const auto per_row = per_row_cross_entropy(logits, labels);
  CrossEntropy<T> ce;
  const std::size_t b = logits.rows();
  T total = 0;
  for (T v : per_row) total += v;
  ce.loss = b ? total / static_cast<T>(b) : T{0};
  ce.probs = softmax_rows(logits);
  ce.grad_logits = ce.probs;
  for (std::size_t r = 0; r < b; ++r) {
    ce.grad_logits(r, labels[r]) -= T{1};
    for (auto& v : ce.grad_logits.row(r)) v /= static_cast<T>(b);
  }
  return ce;
}

template <typename T>
GatOutput<T> gat_aggregate(const Tensor<T>& z, const Tensor<T>& at, const Tensor<T>& an, const NeighborIndex& index,
                           std::size_t heads, bool concat, double slope) {
  check_gat_shapes(z, at, an, index, heads);
  const std::size_t n = z.rows(), f = at.cols(), edges = index.col.size(), width = z.cols();
  GatOutput<T> out;
  out.out = Tensor<T>::matrix(n, concat ? heads * f : f);
  out.alpha.assign(heads * edges, T{0});
  out.pre.assign(heads * edges, T{0});
  const T s = static_cast<T>(slope);
  const T head_scale = concat ? T{1} : T{1} / static_cast<T>(heads);
  std::vector<T> left(n), right(n);

  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < n; ++i) {
      const T* zi = z.data() + i * width + h * f;
      T l = 0, r = 0;
      for (std::size_t c = 0; c < f; ++c) {
        l += at(h, c) * zi[c];
        r += an(h, c) * zi[c];
      }
      left[i] = l;
      right[i] = r;
    }
    T* alpha = out.alpha.data() + h * edges;
    T* pre = out.pre.data() + h * edges;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t begin = index.row_ptr[i], end = index.row_ptr[i + 1];
      T mx = -std::numeric_limits<T>::infinity();
      for (std::size_t e = begin; e < end; ++e) {
        pre[e] = left[i] + right[index.col[e]];
        alpha[e] = pre[e] > T{0} ? pre[e] : s * pre[e];
        mx = std::max(mx, alpha[e]);
      }
      T sum = 0;
      for (std::size_t e = begin; e < end; ++e) sum += (alpha[e] = std::exp(alpha[e] - mx));
      for (std::size_t e = begin; e < end; ++e) alpha[e] /= sum;

      T* oi = out.out.data() + i * out.out.cols() + (concat ? h * f : 0);
      for (std::size_t e = begin; e < end; ++e) {
        const T* zj = z.data() + index.col[e] * width + h * f;
        const T w = alpha[e] * head_scale;
        for (std::size_t c = 0; c < f; ++c) oi[c] += w * zj[c];
      }
    }
  }
  return out;
}

namespace ops {

template <typename T>
Var matmul(Tape<T>& tape, Var a, Var b) {
  const auto& av = tape.value(a);
  const auto& bv = tape.value(b);
  if (av.rank() != 2 || bv.rank() != 2 || av.shape()[1] != bv.shape()[0])
    throw InputError("matmul shape mismatch");
  Tensor<T> out = graphleaf::matmul(av, bv);
  return tape.record(std::move(out), {a, b}, [a, b](Tape<T>& t, const Tensor<T>& dy) {
    const auto& av = t.value(a);
    const auto& bv = t.value(b);
    const std::size_t m = av.shape()[0], k = av.shape()[1], n = bv.shape()[1];
    if (t.requires_grad(a)) kernels::gemm_nt(m, n, k, dy.data(), bv.data(), t.grad_buffer(a).data(), true);
    if (t.requires_grad(b)) kernels::gemm_tn(k, m, n, av.data(), dy.data(), t.grad_buffer(b).data(), true);
  });
}

template <typename T>
Var add_bias(Tape<T>& tape, Var x, Var bias) {
  const auto& xv = tape.value(x);
  const auto& bv = tape.value(bias);
  require_matrix(xv, "bias input");
  if (bv.size() != xv.cols()) throw InputError("bias length does not match feature width");
  Tensor<T> out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bv[c];
  }
  return tape.record(std::move(out), {x, bias}, [x, bias](Tape<T>& t, const Tensor<T>& dy) {
    if (t.requires_grad(x)) {
      auto& gx = t.grad_buffer(x);
      for (std::size_t i = 0; i < dy.size(); ++i) gx[i] += dy[i];
    }
    if (t.requires_grad(bias)) {
      auto& gb = t.grad_buffer(bias);
      for (std::size_t r = 0; r < dy.rows(); ++r) {
        const auto row = dy.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) gb[c] += row[c];
      }
    }
  });
}

template <typename T>
Var leaky_relu(Tape<T>& tape, Var x, double slope) {
  Tensor<T> out = graphleaf::leaky_relu(tape.value(x), slope);
  return tape.record(std::move(out), {x}, [x, slope](Tape<T>& t, const Tensor<T>& dy) {
    const auto& xv = t.value(x);
    auto& gx = t.grad_buffer(x);
    const T s = static_cast<T>(slope);
    for (std::size_t i = 0; i < dy.size(); ++i) gx[i] += xv[i] > T{0} ? dy[i] : s * dy[i];
  });
}

template <typename T>
Var spmm(Tape<T>& tape, std::shared_ptr<const SparseMatrix<T>> a, Var x) {
  const auto& xv = tape.value(x);
  require_matrix(xv, "spmm input");
  if (a->cols != xv.rows()) throw InputError("sparse operator does not match feature rows");
  const std::size_t f = xv.cols();
  Tensor<T> out = Tensor<T>::matrix(a->rows, f);
  for (std::size_t r = 0; r < a->rows; ++r) {
    T* o = out.data() + r * f;
    for (std::size_t e = a->row_ptr[r]; e < a->row_ptr[r + 1]; ++e) {
      const T w = a->val[e];
      const T* src = xv.data() + a->col[e] * f;
      for (std::size_t c = 0; c < f; ++c) o[c] += w * src[c];
    }
  }
  return tape.record(std::move(out), {x}, [a, x, f](Tape<T>& t, const Tensor<T>& dy) {
    auto& gx = t.grad_buffer(x);
    for (std::size_t r = 0; r < a->rows; ++r) {
      const T* d = dy.data() + r * f;
      for (std::size_t e = a->row_ptr[r]; e < a->row_ptr[r + 1]; ++e) {
        const T w = a->val[e];
        T* g = gx.data() + a->col[e] * f;
        for (std::size_t c = 0; c < f; ++c) g[c] += w * d[c];
      }
    }
  });
}

template <typename T>
Var gat_aggregate(Tape<T>& tape, Var projected, Var att_target, Var att_neighbor,
                  std::shared_ptr<const NeighborIndex> index, std::size_t heads, bool concat, double slope) {
  auto fwd = std::make_shared<GatOutput<T>>(graphleaf::gat_aggregate(
      tape.value(projected), tape.value(att_target), tape.value(att_neighbor), *index, heads, concat, slope));
  Tensor<T> out = std::move(fwd->out);
  return tape.record(std::move(out), {projected, att_target, att_neighbor},
                     [=](Tape<T>& t, const Tensor<T>& dy) {
                       auto g = gat_backward(t.value(projected), t.value(att_target), t.value(att_neighbor),
                                             *index, heads, concat, slope, *fwd, dy);
                       auto add = [&t](Var v, const Tensor<T>& src) {
                         if (!t.requires_grad(v)) return;
                         auto& dst = t.grad_buffer(v);
                         for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
                       };
                       add(projected, g.projected);
                       add(att_target, g.att_target);
                       add(att_neighbor, g.att_neighbor);
                     });
}

template <typename T>
Var segment_mean(Tape<T>& tape, Var x, std::shared_ptr<const std::vector<std::uint32_t>> membership,
                 std::size_t groups) {
  const auto& xv = tape.value(x);
  require_matrix(xv, "readout input");
  if (membership->size() != xv.rows()) throw InputError("membership length does not match node count");
  auto counts = std::make_shared<std::vector<std::size_t>>(groups, 0);
  for (auto g : *membership) {
    if (g >= groups) throw InputError("membership index out of range");
    ++(*counts)[g];
  }
  for (std::size_t g = 0; g < groups; ++g)
    if ((*counts)[g] == 0) throw InputError("graph " + std::to_string(g) + " has no nodes");

  const std::size_t f = xv.cols();
  Tensor<T> out = Tensor<T>::matrix(groups, f);
  for (std::size_t i = 0; i < xv.rows(); ++i) {
    T* o = out.data() + (*membership)[i] * f;
    const T* src = xv.data() + i * f;
    for (std::size_t c = 0; c < f; ++c) o[c] += src[c];
  }
  for (std::size_t g = 0; g < groups; ++g)
    for (auto& v : out.row(g)) v /= static_cast<T>((*counts)[g]);

  return tape.record(std::move(out), {x}, [x, membership, counts, f](Tape<T>& t, const Tensor<T>& dy) {
    auto& gx = t.grad_buffer(x);
    for (std::size_t i = 0; i < membership->size(); ++i) {
      const auto g = (*membership)[i];
      const T scale = T{1} / static_cast<T>((*counts)[g]);
      for (std::size_t c = 0; c < f; ++c) gx(i, c) += dy(g, c) * scale;
    }
  });
}

template <typename T>
Var softmax_cross_entropy(Tape<T>& tape, Var logits, std::vector<std::uint32_t> labels) {
  auto ce = std::make_shared<CrossEntropy<T>>(graphleaf::softmax_cross_entropy(tape.value(logits), labels));
  Tensor<T> out({1}, ce->loss);
  return tape.record(std::move(out), {logits}, [logits, ce](Tape<T>& t, const Tensor<T>& dy) {
    auto& g = t.grad_buffer(logits);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += dy[0] * ce->grad_logits[i];
  });
}

template <typename T>
Var weighted_sum(Tape<T>& tape, Var x, Tensor<T> weights) {
  const auto& xv = tape.value(x);
  if (weights.size() != xv.size()) throw InputError("weight tensor does not match input size");
  T s = 0;
  for (std::size_t i = 0; i < xv.size(); ++i) s += xv[i] * weights[i];
  return tape.record(Tensor<T>({1}, s), {x}, [x, w = std::move(weights)](Tape<T>& t, const Tensor<T>& dy) {
    auto& g = t.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += dy[0] * w[i];
  });
}

}  // namespace ops

#define GRAPHLEAF_INSTANTIATE_OPS(T)                                                                           \
  template struct SparseMatrix<T>;                                                                             \
  template Tensor<T> leaky_relu(const Tensor<T>&, double);                                                     \
  template Tensor<T> softmax_rows(const Tensor<T>&);                                                           \
  template std::vector<T> per_row_cross_entropy(const Tensor<T>&, std::span<const std::uint32_t>);             \
  template CrossEntropy<T> softmax_cross_entropy(const Tensor<T>&, std::span<const std::uint32_t>);            \
  template GatOutput<T> gat_aggregate(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const NeighborIndex&, \
                                      std::size_t, bool, double);                                              \
  template Var ops::matmul(Tape<T>&, Var, Var);                                                                \
  template Var ops::add_bias(Tape<T>&, Var, Var);                                                              \
  template Var ops::leaky_relu(Tape<T>&, Var, double);                                                         \
  template Var ops::spmm(Tape<T>&, std::shared_ptr<const SparseMatrix<T>>, Var);                               \
  template Var ops::gat_aggregate(Tape<T>&, Var, Var, Var, std::shared_ptr<const NeighborIndex>, std::size_t,  \
                                  bool, double);                                                               \
  template Var ops::segment_mean(Tape<T>&, Var, std::shared_ptr<const std::vector<std::uint32_t>>,             \
                                 std::size_t);                                                                 \
  template Var ops::softmax_cross_entropy(Tape<T>&, Var, std::vector<std::uint32_t>);                          \
  template Var ops::weighted_sum(Tape<T>&, Var, Tensor<T>);

GRAPHLEAF_INSTANTIATE_OPS(float)
GRAPHLEAF_INSTANTIATE_OPS(double)

#undef GRAPHLEAF_INSTANTIATE_OPS

}  // namespace graphleaf
