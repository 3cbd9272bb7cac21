#include "graphleaf/tensor.hpp"

#include <array>

#include "graphleaf/parallel.hpp"

namespace graphleaf::kernels {
namespace {

// Register tile: kRows rows of C by one 64-byte-wide column panel of B,
// accumulated across the full k extent.
constexpr std::size_t kRows = 4;

template <typename T>
constexpr std::size_t panel_width() {
  return 256 / sizeof(T);
}

template <typename T>
void gemm_rows(std::size_t row_begin, std::size_t row_end, std::size_t k, std::size_t n, const T* a, const T* b,
               T* c, bool accumulate) {
  constexpr std::size_t kPanel = panel_width<T>();
  for (std::size_t j0 = 0; j0 < n; j0 += kPanel) {
    const std::size_t jn = std::min(kPanel, n - j0);
    std::size_t i = row_begin;
    if (jn == kPanel) {
      for (; i + kRows <= row_end; i += kRows) {
        alignas(64) std::array<std::array<T, kPanel>, kRows> acc{};
        if (accumulate)
          for (std::size_t r = 0; r < kRows; ++r)
            for (std::size_t jj = 0; jj < kPanel; ++jj) acc[r][jj] = c[(i + r) * n + j0 + jj];
        for (std::size_t p = 0; p < k; ++p) {
          const T* brow = b + p * n + j0;
          const T a0 = a[(i + 0) * k + p];
          const T a1 = a[(i + 1) * k + p];
          const T a2 = a[(i + 2) * k + p];
          const T a3 = a[(i + 3) * k + p];
          for (std::size_t jj = 0; jj < kPanel; ++jj) {
            const T bv = brow[jj];
            acc[0][jj] += a0 * bv;
            acc[1][jj] += a1 * bv;
            acc[2][jj] += a2 * bv;
            acc[3][jj] += a3 * bv;
          }
        }
        for (std::size_t r = 0; r < kRows; ++r)
          for (std::size_t jj = 0; jj < kPanel; ++jj) c[(i + r) * n + j0 + jj] = acc[r][jj];
      }
    }
    // Remainder rows and the ragged last panel.
    for (; i < row_end; ++i) {
      std::array<T, kPanel> acc{};
      if (accumulate)
        for (std::size_t jj = 0; jj < jn; ++jj) acc[jj] = c[i * n + j0 + jj];
      for (std::size_t p = 0; p < k; ++p) {
        const T av = a[i * k + p];
        const T* brow = b + p * n + j0;
        for (std::size_t jj = 0; jj < jn; ++jj) acc[jj] += av * brow[jj];
      }
      for (std::size_t jj = 0; jj < jn; ++jj) c[i * n + j0 + jj] = acc[jj];
    }
  }
}

template <typename T>
std::vector<T> transpose(std::size_t rows, std::size_t cols, const T* src) {
  std::vector<T> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = src[r * cols + c];
  return out;
}

}  // namespace

template <typename T>
void gemm(std::size_t m, std::size_t k, std::size_t n, const T* a, const T* b, T* c, bool accumulate) {
  if (m == 0 || n == 0) return;
  if (k == 0) {
    if (!accumulate) std::fill(c, c + m * n, T{0});
    return;
  }
  // Row blocks are multiples of the register tile so the partition does not
  // change which rows take the remainder path.
  const std::size_t blocks = (m + kRows - 1) / kRows;
  parallel_for(
      blocks,
      [&](std::size_t begin, std::size_t end) {
        gemm_rows(begin * kRows, std::min(m, end * kRows), k, n, a, b, c, accumulate);
      },
      4);
}

template <typename T>
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const T* a, const T* b, T* c, bool accumulate) {
  const auto at = transpose(k, m, a);
  gemm(m, k, n, at.data(), b, c, accumulate);
}

template <typename T>
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const T* a, const T* b, T* c, bool accumulate) {
  const auto bt = transpose(n, k, b);
  gemm(m, k, n, a, bt.data(), c, accumulate);
}

template void gemm<float>(std::size_t, std::size_t, std::size_t, const float*, const float*, float*, bool);
template void gemm<double>(std::size_t, std::size_t, std::size_t, const double*, const double*, double*, bool);
template void gemm_tn<float>(std::size_t, std::size_t, std::size_t, const float*, const float*, float*, bool);
template void gemm_tn<double>(std::size_t, std::size_t, std::size_t, const double*, const double*, double*, bool);
template void gemm_nt<float>(std::size_t, std::size_t, std::size_t, const float*, const float*, float*, bool);
template void gemm_nt<double>(std::size_t, std::size_t, std::size_t, const double*, const double*, double*, bool);

}  // namespace graphleaf::kernels

namespace graphleaf {

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0])
    throw InputError("matmul shape mismatch");
  Tensor<T> out = Tensor<T>::matrix(a.shape()[0], b.shape()[1]);
  kernels::gemm(a.shape()[0], a.shape()[1], b.shape()[1], a.data(), b.data(), out.data(), false);
  return out;
}

template Tensor<float> matmul(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> matmul(const Tensor<double>&, const Tensor<double>&);

}  // namespace graphleaf
