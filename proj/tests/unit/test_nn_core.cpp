#include <doctest.h>

#include <cmath>
#include <numeric>

#include "graphleaf/autograd.hpp"
#include "graphleaf/checkpoint.hpp"
#include "graphleaf/error.hpp"
#include "graphleaf/gradcheck.hpp"
#include "graphleaf/ops.hpp"
#include "graphleaf/params.hpp"
#include "graphleaf/parallel.hpp"
#include "graphleaf/tensor.hpp"
#include "synthetic.hpp"

using namespace graphleaf;

namespace {

template <typename T>
Tensor<T> random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

// Values bounded away from the LeakyReLU kink so central differences stay smooth.
Tensor<double> away_from_zero(Shape shape, Rng& rng) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.values()) v = (rng.uniform01() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.1, 1.0);
  return t;
}

Tensor<double> naive_matmul(const Tensor<double>& a, const Tensor<double>& b) {
  Tensor<double> c = Tensor<double>::matrix(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

}  // namespace

TEST_CASE("gemm matches the naive product for awkward shapes") {
  Rng rng(1);
  for (auto [m, k, n] : {std::tuple{1, 1, 1}, {3, 5, 7}, {17, 33, 65}, {64, 3, 130}, {9, 70, 2}}) {
    const auto a = random_tensor<double>({std::size_t(m), std::size_t(k)}, rng);
    const auto b = random_tensor<double>({std::size_t(k), std::size_t(n)}, rng);
    const auto c = matmul(a, b);
    const auto ref = naive_matmul(a, b);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == doctest::Approx(ref[i]).epsilon(1e-12));

    // Transposed variants against the same oracle.
    Tensor<double> at = Tensor<double>::matrix(k, m), bt = Tensor<double>::matrix(n, k);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < k; ++j) at(j, i) = a(i, j);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < n; ++j) bt(j, i) = b(i, j);
    Tensor<double> c_tn = Tensor<double>::matrix(m, n), c_nt = Tensor<double>::matrix(m, n);
    kernels::gemm_tn<double>(m, k, n, at.data(), b.data(), c_tn.data(), false);
    kernels::gemm_nt<double>(m, k, n, a.data(), bt.data(), c_nt.data(), false);
    for (std::size_t i = 0; i < c.size(); ++i) {
      CHECK(c_tn[i] == doctest::Approx(ref[i]).epsilon(1e-12));
      CHECK(c_nt[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("gemm is bit-identical across thread counts") {
  Rng rng(2);
  const auto a = random_tensor<float>({301, 97}, rng);
  const auto b = random_tensor<float>({97, 130}, rng);
  const auto saved = thread_count();
  set_thread_count(1);
  const auto one = matmul(a, b);
  set_thread_count(5);
  const auto five = matmul(a, b);
  set_thread_count(saved);
  CHECK(one == five);
}

TEST_CASE("tensor shape contract") {
  CHECK_THROWS_AS(Tensor<float>({2, 3}, std::vector<float>(5)), InputError);
  CHECK_THROWS_AS(matmul(Tensor<float>({2, 3}), Tensor<float>({2, 3})), InputError);
}

TEST_CASE("leaky_relu values and derivative at zero") {
  const Tensor<double> x({3}, std::vector<double>{3.0, -1.0, 0.0});
  const auto y = leaky_relu(x, 0.2);
  CHECK(y[0] == 3.0);
  CHECK(y[1] == doctest::Approx(-0.2));
  CHECK(y[2] == 0.0);

  Tape<double> tape;
  const Var v = tape.parameter(x);
  const Var out = ops::weighted_sum(tape, ops::leaky_relu(tape, v, 0.2), Tensor<double>({3}, 1.0));
  tape.backward(out);
  CHECK(tape.grad(v)[0] == 1.0);
  CHECK(tape.grad(v)[1] == doctest::Approx(0.2));
  CHECK(tape.grad(v)[2] == doctest::Approx(0.2));
}

TEST_CASE("softmax_cross_entropy known values") {
  const std::uint32_t zero[] = {0};
  CHECK(softmax_cross_entropy(Tensor<double>({1, 2}, std::vector<double>{20.0, -20.0}), zero).loss < 1e-15);
  CHECK(softmax_cross_entropy(Tensor<double>({1, 2}, 0.0), zero).loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  const std::uint32_t three[] = {3};
  CHECK(softmax_cross_entropy(Tensor<double>({1, 5}, 0.0), three).loss ==
        doctest::Approx(std::log(5.0)).epsilon(1e-12));
  CHECK(std::log(2.0) == doctest::Approx(0.693147).epsilon(1e-6));
  CHECK(std::log(5.0) == doctest::Approx(1.609438).epsilon(1e-6));

  const std::uint32_t bad[] = {2};
  CHECK_THROWS_AS(softmax_cross_entropy(Tensor<double>({1, 2}, 0.0), bad), InputError);
  const std::uint32_t lone[] = {0};
  CHECK_THROWS_AS(softmax_cross_entropy(Tensor<double>({1, 1}, 0.0), lone), InputError);
}

TEST_CASE("softmax rows sum to one and loss is non-negative") {
  Rng rng(6);
  const auto logits = random_tensor<float>({20, 7}, rng, -30.0, 30.0);
  const auto p = softmax_rows(logits);
  for (std::size_t r = 0; r < 20; ++r) {
    double s = 0.0;
    for (float v : p.row(r)) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
  }
  std::vector<std::uint32_t> labels(20);
  for (auto& l : labels) l = static_cast<std::uint32_t>(rng.uniform_int(7));
  for (float l : per_row_cross_entropy(logits, labels)) CHECK(l >= 0.0f);
}

TEST_CASE("gradcheck: polynomial is exact") {
  const auto result = finite_diff_gradcheck(
      [](Tape<double>& tape, std::span<const Var> p) {
        // w^2 via w * w as a 1x1 product.
        return ops::matmul(tape, p[0], p[0]);
      },
      {Tensor<double>({1, 1}, 3.0)});
  CHECK(result.analytic == doctest::Approx(6.0));
  CHECK(result.numeric == doctest::Approx(6.0));
  CHECK(result.max_rel_error < 1e-9);
}

TEST_CASE("gradcheck: zero gradients are exact and wrong gradients are caught") {
  Rng rng(17);
  // Self-loops only: attention weights are constant, so their true gradient is 0.
  auto index = std::make_shared<NeighborIndex>();
  index->nodes = 3;
  index->row_ptr = {0, 1, 2, 3};
  index->col = {0, 1, 2};
  const auto w = random_tensor<double>({3, 4}, rng);
  const auto r = finite_diff_gradcheck(
      [&](Tape<double>& t, std::span<const Var> p) {
        return ops::weighted_sum(t, ops::gat_aggregate<double>(t, p[0], p[1], p[2], index, 2, true), w);
      },
      {random_tensor<double>({3, 4}, rng), random_tensor<double>({2, 2}, rng), random_tensor<double>({2, 2}, rng)},
      {.step = 1e-4});
  CHECK(r.max_rel_error < 1e-6);
  CHECK(r.coords_at_noise_floor >= 8);

  // f(w) = w * stop(w) has true derivative 2w but the tape sees w.
  const auto wrong = finite_diff_gradcheck(
      [](Tape<double>& tape, std::span<const Var> p) { return ops::matmul(tape, p[0], tape.constant(tape.value(p[0]))); },
      {Tensor<double>({1, 1}, 3.0)});
  CHECK(wrong.max_rel_error == doctest::Approx(0.5));
}

TEST_CASE("gradcheck: every primitive op is below 1e-6") {
  Rng rng(99);
  const auto weights = [&](Shape s) { return random_tensor<double>(std::move(s), rng); };

  SUBCASE("matmul") {
    const auto w = weights({4, 5});
    const auto r = finite_diff_gradcheck(
        [&](Tape<double>& t, std::span<const Var> p) { return ops::weighted_sum(t, ops::matmul(t, p[0], p[1]), w); },
        {random_tensor<double>({4, 3}, rng), random_tensor<double>({3, 5}, rng)});
    CHECK(r.max_rel_error < 1e-6);
  }
  SUBCASE("add_bias") {
    const auto w = weights({4, 3});
    const auto r = finite_diff_gradcheck(
        [&](Tape<double>& t, std::span<const Var> p) { return ops::weighted_sum(t, ops::add_bias(t, p[0], p[1]), w); },
        {random_tensor<double>({4, 3}, rng), random_tensor<double>({3}, rng)});
    CHECK(r.max_rel_error < 1e-6);
  }
  SUBCASE("leaky_relu") {
    const auto w = weights({6, 4});
    const auto r = finite_diff_gradcheck(
        [&](Tape<double>& t, std::span<const Var> p) { return ops::weighted_sum(t, ops::leaky_relu(t, p[0]), w); },
        {away_from_zero({6, 4}, rng)});
    CHECK(r.max_rel_error < 1e-6);
  }
  SUBCASE("spmm") {
    auto a = std::make_shared<SparseMatrix<double>>();
    a->rows = 3;
    a->cols = 4;
    a->row_ptr = {0, 2, 3, 5};
    a->col = {0, 3, 1, 0, 2};
    a->val = {0.5, -1.5, 2.0, 0.25, 1.0};
    const auto w = weights({3, 2});
    const auto r = finite_diff_gradcheck(
        [&](Tape<double>& t, std::span<const Var> p) { return ops::weighted_sum(t, ops::spmm<double>(t, a, p[0]), w); },
        {random_tensor<double>({4, 2}, rng)});
    CHECK(r.max_rel_error < 1e-6);
  }
  SUBCASE("gat_aggregate concat and mean") {
    auto index = std::make_shared<NeighborIndex>();
    index->nodes = 4;
    index->row_ptr = {0, 2, 5, 7, 8};
    index->col = {0, 1, 0, 1, 2, 1, 2, 3};
    for (bool concat : {true, false}) {
      const auto w = weights({4, concat ? 6u : 3u});
      const auto r = finite_diff_gradcheck(
          [&](Tape<double>& t, std::span<const Var> p) {
            return ops::weighted_sum(t, ops::gat_aggregate<double>(t, p[0], p[1], p[2], index, 2, concat), w);
          },
          {random_tensor<double>({4, 6}, rng), random_tensor<double>({2, 3}, rng),
           random_tensor<double>({2, 3}, rng)});
      CHECK(r.max_rel_error < 1e-6);
    }
  }
  SUBCASE("segment_mean") {
    auto membership = std::make_shared<const std::vector<std::uint32_t>>(std::vector<std::uint32_t>{0, 0, 1, 2, 2, 2});
    const auto w = weights({3, 2});
    const auto r = finite_diff_gradcheck(
        [&](Tape<double>& t, std::span<const Var> p) {
          return ops::weighted_sum(t, ops::segment_mean<double>(t, p[0], membership, 3), w);
        },
        {random_tensor<double>({6, 2}, rng)});
    CHECK(r.max_rel_error < 1e-6);
  }
  SUBCASE("softmax_cross_entropy on 4x3 logits") {
    const auto r = finite_diff_gradcheck(
        [&](Tape<double>& t, std::span<const Var> p) { return ops::softmax_cross_entropy(t, p[0], {0, 2, 1, 2}); },
        {random_tensor<double>({4, 3}, rng, -2.0, 2.0)});
    CHECK(r.max_rel_error < 1e-6);
  }
}

TEST_CASE("segment_mean rejects an empty group") {
  Tape<double> t;
  const Var x = t.parameter(Tensor<double>({2, 1}, 1.0));
  auto membership = std::make_shared<const std::vector<std::uint32_t>>(std::vector<std::uint32_t>{0, 2});
  CHECK_THROWS_AS(ops::segment_mean<double>(t, x, membership, 3), InputError);
}

TEST_CASE("gat_aggregate: isolated node and clique attention") {
  Rng rng(14);
  NeighborIndex lone{1, {0, 1}, {0}};
  const auto z = random_tensor<double>({1, 4}, rng);
  const auto out = gat_aggregate(z, random_tensor<double>({2, 2}, rng), random_tensor<double>({2, 2}, rng), lone, 2, true);
  for (std::size_t i = 0; i < 4; ++i) CHECK(out.out[i] == doctest::Approx(z[i]));
  CHECK(out.alpha[0] == doctest::Approx(1.0));

  NeighborIndex clique{3, {0, 3, 6, 9}, {0, 1, 2, 0, 1, 2, 0, 1, 2}};
  const Tensor<double> same({3, 2}, std::vector<double>{0.3, -0.7, 0.3, -0.7, 0.3, -0.7});
  const auto c = gat_aggregate(same, random_tensor<double>({1, 2}, rng), random_tensor<double>({1, 2}, rng), clique, 1,
                               false);
  for (double a : c.alpha) CHECK(a == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("he_uniform_init bounds and errors") {
  Rng rng(21);
  const auto six = he_uniform_init<double>({1000}, 6, rng);
  for (double v : six.values()) CHECK(std::fabs(v) <= 1.0);
  CHECK(he_uniform_bound(512) == doctest::Approx(std::sqrt(6.0 / 512.0)));
  CHECK(he_uniform_bound(512) == doctest::Approx(0.108253).epsilon(1e-6));
  CHECK_THROWS_AS(he_uniform_init<float>({3}, 0, rng), InputError);

  Rng a(5), b(5);
  CHECK(he_uniform_init<float>({64, 8}, 64, a) == he_uniform_init<float>({64, 8}, 64, b));
}

TEST_CASE("adam: zero gradient, first step magnitude and path dependence") {
  ParamSet<double> params;
  params.add("w", Tensor<double>({3}, std::vector<double>{1.0, -2.0, 0.5}));
  const auto before = params.at("w");
  std::vector<Tensor<double>> zero{Tensor<double>({3}, 0.0)};
  adam_step(params, std::span<const Tensor<double>>(zero));
  CHECK(params.at("w") == before);
  CHECK(params.step == 1);

  ParamSet<double> fresh;
  fresh.add("w", before);
  std::vector<Tensor<double>> g{Tensor<double>({3}, std::vector<double>{0.3, -4.0, 1e-3})};
  adam_step(fresh, std::span<const Tensor<double>>(g), {.lr = 0.01});
  for (std::size_t i = 0; i < 3; ++i) {
    const double delta = fresh.at("w")[i] - before[i];
    CHECK(std::fabs(delta) <= 0.01 * (1.0 + 1e-6));
    CHECK(std::fabs(delta) >= 0.01 * 0.99);
    CHECK((delta < 0) == (g[0][i] > 0));
  }

  // f(w) = w^2: the second step sees a different gradient, so two steps
  // differ from one step at twice the rate.
  ParamSet<double> twice, doubled;
  twice.add("w", Tensor<double>({1}, 1.0));
  doubled.add("w", Tensor<double>({1}, 1.0));
  auto grad_of = [](const ParamSet<double>& p) {
    return std::vector<Tensor<double>>{Tensor<double>({1}, 2.0 * p.at("w")[0])};
  };
  for (int i = 0; i < 2; ++i) {
    const auto g2 = grad_of(twice);
    adam_step(twice, std::span<const Tensor<double>>(g2), {.lr = 0.1});
  }
  const auto g1 = grad_of(doubled);
  adam_step(doubled, std::span<const Tensor<double>>(g1), {.lr = 0.2});
  CHECK(std::fabs(twice.at("w")[0] - doubled.at("w")[0]) > 1e-4);
}

TEST_CASE("adam: validation leaves parameters untouched") {
  ParamSet<float> params;
  params.add("layer.weight", Tensor<float>({2}, 1.0f));
  std::vector<Tensor<float>> nan{Tensor<float>({2}, std::vector<float>{0.0f, std::nanf("")})};
  try {
    adam_step(params, std::span<const Tensor<float>>(nan));
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("layer.weight") != std::string::npos);
  }
  CHECK(params.step == 0);
  std::vector<Tensor<float>> wrong{Tensor<float>({3}, 0.0f)};
  CHECK_THROWS_AS(adam_step(params, std::span<const Tensor<float>>(wrong)), InputError);
}

TEST_CASE("checkpoint round trip and corruption") {
  Rng rng(30);
  ParamSet<float> params;
  params.add("a.weight", random_tensor<float>({3, 4}, rng));
  params.add("a.bias", random_tensor<float>({4}, rng));
  std::vector<Tensor<float>> grads{random_tensor<float>({3, 4}, rng), random_tensor<float>({4}, rng)};
  adam_step(params, std::span<const Tensor<float>>(grads));
  const std::string meta = R"({"model":"x"})";

  const auto bytes = encode_checkpoint(params, meta);
  const auto back = decode_checkpoint(bytes);
  CHECK(back.params == params);
  CHECK(back.params.step == 1);
  CHECK(back.metadata_json == meta);

  const auto dir = testing::temp_dir("checkpoint");
  write_checkpoint(dir / "p.glwt", params, meta);
  CHECK(read_checkpoint(dir / "p.glwt").params == params);

  auto bad = bytes;
  bad[1] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(bad), FormatError);
  const std::vector<std::uint8_t> cut(bytes.begin(), bytes.end() - 5);
  CHECK_THROWS_AS(decode_checkpoint(cut), CorruptionError);
}
