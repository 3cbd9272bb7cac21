#include "graphleaf/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "graphleaf/rng.hpp"

namespace graphleaf {
namespace {

double evaluate(const ScalarFunction& f, const std::vector<Tensor<double>>& params) {
  Tape<double> tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const auto& p : params) vars.push_back(tape.constant(p));
  return tape.value(f(tape, vars))[0];
}

}  // namespace

GradcheckResult finite_diff_gradcheck(const ScalarFunction& f, const std::vector<Tensor<double>>& params,
                                      const GradcheckOptions& options) {
  std::vector<Tensor<double>> analytic;
  {
    Tape<double> tape;
    std::vector<Var> vars;
    for (const auto& p : params) vars.push_back(tape.parameter(p));
    const Var out = f(tape, vars);
    tape.backward(out);
    for (Var v : vars) analytic.push_back(tape.grad(v));
  }

  GradcheckResult result;
  Rng rng(options.seed);
  auto work = params;
  for (std::size_t pi = 0; pi < work.size(); ++pi) {
    std::vector<std::size_t> coords(work[pi].size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.max_coords_per_param > 0 && coords.size() > options.max_coords_per_param) {
      rng.shuffle(std::span<std::size_t>(coords));
      coords.resize(options.max_coords_per_param);
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t idx : coords) {
      const double original = work[pi][idx];
      work[pi][idx] = original + options.step;
      const double plus = evaluate(f, work);
      work[pi][idx] = original - options.step;
      const double minus = evaluate(f, work);
      work[pi][idx] = original;

      const double numeric = (plus - minus) / (2.0 * options.step);
      const double a = analytic[pi][idx];
      // Differences below the rounding noise of the quotient are not measurable.
      const double noise = 16.0 * std::numeric_limits<double>::epsilon() *
                           std::max({std::abs(plus), std::abs(minus), 1.0}) / options.step;
      const double diff = std::abs(a - numeric);
      const double err = diff <= noise ? 0.0 : diff / std::max({std::abs(a), std::abs(numeric), 1e-8});
      ++result.coords_checked;
      result.coords_at_noise_floor += std::max(std::abs(a), std::abs(numeric)) <= noise;
      if (result.coords_checked == 1 || err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_param = pi;
        result.worst_index = idx;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace graphleaf
