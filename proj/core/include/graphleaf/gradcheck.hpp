#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "graphleaf/autograd.hpp"

namespace graphleaf {

/// Scalar function of the given parameters, built on a fresh double tape.
using ScalarFunction = std::function<Var(Tape<double>&, std::span<const Var>)>;

struct GradcheckOptions {
  double step = 1e-3;
  /// When non-zero, only this many randomly chosen coordinates per
  /// parameter are perturbed.
  std::size_t max_coords_per_param = 0;
  std::uint64_t seed = 0;
};

struct GradcheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coords_checked = 0;
  /// Coordinates whose analytic and numeric gradients are both within the
  /// rounding noise of the difference quotient, i.e. indistinguishable from 0.
  std::size_t coords_at_noise_floor = 0;
};

/// Compares the tape gradient with central differences and reports
/// max |a - n| / max(|a|, |n|, 1e-8) over the checked coordinates.
/// A coordinate is exact when |a - n| <= 16 eps max(|f+|, |f-|, 1) / step.
GradcheckResult finite_diff_gradcheck(const ScalarFunction& f, const std::vector<Tensor<double>>& params,
                                      const GradcheckOptions& options = {});

}  // namespace graphleaf
