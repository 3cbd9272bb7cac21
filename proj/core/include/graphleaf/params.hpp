#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "graphleaf/rng.hpp"
#include "graphleaf/tensor.hpp"

namespace graphleaf {

/// Uniform on [-sqrt(6/n_in), +sqrt(6/n_in)]. Throws InputError for n_in == 0.
template <typename T>
Tensor<T> he_uniform_init(const Shape& shape, std::size_t n_in, Rng& rng);

inline double he_uniform_bound(std::size_t n_in) { return std::sqrt(6.0 / static_cast<double>(n_in)); }

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> first_moment;
  Tensor<T> second_moment;
};

/// Named learnable tensors plus Adam state. Insertion order is preserved
/// and defines the checkpoint layout.
template <typename T>
class ParamSet {
 public:
  Parameter<T>& add(std::string name, Tensor<T> value);

  bool contains(const std::string& name) const { return find(name) != nullptr; }
  const Tensor<T>& at(const std::string& name) const;
  Tensor<T>& at(const std::string& name);
  std::size_t index_of(const std::string& name) const;

  std::vector<Parameter<T>>& entries() { return entries_; }
  const std::vector<Parameter<T>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;

  /// Adam step counter shared by all parameters.
  std::uint64_t step = 0;

  template <typename U>
  ParamSet<U> cast() const {
    ParamSet<U> out;
    for (const auto& p : entries_) {
      auto& q = out.add(p.name, p.value.template cast<U>());
      q.first_moment = p.first_moment.template cast<U>();
      q.second_moment = p.second_moment.template cast<U>();
    }
    out.step = step;
    return out;
  }

  bool operator==(const ParamSet& other) const;

 private:
  const Parameter<T>* find(const std::string& name) const;
  std::vector<Parameter<T>> entries_;
};

struct AdamOptions {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update. `grads` is aligned with
/// `params.entries()`. Throws InputError on a shape mismatch and
/// NumericError (naming the parameter) on a non-finite gradient; in either
/// case nothing is modified.
template <typename T>
void adam_step(ParamSet<T>& params, std::span<const Tensor<T>> grads, const AdamOptions& options = {});

}  // namespace graphleaf
