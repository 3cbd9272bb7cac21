#include "graphleaf/params.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "graphleaf/error.hpp"

namespace graphleaf {

template <typename T>
Tensor<T> he_uniform_init(const Shape& shape, std::size_t n_in, Rng& rng) {
  if (n_in == 0) throw InputError("He initialisation needs n_in >= 1");
  const double bound = he_uniform_bound(n_in);
  Tensor<T> out(shape);
  for (auto& v : out.values()) {
    // Clamp guards the float cast from rounding past the bound.
    const T draw = static_cast<T>(rng.uniform(-bound, bound));
    v = std::clamp(draw, static_cast<T>(-bound), static_cast<T>(bound));
  }
  return out;
}

template Tensor<float> he_uniform_init(const Shape&, std::size_t, Rng&);
template Tensor<double> he_uniform_init(const Shape&, std::size_t, Rng&);

template <typename T>
Parameter<T>& ParamSet<T>::add(std::string name, Tensor<T> value) {
  if (contains(name)) throw InputError("duplicate parameter name " + name);
  Tensor<T> zeros(value.shape());
  entries_.push_back({std::move(name), std::move(value), zeros, zeros});
  return entries_.back();
}

template <typename T>
const Parameter<T>* ParamSet<T>::find(const std::string& name) const {
  for (const auto& p : entries_)
    if (p.name == name) return &p;
  return nullptr;
}

template <typename T>
const Tensor<T>& ParamSet<T>::at(const std::string& name) const {
  if (const auto* p = find(name)) return p->value;
  throw InputError("missing parameter " + name);
}

template <typename T>
Tensor<T>& ParamSet<T>::at(const std::string& name) {
  return const_cast<Tensor<T>&>(std::as_const(*this).at(name));
}

template <typename T>
std::size_t ParamSet<T>::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].name == name) return i;
  throw InputError("missing parameter " + name);
}

template <typename T>
std::size_t ParamSet<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : entries_) n += p.value.size();
  return n;
}

template <typename T>
bool ParamSet<T>::operator==(const ParamSet& other) const {
  if (step != other.step || entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.name != b.name || a.value != b.value || a.first_moment != b.first_moment ||
        a.second_moment != b.second_moment)
      return false;
  }
  return true;
}

template class ParamSet<float>;
template class ParamSet<double>;

template <typename T>
void adam_step(ParamSet<T>& params, std::span<const Tensor<T>> grads, const AdamOptions& options) {
  auto& entries = params.entries();
  if (grads.size() != entries.size()) throw InputError("gradient count does not match parameter count");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (grads[i].shape() != entries[i].value.shape())
      throw InputError("gradient shape mismatch for " + entries[i].name);
    if (!grads[i].all_finite()) throw NumericError("non-finite gradient for parameter " + entries[i].name);
  }

  params.step += 1;
  const double t = static_cast<double>(params.step);
  const double correction1 = 1.0 - std::pow(options.beta1, t);
  const double correction2 = 1.0 - std::pow(options.beta2, t);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& p = entries[i];
    const auto& g = grads[i];
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double gk = g[k];
      const double m = options.beta1 * p.first_moment[k] + (1.0 - options.beta1) * gk;
      const double v = options.beta2 * p.second_moment[k] + (1.0 - options.beta2) * gk * gk;
      p.first_moment[k] = static_cast<T>(m);
      p.second_moment[k] = static_cast<T>(v);
      const double update = options.lr * (m / correction1) / (std::sqrt(v / correction2) + options.eps);
      p.value[k] = static_cast<T>(p.value[k] - update);
    }
  }
}

template void adam_step(ParamSet<float>&, std::span<const Tensor<float>>, const AdamOptions&);
template void adam_step(ParamSet<double>&, std::span<const Tensor<double>>, const AdamOptions&);

}  // namespace graphleaf
