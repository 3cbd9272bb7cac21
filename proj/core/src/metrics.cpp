#include "graphleaf/metrics.hpp"

#include <sstream>

#include "graphleaf/error.hpp"

namespace graphleaf {

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> class_names)
    : names_(std::move(class_names)), counts_(names_.size() * names_.size(), 0) {}

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> class_names,
                                 std::vector<std::vector<std::uint64_t>> counts)
    : ConfusionMatrix(std::move(class_names)) {
  if (counts.size() != size()) throw InputError("confusion matrix row count does not match class count");
  for (std::size_t r = 0; r < size(); ++r) {
    if (counts[r].size() != size()) throw InputError("confusion matrix is not square");
    for (std::size_t c = 0; c < size(); ++c) counts_[r * size() + c] = counts[r][c];
  }
}

void ConfusionMatrix::add(std::uint32_t truth, std::uint32_t predicted, std::uint64_t count) {
  if (truth >= size() || predicted >= size()) throw InputError("class index outside the confusion matrix");
  counts_[truth * size() + predicted] += count;
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (auto c : counts_) t += c;
  return t;
}

std::uint64_t ConfusionMatrix::support(std::size_t cls) const {
  std::uint64_t s = 0;
  for (std::size_t c = 0; c < size(); ++c) s += count(cls, c);
  return s;
}

std::uint64_t ConfusionMatrix::predicted_count(std::size_t cls) const {
  std::uint64_t s = 0;
  for (std::size_t r = 0; r < size(); ++r) s += count(r, cls);
  return s;
}

std::string ConfusionMatrix::to_csv() const {
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  };
  std::ostringstream out;
  out << "true\\predicted";
  for (const auto& n : names_) out << ',' << quote(n);
  out << '\n';
  for (std::size_t r = 0; r < size(); ++r) {
    out << quote(names_[r]);
    for (std::size_t c = 0; c < size(); ++c) out << ',' << count(r, c);
    out << '\n';
  }
  return out.str();
}

ConfusionMatrix confusion_from_labels(std::span<const std::uint32_t> truth, std::span<const std::uint32_t> predicted,
                                      std::vector<std::string> class_names) {
  if (truth.size() != predicted.size()) throw InputError("label lists differ in length");
  ConfusionMatrix cm(std::move(class_names));
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
  return cm;
}

MetricBundle metrics_from_confusion(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw InputError("confusion matrix is empty");

  MetricBundle m;
  std::uint64_t correct = 0;
  const std::size_t k = cm.size();
  for (std::size_t i = 0; i < k; ++i) {
    const std::uint64_t tp = cm.count(i, i);
    const std::uint64_t support = cm.support(i);
    const std::uint64_t predicted = cm.predicted_count(i);
    correct += tp;

    ClassMetrics c;
    c.support = support;
    if (predicted > 0) {
      c.precision = static_cast<double>(tp) / static_cast<double>(predicted);
    } else {
      c.precision_undefined = true;
    }
    if (support > 0) {
      c.recall = static_cast<double>(tp) / static_cast<double>(support);
    } else {
      c.recall_undefined = true;
    }
    if (c.precision + c.recall > 0.0) {
      c.f1 = 2.0 * c.precision * c.recall / (c.precision + c.recall);
    } else {
      c.f1_undefined = true;
    }

    const double w = static_cast<double>(support) / static_cast<double>(total);
    m.precision += w * c.precision;
    m.recall += w * c.recall;
    m.f1 += w * c.f1;
    m.macro_precision += c.precision / static_cast<double>(k);
    m.macro_recall += c.recall / static_cast<double>(k);
    m.macro_f1 += c.f1 / static_cast<double>(k);
    m.per_class.push_back(c);
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(total);
  return m;
}

}  // namespace graphleaf
