#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace graphleaf {

/// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::vector<std::string> class_names);
  /// Throws InputError unless `counts` is square and matches the names.
  ConfusionMatrix(std::vector<std::string> class_names, std::vector<std::vector<std::uint64_t>> counts);

  /// Throws InputError for out-of-range indices.
  void add(std::uint32_t truth, std::uint32_t predicted, std::uint64_t count = 1);

  std::size_t size() const { return names_.size(); }
  std::uint64_t count(std::size_t truth, std::size_t predicted) const { return counts_[truth * size() + predicted]; }
  std::uint64_t total() const;
  std::uint64_t support(std::size_t cls) const;           // row sum
  std::uint64_t predicted_count(std::size_t cls) const;   // column sum
  const std::vector<std::string>& class_names() const { return names_; }

  /// CSV with a header row and a leading column of class names.
  std::string to_csv() const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::vector<std::string> names_;
  std::vector<std::uint64_t> counts_;
};

ConfusionMatrix confusion_from_labels(std::span<const std::uint32_t> truth, std::span<const std::uint32_t> predicted,
                                      std::vector<std::string> class_names);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
  /// Set when a denominator was zero and the metric was reported as 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

struct MetricBundle {
  double accuracy = 0.0;
  double precision = 0.0;  // support-weighted
  double recall = 0.0;
  double f1 = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::vector<ClassMetrics> per_class;
};

/// One-vs-rest precision/recall/F1 per class, averaged with true-class
/// support as weights (macro averages alongside). Throws InputError when
/// the matrix is empty.
MetricBundle metrics_from_confusion(const ConfusionMatrix& cm);

}  // namespace graphleaf
