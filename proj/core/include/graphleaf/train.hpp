#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "graphleaf/graph_cache.hpp"
#include "graphleaf/metrics.hpp"
#include "graphleaf/models.hpp"
#include "graphleaf/params.hpp"

namespace graphleaf {

struct RunConfig {
  ModelConfig model;
  int epochs = 100;
  std::size_t batch_size = 32;
  double lr = 0.001;
  std::uint64_t seed = 0;

  void validate() const;
};

struct CurveRow {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double test_loss = 0.0;
  double test_acc = 0.0;

  bool operator==(const CurveRow&) const = default;
};

struct EvalReport {
  MetricBundle metrics;
  double average_loss = 0.0;
  ConfusionMatrix confusion;
  std::vector<std::uint32_t> predictions;  // per test graph, in dataset order
  std::vector<double> losses;              // per-graph cross-entropy
};

struct TrainResult {
  ParamSet<float> initial_params;
  ParamSet<float> final_params;
  ParamSet<float> best_params;
  int best_epoch = 0;
  double best_test_accuracy = 0.0;
  std::vector<CurveRow> curve;
};

using EpochCallback = std::function<void(const CurveRow&)>;

/// Initialises from `cfg.seed`, then per epoch shuffles, runs augmented
/// forward passes, back-propagates the mean cross-entropy and takes one
/// Adam step per batch. Train loss/accuracy are running values over the
/// epoch's batches; test values come from evaluate_model at epoch end.
/// Throws NumericError (with epoch and batch) on a non-finite loss.
TrainResult train_model(const RunConfig& cfg, const GraphDataset& train, const GraphDataset& test,
                        const EpochCallback& on_epoch = {});

/// Argmax predictions with augmentation disabled. Throws InputError on an
/// empty dataset.
EvalReport evaluate_model(const ParamSet<float>& params, const ModelConfig& cfg, const GraphDataset& test,
                          std::size_t batch_size = 32);

/// `epoch,train_loss,train_acc,test_loss,test_acc` with one row per epoch.
std::string curve_to_csv(std::span<const CurveRow> curve);

struct ReportContext {
  std::string config_json;  // echoed verbatim under "config"
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
};

std::string report_to_json(const EvalReport& report, const ReportContext& context);

}  // namespace graphleaf
