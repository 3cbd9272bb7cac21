#include "graphleaf/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "graphleaf/batch.hpp"
#include "graphleaf/error.hpp"
#include "graphleaf/ops.hpp"

namespace graphleaf {
namespace {

std::uint32_t argmax_row(const Tensor<float>& logits, std::size_t r) {
  const auto row = logits.row(r);
  return static_cast<std::uint32_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

void check_compatible(const RunConfig& cfg, const GraphDataset& train, const GraphDataset& test) {
  if (train.class_names != test.class_names) throw InputError("train and test caches have different class names");
  if (static_cast<std::size_t>(cfg.model.num_classes) != train.class_names.size())
    throw InputError("model num_classes does not match the dataset class count");
  if (train.graphs.empty()) throw InputError("training set is empty");
  if (test.graphs.empty()) throw InputError("test set is empty");
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  if (epochs < 1) throw InputError("epochs must be >= 1");
  if (batch_size < 1) throw InputError("batch size must be >= 1");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw InputError("learning rate must be a finite non-negative number");
}

TrainResult train_model(const RunConfig& cfg, const GraphDataset& train, const GraphDataset& test,
                        const EpochCallback& on_epoch) {
  cfg.validate();
  check_compatible(cfg, train, test);

  const Rng root(cfg.seed);
  Rng init_rng = root.fork("init");
  Rng shuffle_rng = root.fork("shuffle");
  Rng augment_rng = root.fork("augment");

  TrainResult result;
  ParamSet<float> params = init_params<float>(cfg.model, init_rng);
  result.initial_params = params;
  result.best_params = params;
  result.best_test_accuracy = -1.0;
  const AdamOptions adam{.lr = cfg.lr};

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto batches = make_batches(train.graphs, cfg.batch_size, true, shuffle_rng);
    double loss_sum = 0.0;
    std::size_t correct = 0, seen = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto& batch = batches[b];
      Tape<float> tape;
      const auto vars = bind_params(tape, params, true);
      const Var logits = model_forward(tape, batch, params, vars, cfg.model, true, &augment_rng);
      const Var loss = ops::softmax_cross_entropy(tape, logits, batch.labels);
      const double loss_value = tape.value(loss)[0];
      if (!std::isfinite(loss_value))
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b + 1));

      tape.backward(loss);
      std::vector<Tensor<float>> grads;
      grads.reserve(vars.size());
      for (Var v : vars) grads.push_back(tape.grad(v));
      try {
        adam_step(params, std::span<const Tensor<float>>(grads), adam);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b + 1));
      }

      const auto& lv = tape.value(logits);
      for (std::size_t g = 0; g < batch.graph_count(); ++g) correct += argmax_row(lv, g) == batch.labels[g];
      loss_sum += loss_value * static_cast<double>(batch.graph_count());
      seen += batch.graph_count();
    }

    const auto eval = evaluate_model(params, cfg.model, test, cfg.batch_size);
    CurveRow row{epoch, loss_sum / static_cast<double>(seen), static_cast<double>(correct) / static_cast<double>(seen),
                 eval.average_loss, eval.metrics.accuracy};
    result.curve.push_back(row);
    if (row.test_acc > result.best_test_accuracy) {
      result.best_test_accuracy = row.test_acc;
      result.best_epoch = epoch;
      result.best_params = params;
    }
    if (on_epoch) on_epoch(row);
  }
  result.final_params = std::move(params);
  return result;
}

EvalReport evaluate_model(const ParamSet<float>& params, const ModelConfig& cfg, const GraphDataset& test,
                          std::size_t batch_size) {
  if (test.graphs.empty()) throw InputError("evaluation set is empty");
  if (static_cast<std::size_t>(cfg.num_classes) != test.class_names.size())
    throw InputError("model num_classes does not match the dataset class count");
  check_params(params, cfg);

  EvalReport report;
  report.confusion = ConfusionMatrix(test.class_names);
  report.predictions.resize(test.graphs.size());
  report.losses.resize(test.graphs.size());
  Rng unused(0);
  for (const auto& batch : make_batches(test.graphs, batch_size, false, unused)) {
    const auto logits = model_logits(batch, params, cfg);
    if (!logits.all_finite()) throw NumericError("non-finite logits during evaluation");
    const auto losses = per_row_cross_entropy(logits, std::span<const std::uint32_t>(batch.labels));
    for (std::size_t g = 0; g < batch.graph_count(); ++g) {
      const auto idx = batch.source_index[g];
      report.predictions[idx] = argmax_row(logits, g);
      report.losses[idx] = losses[g];
      report.confusion.add(batch.labels[g], report.predictions[idx]);
    }
  }
  double total = 0.0;
  for (double l : report.losses) total += l;
  report.average_loss = total / static_cast<double>(report.losses.size());
  report.metrics = metrics_from_confusion(report.confusion);
  return report;
}

std::string curve_to_csv(std::span<const CurveRow> curve) {
  std::string out = "epoch,train_loss,train_acc,test_loss,test_acc\n";
  char line[160];
  for (const auto& r : curve) {
    std::snprintf(line, sizeof line, "%d,%.9g,%.9g,%.9g,%.9g\n", r.epoch, r.train_loss, r.train_acc, r.test_loss,
                  r.test_acc);
    out += line;
  }
  return out;
}

std::string report_to_json(const EvalReport& report, const ReportContext& context) {
  const auto& m = report.metrics;
  const auto& names = report.confusion.class_names();
  nlohmann::json j;
  j["metrics"] = {{"accuracy", m.accuracy},
                  {"precision", m.precision},
                  {"recall", m.recall},
                  {"f1", m.f1},
                  {"macro_precision", m.macro_precision},
                  {"macro_recall", m.macro_recall},
                  {"macro_f1", m.macro_f1},
                  {"average_loss", report.average_loss},
                  {"averaging", "weighted"}};
  auto& per_class = j["per_class"] = nlohmann::json::array();
  for (std::size_t c = 0; c < m.per_class.size(); ++c) {
    const auto& pc = m.per_class[c];
    nlohmann::json undefined = nlohmann::json::array();
    if (pc.precision_undefined) undefined.push_back("precision");
    if (pc.recall_undefined) undefined.push_back("recall");
    if (pc.f1_undefined) undefined.push_back("f1");
    per_class.push_back({{"class", names[c]},
                         {"precision", pc.precision},
                         {"recall", pc.recall},
                         {"f1", pc.f1},
                         {"support", pc.support},
                         {"zero_denominator", undefined}});
  }
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < report.confusion.size(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t c = 0; c < report.confusion.size(); ++c) row.push_back(report.confusion.count(r, c));
    rows.push_back(row);
  }
  j["confusion_matrix"] = {{"classes", names}, {"rows", rows}, {"total", report.confusion.total()}};
  j["config"] = context.config_json.empty() ? nlohmann::json::object() : nlohmann::json::parse(context.config_json);
  j["seed"] = context.seed;
  j["wall_time_seconds"] = context.wall_seconds;
  return j.dump(2);
}

}  // namespace graphleaf
