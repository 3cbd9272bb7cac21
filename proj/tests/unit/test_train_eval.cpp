#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "graphleaf/error.hpp"
#include "graphleaf/metrics.hpp"
#include "graphleaf/train.hpp"
#include "synthetic.hpp"

using namespace graphleaf;

namespace {

// Graphs whose nodes mostly carry the class colour; the rest are noise.
GraphDataset colour_graphs(std::size_t count, std::uint32_t classes, std::uint64_t seed, SplitTag split) {
  Rng rng(seed);
  GraphDataset ds;
  for (std::uint32_t c = 0; c < classes; ++c) ds.class_names.push_back("c" + std::to_string(c));
  ds.split = split;
  for (std::size_t i = 0; i < count; ++i) {
    const auto label = static_cast<std::uint32_t>(i % classes);
    auto g = testing::random_graph(rng, 6, 12, 0.35, label);
    for (std::uint32_t n = 0; n < g.node_count; ++n) {
      if (rng.uniform01() < 0.3) continue;
      for (std::uint32_t ch = 0; ch < 3; ++ch)
        g.node_features[n * 3 + ch] = (ch == label % 3 ? 0.8f : -0.6f) + static_cast<float>(rng.uniform(-0.1, 0.1));
    }
    ds.graphs.push_back(std::move(g));
  }
  return ds;
}

RunConfig small_run(int epochs, int hidden = 16) {
  RunConfig rc;
  rc.model.hidden_dim = hidden;
  rc.model.num_classes = 2;
  rc.epochs = epochs;
  rc.batch_size = 8;
  rc.seed = 5;
  return rc;
}

// Independent oracle: per-class one-vs-rest counts straight from label lists.
struct Oracle {
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;
  std::vector<double> p, r, f;
};

Oracle brute_force(const std::vector<std::uint32_t>& truth, const std::vector<std::uint32_t>& pred, std::size_t k) {
  Oracle o;
  double correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == pred[i];
  o.accuracy = correct / static_cast<double>(truth.size());
  for (std::uint32_t c = 0; c < k; ++c) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (pred[i] == c && truth[i] == c) tp += 1;
      if (pred[i] == c && truth[i] != c) fp += 1;
      if (pred[i] != c && truth[i] == c) fn += 1;
    }
    const double p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double r = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    const double f = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
    o.p.push_back(p);
    o.r.push_back(r);
    o.f.push_back(f);
    const double w = (tp + fn) / static_cast<double>(truth.size());
    o.precision += w * p;
    o.recall += w * r;
    o.f1 += w * f;
  }
  return o;
}

}  // namespace

TEST_CASE("metrics: binary example") {
  const ConfusionMatrix cm({"neg", "pos"}, {{50, 10}, {5, 35}});
  const auto m = metrics_from_confusion(cm);
  const double p1 = 35.0 / 45.0, r1 = 35.0 / 40.0;
  CHECK(m.per_class[1].precision == doctest::Approx(p1).epsilon(1e-12));
  CHECK(m.per_class[1].recall == doctest::Approx(r1).epsilon(1e-12));
  CHECK(m.per_class[1].f1 == doctest::Approx(2 * p1 * r1 / (p1 + r1)).epsilon(1e-12));
  CHECK(p1 == doctest::Approx(0.7778).epsilon(1e-4));
  CHECK(r1 == doctest::Approx(0.875));
  CHECK(m.per_class[1].f1 == doctest::Approx(0.8235).epsilon(1e-4));
  CHECK(m.accuracy == doctest::Approx(85.0 / 100.0));
}

TEST_CASE("metrics: three-class accuracy and weighted recall") {
  const ConfusionMatrix cm({"a", "b", "c"}, {{8, 1, 1}, {0, 9, 1}, {1, 0, 9}});
  const auto m = metrics_from_confusion(cm);
  CHECK(m.accuracy == doctest::Approx(26.0 / 30.0).epsilon(1e-12));
  CHECK(m.accuracy == doctest::Approx(0.8667).epsilon(1e-4));
  CHECK(m.recall == doctest::Approx(m.accuracy).epsilon(1e-12));
  CHECK(cm.total() == 30);
}

TEST_CASE("metrics: degenerate predictions and zero denominators") {
  const ConfusionMatrix always0({"a", "b"}, {{10, 0}, {10, 0}});
  const auto m = metrics_from_confusion(always0);
  CHECK(m.accuracy == 0.5);
  CHECK(m.recall == 0.5);
  CHECK(m.per_class[1].precision == 0.0);
  CHECK(m.per_class[1].precision_undefined);
  CHECK(m.per_class[1].f1_undefined);

  const ConfusionMatrix perfect({"a", "b", "c"}, {{4, 0, 0}, {0, 7, 0}, {0, 0, 1}});
  const auto pm = metrics_from_confusion(perfect);
  CHECK(pm.accuracy == 1.0);
  CHECK(pm.precision == doctest::Approx(1.0));
  CHECK(pm.recall == doctest::Approx(1.0));
  CHECK(pm.f1 == doctest::Approx(1.0));

  const ConfusionMatrix single({"a", "b"}, {{90, 10}, {0, 0}});
  const auto sm = metrics_from_confusion(single);
  CHECK(sm.per_class[0].recall == doctest::Approx(0.9));
  CHECK(sm.per_class[1].recall_undefined);

  CHECK_THROWS_AS(metrics_from_confusion(ConfusionMatrix({"a", "b"})), InputError);
  ConfusionMatrix bad({"a"});
  CHECK_THROWS_AS(bad.add(0, 1), InputError);
  CHECK_THROWS_AS(ConfusionMatrix({"a", "b"}, {{1, 2}}), InputError);
}

TEST_CASE("metrics: agree with a brute-force oracle on random label lists") {
  Rng rng(2024);
  for (int t = 0; t < 200; ++t) {
    const std::size_t k = 2 + rng.uniform_int(5);
    const std::size_t n = 1 + rng.uniform_int(300);
    std::vector<std::uint32_t> truth(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = static_cast<std::uint32_t>(rng.uniform_int(k));
      pred[i] = rng.uniform01() < 0.6 ? truth[i] : static_cast<std::uint32_t>(rng.uniform_int(k));
    }
    std::vector<std::string> names(k, "x");
    const auto m = metrics_from_confusion(confusion_from_labels(truth, pred, names));
    const auto o = brute_force(truth, pred, k);
    CHECK(std::fabs(m.accuracy - o.accuracy) < 1e-9);
    CHECK(std::fabs(m.precision - o.precision) < 1e-9);
    CHECK(std::fabs(m.recall - o.recall) < 1e-9);
    CHECK(std::fabs(m.f1 - o.f1) < 1e-9);
    CHECK(std::fabs(m.recall - m.accuracy) < 1e-9);
    for (std::size_t c = 0; c < k; ++c) {
      CHECK(std::fabs(m.per_class[c].precision - o.p[c]) < 1e-9);
      CHECK(std::fabs(m.per_class[c].recall - o.r[c]) < 1e-9);
      CHECK(std::fabs(m.per_class[c].f1 - o.f[c]) < 1e-9);
    }
  }
}

TEST_CASE("confusion csv has class-name header row and column") {
  ConfusionMatrix cm({"healthy", "late, blight"});
  cm.add(0, 0, 3);
  cm.add(1, 0);
  CHECK(cm.to_csv() == "true\\predicted,healthy,\"late, blight\"\nhealthy,3,0\n\"late, blight\",1,0\n");
}

TEST_CASE("train_model: lr = 0 leaves parameters unchanged and still emits curves") {
  const auto train = colour_graphs(12, 2, 1, SplitTag::train);
  const auto test = colour_graphs(6, 2, 2, SplitTag::test);
  auto rc = small_run(1);
  rc.lr = 0.0;
  const auto result = train_model(rc, train, test);
  CHECK(result.curve.size() == 1);
  CHECK(result.curve[0].epoch == 1);
  for (std::size_t i = 0; i < result.initial_params.size(); ++i)
    CHECK(result.final_params.entries()[i].value == result.initial_params.entries()[i].value);
}

TEST_CASE("train_model: identical config and seed give identical curves") {
  const auto train = colour_graphs(20, 2, 3, SplitTag::train);
  const auto test = colour_graphs(8, 2, 4, SplitTag::test);
  const auto a = train_model(small_run(3), train, test);
  const auto b = train_model(small_run(3), train, test);
  CHECK(a.curve == b.curve);
  CHECK(curve_to_csv(a.curve) == curve_to_csv(b.curve));
  CHECK(a.final_params == b.final_params);
  auto other = small_run(3);
  other.seed = 6;
  CHECK(train_model(other, train, test).curve != a.curve);
}

TEST_CASE("train_model: hybrid overfits 16 two-class colour graphs") {
  const auto train = colour_graphs(16, 2, 11, SplitTag::train);
  const auto test = colour_graphs(8, 2, 12, SplitTag::test);
  auto rc = small_run(100, 512);
  const auto result = train_model(rc, train, test);
  const auto on_train = evaluate_model(result.final_params, rc.model, train);
  CHECK(on_train.metrics.accuracy == 1.0);
}

TEST_CASE("train_model: loss falls over the first 10 epochs without augmentation") {
  const auto train = colour_graphs(48, 3, 21, SplitTag::train);
  const auto test = colour_graphs(12, 3, 22, SplitTag::test);
  RunConfig rc;
  rc.model.hidden_dim = 64;
  rc.model.num_classes = 3;
  rc.model.edge_aug_p = 0.0;
  rc.epochs = 10;
  rc.batch_size = 16;
  rc.seed = 1;
  const auto result = train_model(rc, train, test);
  // Least-squares slope of train loss against epoch.
  double mx = 0, my = 0;
  for (const auto& r : result.curve) mx += r.epoch, my += r.train_loss;
  mx /= 10, my /= 10;
  double num = 0, den = 0;
  for (const auto& r : result.curve) num += (r.epoch - mx) * (r.train_loss - my), den += (r.epoch - mx) * (r.epoch - mx);
  CHECK(num / den < 0.0);
  CHECK(result.curve.back().train_loss < result.curve.front().train_loss);
}

TEST_CASE("train_model: non-finite loss aborts with epoch and batch") {
  const auto train = colour_graphs(16, 2, 31, SplitTag::train);
  const auto test = colour_graphs(4, 2, 32, SplitTag::test);
  auto rc = small_run(5);
  rc.lr = 1e30;
  try {
    train_model(rc, train, test);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("epoch") != std::string::npos);
    CHECK(msg.find("batch") != std::string::npos);
  }
}

TEST_CASE("train_model: precondition errors") {
  const auto train = colour_graphs(8, 2, 1, SplitTag::train);
  auto test = colour_graphs(4, 2, 2, SplitTag::test);
  auto rc = small_run(1);
  rc.model.num_classes = 3;
  CHECK_THROWS_AS(train_model(rc, train, test), InputError);
  rc = small_run(1);
  rc.epochs = 0;
  CHECK_THROWS_AS(train_model(rc, train, test), InputError);
  test.class_names = {"x", "y"};
  CHECK_THROWS_AS(train_model(small_run(1), train, test), InputError);
}

TEST_CASE("evaluate_model: loss consistency, confusion mass and report") {
  const auto test = colour_graphs(13, 3, 41, SplitTag::test);
  ModelConfig cfg;
  cfg.hidden_dim = 16;
  cfg.num_classes = 3;
  Rng rng(1);
  const auto params = init_params<float>(cfg, rng);
  const auto report = evaluate_model(params, cfg, test, 4);
  CHECK(report.confusion.total() == test.graphs.size());

  double sum = 0.0;
  for (const auto& g : test.graphs) {
    const std::vector<RegionGraph> one{g};
    const std::size_t order[] = {0};
    const auto logits = model_logits(make_batch(one, order), params, cfg);
    double mx = logits[0];
    for (std::size_t c = 1; c < 3; ++c) mx = std::max<double>(mx, logits[c]);
    double z = 0.0;
    for (std::size_t c = 0; c < 3; ++c) z += std::exp(double(logits[c]) - mx);
    sum += -(double(logits[g.label]) - mx - std::log(z));
  }
  CHECK(std::fabs(report.average_loss - sum / static_cast<double>(test.graphs.size())) < 1e-6);

  const auto doc = nlohmann::json::parse(report_to_json(report, {R"({"k":1})", 7, 0.5}));
  CHECK(doc["metrics"]["averaging"] == "weighted");
  CHECK(doc["per_class"].size() == 3);
  CHECK(doc["confusion_matrix"]["total"] == 13);
  CHECK(doc["config"]["k"] == 1);
  CHECK(doc["seed"] == 7);

  GraphDataset empty;
  empty.class_names = test.class_names;
  CHECK_THROWS_AS(evaluate_model(params, cfg, empty), InputError);
}

TEST_CASE("curve csv format") {
  const std::vector<CurveRow> rows{{1, 0.5, 0.25, 0.75, 1.0}};
  CHECK(curve_to_csv(rows) == "epoch,train_loss,train_acc,test_loss,test_acc\n1,0.5,0.25,0.75,1\n");
}
