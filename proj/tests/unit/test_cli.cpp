#include <doctest.h>

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "graphleaf/checkpoint.hpp"
#include "graphleaf/graph_cache.hpp"
#include "graphleaf/image.hpp"
#include "synthetic.hpp"

using namespace graphleaf;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "graphleaf");
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small corpus preprocessed once and shared by the tests below.
const fs::path& corpus() {
  static const fs::path root = [] {
    const auto dir = testing::temp_dir("cli_corpus");
    testing::write_hue_corpus(dir / "data", 3, 6, 4, 48);
    const auto r = run({"preprocess", "--data", (dir / "data").string(), "--out", (dir / "cache" / "c").string(),
                        "--split", "0.5", "--seed", "2"});
    REQUIRE(r.code == 0);
    return dir;
  }();
  return root;
}

std::vector<std::string> quick_train(const fs::path& out) {
  return {"train", "--cache", (corpus() / "cache" / "c").string(), "--hidden", "8", "--epochs", "2", "--batch", "4",
          "--seed", "3", "--out", out.string()};
}

}  // namespace

TEST_CASE("cli: every subcommand documents its flags and --help exits 0") {
  const std::map<std::string, std::vector<std::string>> flags{
      {"preprocess", {"--data", "--out", "--segments", "--split", "--seed", "--config"}},
      {"train", {"--cache", "--model", "--epochs", "--batch", "--lr", "--edge-aug-p", "--seed", "--out", "--config"}},
      {"evaluate", {"--checkpoint", "--cache", "--config"}},
      {"predict", {"--checkpoint", "--image", "--config"}},
      {"inspect", {"--cache", "--format", "--config"}}};
  for (const auto& [sub, names] : flags) {
    const auto r = run({sub, "--help"});
    CHECK(r.code == 0);
    for (const auto& f : names) CHECK_MESSAGE(r.out.find(f) != std::string::npos, sub << " " << f);
  }
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("cli: usage errors exit 1 with a single machine-readable line") {
  for (const auto& args : std::vector<std::vector<std::string>>{
           {}, {"frobnicate"}, {"train", "--cache", "x", "--out", "y", "--bogus", "1"}, {"train", "--out", "y"},
           {"train", "--cache", "x", "--out", "y", "--model", "mlp"}, {"inspect", "--cache", "/nonexistent.ragc"}}) {
    const auto r = run(args);
    CHECK(r.code == 1);
    CHECK(r.err.rfind("error: usage: ", 0) == 0);
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  }
}

TEST_CASE("cli: data and numeric failures map to exit codes 2 and 3") {
  const auto dir = testing::temp_dir("cli_fail");
  std::ofstream(dir / "junk.ragc") << "JUNKJUNK";
  const auto bad = run({"inspect", "--cache", (dir / "junk.ragc").string()});
  CHECK(bad.code == 2);
  CHECK(bad.err.rfind("error: format: ", 0) == 0);

  const auto missing = run({"preprocess", "--data", (dir / "nothing").string(), "--out", (dir / "o").string()});
  CHECK(missing.code == 2);
  CHECK(missing.err.rfind("error: input: ", 0) == 0);

  auto args = quick_train(dir / "run");
  args.insert(args.end(), {"--lr", "1e30", "--epochs", "3"});
  const auto numeric = run(args);
  CHECK(numeric.code == 3);
  CHECK(numeric.err.find("error: numeric: ") != std::string::npos);
}

TEST_CASE("cli: preprocess, inspect, train, evaluate and predict round trip") {
  const auto& root = corpus();
  CHECK(fs::exists(root / "cache" / "c.train.ragc"));
  CHECK(fs::exists(root / "cache" / "c.test.ragc"));
  const auto manifest = nlohmann::json::parse(slurp(root / "cache" / "c.manifest.json"));
  CHECK(manifest["classes"].size() == 3);
  CHECK(manifest["samples"].size() == 18);

  const auto inspect = run({"inspect", "--cache", (root / "cache" / "c.train.ragc").string(), "--format", "json"});
  REQUIRE(inspect.code == 0);
  const auto summary = nlohmann::json::parse(inspect.out);
  CHECK(summary.dump().find("9") != std::string::npos);
  CHECK(run({"inspect", "--cache", (root / "cache" / "c.test.ragc").string()}).out.find("graphs: 9") !=
        std::string::npos);

  const auto rundir = root / "run_rt";
  const auto train = run(quick_train(rundir));
  REQUIRE(train.code == 0);
  for (const char* f : {"final.glwt", "best.glwt", "init.glwt", "curves.csv", "report.json", "confusion.csv",
                        "config.json"})
    CHECK_MESSAGE(fs::exists(rundir / f), f);
  CHECK(slurp(rundir / "curves.csv").rfind("epoch,train_loss,train_acc,test_loss,test_acc\n", 0) == 0);

  const auto eval = run({"evaluate", "--checkpoint", (rundir / "final.glwt").string(), "--cache",
                         (root / "cache" / "c.test.ragc").string(), "--report", (rundir / "eval.json").string()});
  REQUIRE(eval.code == 0);
  const auto report = nlohmann::json::parse(eval.out);
  CHECK(report["confusion_matrix"]["total"] == 9);
  CHECK(nlohmann::json::parse(slurp(rundir / "eval.json")) == report);

  const auto image = root / "data" / "class_1" / "img_000.png";
  const auto pred = run({"predict", "--checkpoint", (rundir / "final.glwt").string(), "--image", image.string()});
  REQUIRE(pred.code == 0);
  const auto p = nlohmann::json::parse(pred.out);
  CHECK(p["probabilities"].size() == 3);
}

TEST_CASE("cli: train is byte-for-byte reproducible and config files are overridden by flags") {
  const auto& root = corpus();
  REQUIRE(run(quick_train(root / "det_a")).code == 0);
  REQUIRE(run(quick_train(root / "det_b")).code == 0);
  CHECK(slurp(root / "det_a" / "curves.csv") == slurp(root / "det_b" / "curves.csv"));
  CHECK(slurp(root / "det_a" / "final.glwt") == slurp(root / "det_b" / "final.glwt"));

  std::ofstream(root / "cfg.json") << R"({"epochs": 3, "hidden": 8, "batch": 4, "edge_aug_p": 0.25})";
  const auto r = run({"train", "--config", (root / "cfg.json").string(), "--cache", (root / "cache" / "c").string(),
                      "--epochs", "1", "--out", (root / "cfg_run").string()});
  REQUIRE(r.code == 0);
  const auto used = nlohmann::json::parse(slurp(root / "cfg_run" / "config.json"));
  CHECK(used["epochs"] == 1);
  CHECK(used["edge-aug-p"] == 0.25);
  const auto curves = slurp(root / "cfg_run" / "curves.csv");
  CHECK(std::count(curves.begin(), curves.end(), '\n') == 2);

  // A run's config.json can be fed back as --config.
  const auto again = run({"train", "--config", (root / "cfg_run" / "config.json").string(), "--out",
                          (root / "cfg_run2").string()});
  REQUIRE(again.code == 0);
  CHECK(slurp(root / "cfg_run" / "curves.csv") == slurp(root / "cfg_run2" / "curves.csv"));

  std::ofstream(root / "bad_cfg.json") << R"({"epochs": 1, "colour": "red"})";
  CHECK(run({"train", "--config", (root / "bad_cfg.json").string(), "--cache", "x", "--out", "y"}).code == 1);
}

TEST_CASE("cli: zero learning rate reproduces the initial checkpoint's metrics") {
  const auto& root = corpus();
  auto args = quick_train(root / "lr0");
  args.insert(args.end(), {"--epochs", "1", "--lr", "0"});
  REQUIRE(run(args).code == 0);
  const auto test_cache = (root / "cache" / "c.test.ragc").string();
  const auto a = run({"evaluate", "--checkpoint", (root / "lr0" / "final.glwt").string(), "--cache", test_cache});
  const auto b = run({"evaluate", "--checkpoint", (root / "lr0" / "init.glwt").string(), "--cache", test_cache});
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  const auto ja = nlohmann::json::parse(a.out), jb = nlohmann::json::parse(b.out);
  CHECK(ja["metrics"] == jb["metrics"]);
  CHECK(ja["confusion_matrix"] == jb["confusion_matrix"]);
}

TEST_CASE("cli: predict on a black image with an untrained model gives a probability vector") {
  const auto& root = corpus();
  RgbImage black(64, 64);
  write_png(root / "black.png", black);
  auto args = quick_train(root / "untrained");
  args.insert(args.end(), {"--epochs", "1", "--lr", "0"});
  REQUIRE(run(args).code == 0);
  const auto r = run({"predict", "--checkpoint", (root / "untrained" / "init.glwt").string(), "--image",
                      (root / "black.png").string()});
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  double sum = 0.0;
  for (double p : doc["probabilities"]) {
    CHECK(p >= 0.0);
    sum += p;
  }
  CHECK(std::fabs(sum - 1.0) < 1e-6);
}

TEST_CASE("cli: preprocess on a 3 x 400 corpus at 0.75 yields 900 / 300 graphs") {
  const auto dir = testing::temp_dir("cli_potato");
  testing::write_hue_corpus(dir / "data", 3, 400, 9, 24);
  const auto r = run({"preprocess", "--data", (dir / "data").string(), "--out", (dir / "p").string(), "--split",
                      "0.75"});
  REQUIRE(r.code == 0);
  CHECK(read_cache(dir / "p.train.ragc").graphs.size() == 900);
  CHECK(read_cache(dir / "p.test.ragc").graphs.size() == 300);
}
