#include "cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "graphleaf/batch.hpp"
#include "graphleaf/checkpoint.hpp"
#include "graphleaf/dataset.hpp"
#include "graphleaf/error.hpp"
#include "graphleaf/graph_cache.hpp"
#include "graphleaf/image.hpp"
#include "graphleaf/models.hpp"
#include "graphleaf/parallel.hpp"
#include "graphleaf/rag.hpp"
#include "graphleaf/slic.hpp"
#include "graphleaf/train.hpp"

namespace graphleaf::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PreprocessArgs {
  std::string data, out;
  int segments = 50;
  double split = 0.8;
  double compactness = 10.0;
  std::uint64_t seed = 0;
};

struct TrainArgs {
  std::string cache, model = "hybrid", out;
  int epochs = 100;
  std::size_t batch = 32;
  double lr = 0.001;
  double edge_aug_p = 0.5;
  std::uint64_t seed = 0;
  int hidden = 512;
  int heads = 2;
  int gcn_layers = 2;
  int gat_layers = 2;
};

struct EvaluateArgs {
  std::string checkpoint, cache, report;
  std::size_t batch = 32;
};

struct PredictArgs {
  std::string checkpoint, image;
};

struct InspectArgs {
  std::string cache, format = "text";
  bool graphs = false;
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

fs::path train_cache_path(const std::string& prefix) { return prefix + ".train.ragc"; }
fs::path test_cache_path(const std::string& prefix) { return prefix + ".test.ragc"; }
fs::path manifest_path(const std::string& prefix) { return prefix + ".manifest.json"; }

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(what + " is not valid JSON: " + e.what());
  }
}

struct CheckpointInfo {
  ModelConfig model;
  std::vector<std::string> class_names;
  SlicParams slic;
  json metadata;
};

CheckpointInfo checkpoint_info(const Checkpoint& ck) {
  CheckpointInfo info;
  info.metadata = parse_json(ck.metadata_json, "checkpoint metadata");
  try {
    info.model = model_config_from_json(info.metadata.at("model").dump());
    info.class_names = info.metadata.at("class_names").get<std::vector<std::string>>();
    info.slic.segments = info.metadata.value("segments", info.slic.segments);
    info.slic.compactness = info.metadata.value("compactness", info.slic.compactness);
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint metadata is incomplete: ") + e.what());
  }
  if (info.class_names.size() != static_cast<std::size_t>(info.model.num_classes))
    throw FormatError("checkpoint class names do not match the model class count");
  check_params(ck.params, info.model);
  return info;
}

// ---------------------------------------------------------------- preprocess

GraphDataset build_graphs(const DatasetManifest& part, const std::vector<std::string>& classes, SplitTag tag,
                          const SlicParams& slic) {
  GraphDataset ds;
  ds.class_names = classes;
  ds.split = tag;
  ds.graphs.resize(part.samples.size());
  parallel_for(part.samples.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& sample = part.samples[i];
      const auto image = preprocess_image(sample.path);
      ds.graphs[i] = build_rag(slic_segment(image, slic), image, sample.label);
    }
  });
  return ds;
}

int run_preprocess(const PreprocessArgs& a, std::ostream& out) {
  const auto manifest = scan_dataset(a.data);
  const auto [train_part, test_part] = stratified_split(manifest, a.split, a.seed);
  SlicParams slic;
  slic.segments = a.segments;
  slic.compactness = a.compactness;

  const auto train = build_graphs(train_part, manifest.classes, SplitTag::train, slic);
  const auto test = build_graphs(test_part, manifest.classes, SplitTag::test, slic);

  ensure_parent(fs::path(a.out + ".x"));
  write_cache(train, train_cache_path(a.out));
  write_cache(test, test_cache_path(a.out));

  json doc = parse_json(manifest_to_json(manifest), "manifest");
  doc["preprocess"] = {{"segments", a.segments},
                       {"compactness", a.compactness},
                       {"split", a.split},
                       {"seed", a.seed},
                       {"image_size", kImageSize}};
  auto paths = [](const DatasetManifest& m) {
    json list = json::array();
    for (const auto& s : m.samples) list.push_back(s.path.string());
    return list;
  };
  doc["train"] = paths(train_part);
  doc["test"] = paths(test_part);
  write_text(manifest_path(a.out), doc.dump(2) + "\n");

  out << "classes: " << manifest.classes.size() << ", images: " << manifest.samples.size()
      << ", skipped: " << manifest.skipped.size() << "\n"
      << "train graphs: " << train.graphs.size() << " -> " << train_cache_path(a.out).string() << "\n"
      << "test graphs: " << test.graphs.size() << " -> " << test_cache_path(a.out).string() << "\n";
  return kOk;
}

// --------------------------------------------------------------------- train

json train_args_json(const TrainArgs& a) {
  return {{"cache", a.cache},   {"model", a.model},      {"epochs", a.epochs},
          {"batch", a.batch},   {"lr", a.lr},            {"edge-aug-p", a.edge_aug_p},
          {"seed", a.seed},     {"hidden", a.hidden},    {"heads", a.heads},
          {"gcn-layers", a.gcn_layers}, {"gat-layers", a.gat_layers}, {"out", a.out}};
}

int run_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const auto train = read_cache(train_cache_path(a.cache));
  const auto test = read_cache(test_cache_path(a.cache));
  if (train.class_names != test.class_names) throw FormatError("train and test caches list different classes");

  RunConfig rc;
  rc.model.variant = parse_variant(a.model);
  rc.model.hidden_dim = a.hidden;
  rc.model.heads = a.heads;
  rc.model.gcn_layers = a.gcn_layers;
  rc.model.gat_layers = a.gat_layers;
  rc.model.edge_aug_p = a.edge_aug_p;
  rc.model.num_classes = static_cast<int>(train.class_names.size());
  rc.epochs = a.epochs;
  rc.batch_size = a.batch;
  rc.lr = a.lr;
  rc.seed = a.seed;
  rc.validate();

  SlicParams slic;
  if (fs::exists(manifest_path(a.cache))) {
    const auto doc = parse_json(read_text(manifest_path(a.cache)), "manifest");
    if (doc.contains("preprocess")) {
      slic.segments = doc["preprocess"].value("segments", slic.segments);
      slic.compactness = doc["preprocess"].value("compactness", slic.compactness);
    }
  }

  const fs::path dir(a.out);
  fs::create_directories(dir);

  const auto start = std::chrono::steady_clock::now();
  const auto result = train_model(rc, train, test, [&](const CurveRow& r) {
    char line[200];
    std::snprintf(line, sizeof line, "epoch %d/%d  train_loss %.4f  train_acc %.4f  test_loss %.4f  test_acc %.4f\n",
                  r.epoch, rc.epochs, r.train_loss, r.train_acc, r.test_loss, r.test_acc);
    err << line << std::flush;
  });

  const json model_json = parse_json(model_config_to_json(rc.model), "model config");
  auto metadata = [&](const char* kind, int epoch) {
    return json{{"model", model_json},     {"class_names", train.class_names}, {"segments", slic.segments},
                {"compactness", slic.compactness}, {"seed", a.seed}, {"kind", kind}, {"epoch", epoch}}
        .dump();
  };
  write_checkpoint(dir / "init.glwt", result.initial_params, metadata("init", 0));
  write_checkpoint(dir / "final.glwt", result.final_params, metadata("final", rc.epochs));
  write_checkpoint(dir / "best.glwt", result.best_params, metadata("best", result.best_epoch));
  write_text(dir / "curves.csv", curve_to_csv(result.curve));

  const auto report = evaluate_model(result.final_params, rc.model, test, rc.batch_size);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const std::string config = train_args_json(a).dump(2);
  write_text(dir / "config.json", config + "\n");
  write_text(dir / "report.json", report_to_json(report, {config, a.seed, wall}) + "\n");
  write_text(dir / "confusion.csv", report.confusion.to_csv());

  char line[200];
  std::snprintf(line, sizeof line, "final test accuracy %.4f, best %.4f at epoch %d\n", report.metrics.accuracy,
                result.best_test_accuracy, result.best_epoch);
  out << line << "outputs: " << dir.string() << "\n";
  return kOk;
}

// ------------------------------------------------------------------ evaluate

int run_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const auto ck = read_checkpoint(a.checkpoint);
  const auto info = checkpoint_info(ck);
  const auto data = read_cache(a.cache);
  if (data.class_names != info.class_names) throw FormatError("cache classes do not match the checkpoint");

  const auto start = std::chrono::steady_clock::now();
  const auto report = evaluate_model(ck.params, info.model, data, a.batch);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const json config = {{"checkpoint", a.checkpoint}, {"cache", a.cache}, {"batch", a.batch},
                       {"model", info.metadata.at("model")}};
  const auto text = report_to_json(report, {config.dump(), info.metadata.value("seed", std::uint64_t{0}), wall});
  out << text << "\n";
  fs::path report_path = a.report.empty() ? fs::path(a.checkpoint).replace_extension(".eval.json") : fs::path(a.report);
  ensure_parent(report_path);
  write_text(report_path, text + "\n");
  return kOk;
}

// ------------------------------------------------------------------- predict

int run_predict(const PredictArgs& a, std::ostream& out) {
  const auto ck = read_checkpoint(a.checkpoint);
  const auto info = checkpoint_info(ck);
  const auto image = preprocess_image(a.image);
  const std::vector<RegionGraph> graphs{build_rag(slic_segment(image, info.slic), image, 0)};
  const std::size_t order[] = {0};
  const auto batch = make_batch(graphs, order);
  const auto logits = model_logits(batch, ck.params, info.model);
  if (!logits.all_finite()) throw NumericError("non-finite logits");
  const auto probs = softmax_rows(logits.cast<double>());

  std::size_t best = 0;
  std::vector<double> p(probs.cols());
  for (std::size_t c = 0; c < p.size(); ++c) {
    p[c] = probs(0, c);
    if (p[c] > p[best]) best = c;
  }
  json doc = {{"image", a.image},
              {"class", info.class_names[best]},
              {"class_index", best},
              {"classes", info.class_names},
              {"probabilities", p}};
  out << doc.dump(2) << "\n";
  return kOk;
}

// ------------------------------------------------------------------- inspect

int run_inspect(const InspectArgs& a, std::ostream& out) {
  const auto ds = read_cache(a.cache);
  if (a.format == "json") {
    out << dataset_to_json(ds, a.graphs) << "\n";
    return kOk;
  }
  const auto s = summarize(ds);
  char line[200];
  out << "split: " << to_string(ds.split) << "\n"
      << "graphs: " << ds.graphs.size() << "\n"
      << "classes: " << ds.class_names.size() << "\n";
  for (std::size_t c = 0; c < ds.class_names.size(); ++c)
    out << "  " << ds.class_names[c] << ": " << s.class_histogram[c] << "\n";
  std::snprintf(line, sizeof line, "nodes: min %zu  mean %.2f  max %zu\nedges: min %zu  mean %.2f  max %zu\n",
                s.min_nodes, s.mean_nodes, s.max_nodes, s.min_edges, s.mean_edges, s.max_edges);
  out << line;
  return kOk;
}

// -------------------------------------------------------------------- config

// Flat JSON object whose keys mirror flag names. Values are injected ahead
// of the explicit arguments; with TakeLast the command line wins.
std::vector<std::string> with_config(const std::vector<std::string>& args, CLI::App& sub) {
  std::string path;
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;

  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw UsageError("config file " + path + " is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw UsageError("config file must contain a JSON object");

  std::vector<std::string> injected;
  for (const auto& [key, value] : doc.items()) {
    std::string name = key;
    for (auto& ch : name)
      if (ch == '_') ch = '-';
    if (name == "config" || sub.get_option_no_throw("--" + name) == nullptr)
      throw UsageError("unknown config key '" + key + "' for " + sub.get_name());
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else if (value.is_boolean()) {
      text = value.get<bool>() ? "true" : "false";
    } else if (value.is_number()) {
      text = value.dump();
    } else {
      throw UsageError("config key '" + key + "' must be a string, number or boolean");
    }
    injected.push_back("--" + name + "=" + text);
  }
  std::vector<std::string> merged{args[0], args[1]};
  merged.insert(merged.end(), injected.begin(), injected.end());
  merged.insert(merged.end(), args.begin() + 2, args.end());
  return merged;
}

std::string one_line(std::string text) {
  for (auto& ch : text)
    if (ch == '\n' || ch == '\r') ch = ' ';
  while (!text.empty() && text.back() == ' ') text.pop_back();
  return text;
}

int fail(std::ostream& err, const std::string& category, const std::string& detail, int code) {
  err << "error: " << category << ": " << one_line(detail) << "\n";
  return code;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Leaf disease classification with graph neural networks over superpixel graphs", "graphleaf"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.footer("Environment: GRAPHLEAF_THREADS caps worker threads (0 = all cores).\n"
             "Exit codes: 0 ok, 1 usage, 2 data/format, 3 numeric failure.");

  const std::string config_help = "Flat JSON object of flag values; explicit flags take precedence";
  std::string config_path;

  PreprocessArgs pre;
  auto* p = app.add_subcommand("preprocess", "Segment a class-per-directory corpus into train/test graph caches");
  p->add_option("--data", pre.data, "Corpus root with one directory per class")->required();
  p->add_option("--out", pre.out, "Output prefix; writes <out>.train.ragc, <out>.test.ragc, <out>.manifest.json")
      ->required();
  p->add_option("--segments", pre.segments, "Target superpixels per image")->capture_default_str()->check(
      CLI::Range(1, 128 * 128));
  p->add_option("--split", pre.split, "Train fraction per class")->capture_default_str()->check(
      CLI::Range(0.0, 1.0));
  p->add_option("--compactness", pre.compactness, "SLIC colour/space trade-off")->capture_default_str()->check(
      CLI::PositiveNumber);
  p->add_option("--seed", pre.seed, "Split seed")->capture_default_str();
  p->add_option("--config", config_path, config_help)->check(CLI::ExistingFile);

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a graph classifier on a preprocessed cache pair");
  t->add_option("--cache", tr.cache, "Cache prefix given to preprocess --out")->required();
  t->add_option("--model", tr.model, "Model variant")->capture_default_str()->check(
      CLI::IsMember({"gcn", "gat", "hybrid"}));
  t->add_option("--epochs", tr.epochs, "Training epochs")->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--batch", tr.batch, "Graphs per batch")->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--lr", tr.lr, "Adam learning rate")->capture_default_str()->check(CLI::NonNegativeNumber);
  t->add_option("--edge-aug-p", tr.edge_aug_p, "Edge add/remove probability during training")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  t->add_option("--seed", tr.seed, "Seed for initialisation, shuffling and augmentation")->capture_default_str();
  t->add_option("--hidden", tr.hidden, "Hidden width")->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--heads", tr.heads, "Attention heads per GAT layer")->capture_default_str()->check(
      CLI::PositiveNumber);
  t->add_option("--gcn-layers", tr.gcn_layers, "GCN layers (gcn and hybrid)")->capture_default_str()->check(
      CLI::PositiveNumber);
  t->add_option("--gat-layers", tr.gat_layers, "GAT layers (gat and hybrid)")->capture_default_str()->check(
      CLI::PositiveNumber);
  t->add_option("--out", tr.out, "Run directory for checkpoints, curves and reports")->required();
  t->add_option("--config", config_path, config_help)->check(CLI::ExistingFile);

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Evaluate a checkpoint on a graph cache");
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint file (.glwt)")->required()->check(CLI::ExistingFile);
  e->add_option("--cache", ev.cache, "Graph cache file (.ragc)")->required()->check(CLI::ExistingFile);
  e->add_option("--report", ev.report, "Report path (default: <checkpoint>.eval.json)");
  e->add_option("--batch", ev.batch, "Graphs per batch")->capture_default_str()->check(CLI::PositiveNumber);
  e->add_option("--config", config_path, config_help)->check(CLI::ExistingFile);

  PredictArgs pr;
  auto* d = app.add_subcommand("predict", "Classify one image");
  d->add_option("--checkpoint", pr.checkpoint, "Checkpoint file (.glwt)")->required()->check(CLI::ExistingFile);
  d->add_option("--image", pr.image, "Image file")->required()->check(CLI::ExistingFile);
  d->add_option("--config", config_path, config_help)->check(CLI::ExistingFile);

  InspectArgs in;
  auto* i = app.add_subcommand("inspect", "Summarise a graph cache");
  i->add_option("--cache", in.cache, "Graph cache file (.ragc)")->required()->check(CLI::ExistingFile);
  i->add_option("--format", in.format, "Output format")->capture_default_str()->check(
      CLI::IsMember({"text", "json"}));
  i->add_flag("--graphs", in.graphs, "With --format json, include every node and edge");
  i->add_option("--config", config_path, config_help)->check(CLI::ExistingFile);

  std::vector<std::string> argv_text = args.empty() ? std::vector<std::string>{"graphleaf"} : args;
  try {
    if (argv_text.size() >= 2) {
      if (auto* sub = app.get_subcommand_no_throw(argv_text[1])) argv_text = with_config(argv_text, *sub);
    }
    std::vector<char*> argv;
    for (auto& s : argv_text) argv.push_back(s.data());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& s) {
    return app.exit(s, out, err);
  } catch (const CLI::ParseError& pe) {
    return fail(err, "usage", pe.what(), kUsage);
  } catch (const UsageError& ue) {
    return fail(err, "usage", ue.what(), kUsage);
  } catch (const Error& ge) {
    return fail(err, ge.category(), ge.what(), kDataError);
  }

  try {
    if (*p) return run_preprocess(pre, out);
    if (*t) return run_train(tr, out, err);
    if (*e) return run_evaluate(ev, out);
    if (*d) return run_predict(pr, out);
    return run_inspect(in, out);
  } catch (const NumericError& ne) {
    return fail(err, ne.category(), ne.what(), kNumericError);
  } catch (const Error& ge) {
    return fail(err, ge.category(), ge.what(), kDataError);
  } catch (const fs::filesystem_error& fe) {
    return fail(err, "io", fe.what(), kDataError);
  } catch (const std::exception& ex) {
    return fail(err, "internal", ex.what(), kDataError);
  }
}

}  // namespace graphleaf::cli
