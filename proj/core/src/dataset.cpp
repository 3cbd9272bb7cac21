#include "graphleaf/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "graphleaf/error.hpp"
#include "graphleaf/rng.hpp"

namespace graphleaf {

namespace fs = std::filesystem;

std::vector<std::size_t> DatasetManifest::class_histogram() const {
  std::vector<std::size_t> counts(classes.size(), 0);
  for (const auto& s : samples)
    if (s.label < counts.size()) ++counts[s.label];
  return counts;
}

bool has_image_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

DatasetManifest scan_dataset(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw InputError("dataset root does not exist: " + root.string());

  std::vector<fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) class_dirs.push_back(entry.path());
  }
  if (class_dirs.empty()) throw InputError("dataset root has no class directories: " + root.string());
  std::sort(class_dirs.begin(), class_dirs.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

  DatasetManifest manifest;
  manifest.source_root = root;
  for (const auto& dir : class_dirs) {
    const auto label = static_cast<std::uint32_t>(manifest.classes.size());
    const std::string name = dir.filename().string();

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && has_image_extension(entry.path())) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    std::size_t usable = 0;
    for (const auto& f : files) {
      std::ifstream probe(f, std::ios::binary);
      if (!probe || probe.peek() == std::ifstream::traits_type::eof()) {
        std::cerr << "warning: skipping unreadable file " << f.string() << "\n";
        manifest.skipped.push_back(f);
        continue;
      }
      manifest.samples.push_back({f, label});
      ++usable;
    }
    if (usable == 0) throw InputError("class directory has no readable images: " + name);
    manifest.classes.push_back(name);
  }
  return manifest;
}

std::pair<DatasetManifest, DatasetManifest> stratified_split(const DatasetManifest& manifest,
                                                             double train_fraction,
                                                             std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw InputError("train fraction must lie strictly between 0 and 1");

  std::vector<std::vector<std::size_t>> by_class(manifest.classes.size());
  for (std::size_t i = 0; i < manifest.samples.size(); ++i) {
    const auto label = manifest.samples[i].label;
    if (label >= by_class.size()) throw InputError("sample label out of range");
    by_class[label].push_back(i);
  }

  Rng rng = Rng(seed).fork("split");
  std::vector<char> in_train(manifest.samples.size(), 0);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (members.size() < 2)
      throw InputError("class '" + manifest.classes[c] + "' has fewer than 2 samples");
    rng.shuffle(std::span<std::size_t>(members));
    // Epsilon guards products like 0.29 * 100 that land just below an integer.
    auto n_train = static_cast<std::size_t>(std::floor(train_fraction * members.size() + 1e-9));
    n_train = std::clamp<std::size_t>(n_train, 1, members.size() - 1);
    for (std::size_t k = 0; k < n_train; ++k) in_train[members[k]] = 1;
  }

  DatasetManifest train, test;
  for (auto* part : {&train, &test}) {
    part->classes = manifest.classes;
    part->source_root = manifest.source_root;
  }
  for (std::size_t i = 0; i < manifest.samples.size(); ++i)
    (in_train[i] ? train : test).samples.push_back(manifest.samples[i]);
  return {std::move(train), std::move(test)};
}

std::string manifest_to_json(const DatasetManifest& manifest) {
  nlohmann::json j;
  j["classes"] = manifest.classes;
  j["source_root"] = manifest.source_root.string();
  auto& samples = j["samples"] = nlohmann::json::array();
  for (const auto& s : manifest.samples) samples.push_back({{"path", s.path.string()}, {"class", s.label}});
  auto& skipped = j["skipped"] = nlohmann::json::array();
  for (const auto& p : manifest.skipped) skipped.push_back(p.string());
  return j.dump(2);
}

DatasetManifest manifest_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest is not valid JSON: ") + e.what());
  }
  DatasetManifest m;
  try {
    m.classes = j.at("classes").get<std::vector<std::string>>();
    if (j.contains("source_root")) m.source_root = j["source_root"].get<std::string>();
    for (const auto& s : j.at("samples"))
      m.samples.push_back({s.at("path").get<std::string>(), s.at("class").get<std::uint32_t>()});
    if (j.contains("skipped"))
      for (const auto& p : j["skipped"]) m.skipped.emplace_back(p.get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest has unexpected layout: ") + e.what());
  }
  for (const auto& s : m.samples)
    if (s.label >= m.classes.size()) throw FormatError("manifest sample class index out of range");
  return m;
}

}  // namespace graphleaf
