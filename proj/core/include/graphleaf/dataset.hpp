#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace graphleaf {

struct Sample {
  std::filesystem::path path;
  std::uint32_t label = 0;

  bool operator==(const Sample&) const = default;
};

/// Class-per-directory corpus listing. Classes are sorted lexicographically
/// so label indices (and confusion-matrix axes) are stable across runs.
struct DatasetManifest {
  std::vector<std::string> classes;
  std::vector<Sample> samples;
  std::filesystem::path source_root;
  /// Files with an image extension that could not be opened during the scan.
  std::vector<std::filesystem::path> skipped;

  std::size_t class_count() const { return classes.size(); }
  std::vector<std::size_t> class_histogram() const;
};

/// Extensions accepted by the scanner (case-insensitive).
bool has_image_extension(const std::filesystem::path& p);

/// Lists `root/<class>/<image>` files. Throws InputError when the root is
/// missing, has no class directories, or a class directory has no usable
/// image. Unreadable files are skipped with a warning on stderr.
DatasetManifest scan_dataset(const std::filesystem::path& root);

/// Per class, floor(train_fraction * n) samples (at least 1) go to train
/// and the rest to test. Membership depends only on the manifest, the
/// fraction and the seed. Both outputs keep the input sample order.
std::pair<DatasetManifest, DatasetManifest> stratified_split(const DatasetManifest& manifest,
                                                             double train_fraction,
                                                             std::uint64_t seed);

std::string manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const std::string& text);

}  // namespace graphleaf
