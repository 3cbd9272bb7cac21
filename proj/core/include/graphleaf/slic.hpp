#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "graphleaf/image.hpp"

namespace graphleaf {

/// Per-pixel superpixel ids, contiguous in 0..num_segments-1.
struct SegmentMap {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> labels;  // row-major
  int num_segments = 0;

  std::int32_t at(int y, int x) const { return labels[static_cast<std::size_t>(y) * width + x]; }

  bool operator==(const SegmentMap&) const = default;
};

struct SlicParams {
  int segments = 50;
  double compactness = 10.0;
  int max_iter = 10;
  /// Components below this size are merged away; <= 0 selects (H*W/k)/4.
  int min_size = 0;
};

/// CIE L*a*b* (D65) of a normalized image, 3 doubles per pixel. The
/// [-1,1] mapping is undone before the sRGB transfer curve is applied.
std::vector<double> to_lab(const NormalizedImage& image);

/// Raw SLIC clustering without connectivity enforcement. Labels are
/// compacted in raster order of first appearance.
SegmentMap slic_cluster(const NormalizedImage& image, const SlicParams& params = {});

/// Full segmentation: slic_cluster followed by enforce_connectivity. Every
/// output segment is a single 4-connected component.
SegmentMap slic_segment(const NormalizedImage& image, const SlicParams& params = {});

/// Splits every label into its 4-connected components, then repeatedly
/// merges the smallest component below `min_size` into its largest
/// neighbour. Labels are re-compacted in raster order, so applying the
/// function twice gives the same map as applying it once.
SegmentMap enforce_connectivity(const SegmentMap& raw, int min_size);

/// Number of 4-connected same-label components.
int count_components(const SegmentMap& map);

/// Sizes indexed by label.
std::vector<int> segment_sizes(const SegmentMap& map);

/// Plain-text PGM (`P2`) dump of the label raster.
std::string to_pgm(const SegmentMap& map);

}  // namespace graphleaf
