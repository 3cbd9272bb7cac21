#include "graphleaf/slic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <set>
#include <sstream>

#include "graphleaf/error.hpp"

namespace graphleaf {
namespace {

struct Center {
  double l, a, b;
  double y, x;
};

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) { return t > 0.008856 ? std::cbrt(t) : 7.787 * t + 16.0 / 116.0; }

// Relabels in raster order of first appearance.
SegmentMap compact(int width, int height, const std::vector<std::int32_t>& raw) {
  SegmentMap out;
  out.width = width;
  out.height = height;
  out.labels.resize(raw.size());
  std::vector<std::int32_t> remap;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto r = static_cast<std::size_t>(raw[i]);
    if (r >= remap.size()) remap.resize(r + 1, -1);
    if (remap[r] < 0) remap[r] = out.num_segments++;
    out.labels[i] = remap[r];
  }
  return out;
}

// 4-connected component id per pixel; returns component count.
int label_components(const SegmentMap& map, std::vector<int>& comp) {
  const int w = map.width, h = map.height;
  comp.assign(map.labels.size(), -1);
  int count = 0;
  std::vector<int> stack;
  for (int start = 0; start < w * h; ++start) {
    if (comp[start] >= 0) continue;
    const auto label = map.labels[start];
    comp[start] = count;
    stack.push_back(start);
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const int y = p / w, x = p % w;
      const std::array<std::pair<int, int>, 4> nbrs{{{y - 1, x}, {y + 1, x}, {y, x - 1}, {y, x + 1}}};
      for (auto [ny, nx] : nbrs) {
        if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
        const int q = ny * w + nx;
        if (comp[q] < 0 && map.labels[q] == label) {
          comp[q] = count;
          stack.push_back(q);
        }
      }
    }
    ++count;
  }
  return count;
}

void check_params(const NormalizedImage& image, const SlicParams& params) {
  if (image.width <= 0 || image.height <= 0) throw InputError("image has a zero dimension");
  if (params.segments < 1) throw InputError("segment count must be >= 1");
  if (!(params.compactness > 0.0)) throw InputError("compactness must be positive");
  if (params.max_iter < 1) throw InputError("max_iter must be >= 1");
  if (static_cast<std::size_t>(params.segments) > image.pixel_count())
    throw InputError("segment count exceeds pixel count");
}

}  // namespace

std::vector<double> to_lab(const NormalizedImage& image) {
  std::vector<double> lab(image.pixel_count() * 3);
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    const double r = srgb_to_linear(std::clamp((image.pixels[i * 3 + 0] + 1.0) * 0.5, 0.0, 1.0));
    const double g = srgb_to_linear(std::clamp((image.pixels[i * 3 + 1] + 1.0) * 0.5, 0.0, 1.0));
    const double b = srgb_to_linear(std::clamp((image.pixels[i * 3 + 2] + 1.0) * 0.5, 0.0, 1.0));
    const double x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / 0.95047;
    const double y = (0.2126729 * r + 0.7151522 * g + 0.0721750 * b);
    const double z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / 1.08883;
    const double fx = lab_f(x), fy = lab_f(y), fz = lab_f(z);
    lab[i * 3 + 0] = 116.0 * fy - 16.0;
    lab[i * 3 + 1] = 500.0 * (fx - fy);
    lab[i * 3 + 2] = 200.0 * (fy - fz);
  }
  return lab;
}

SegmentMap slic_cluster(const NormalizedImage& image, const SlicParams& params) {
  check_params(image, params);
  const int w = image.width, h = image.height;
  const int k = params.segments;
  const auto lab = to_lab(image);
  const double step = std::sqrt(static_cast<double>(w) * h / k);

  auto gradient = [&](int y, int x) {
    auto px = [&](int yy, int xx) {
      yy = std::clamp(yy, 0, h - 1);
      xx = std::clamp(xx, 0, w - 1);
      return &lab[(static_cast<std::size_t>(yy) * w + xx) * 3];
    };
    double g = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double dx = px(y, x + 1)[c] - px(y, x - 1)[c];
      const double dy = px(y + 1, x)[c] - px(y - 1, x)[c];
      g += dx * dx + dy * dy;
    }
    return g;
  };

  // Exactly k centres: `rows` grid rows, k spread evenly across them.
  const int rows = std::clamp(static_cast<int>(std::lround(std::sqrt(static_cast<double>(k) * h / w))), 1, k);
  std::vector<Center> centers;
  centers.reserve(k);
  for (int r = 0; r < rows; ++r) {
    const int in_row = static_cast<int>(static_cast<long>(r + 1) * k / rows - static_cast<long>(r) * k / rows);
    const double cy = (r + 0.5) * h / rows - 0.5;
    for (int j = 0; j < in_row; ++j) {
      double cx = (j + 0.5) * w / in_row - 0.5;
      double yy = cy;
      // Move to the lowest-gradient pixel of the 3x3 neighbourhood.
      const int by = std::clamp(static_cast<int>(std::lround(cy)), 0, h - 1);
      const int bx = std::clamp(static_cast<int>(std::lround(cx)), 0, w - 1);
      double best = gradient(by, bx);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int ny = by + dy, nx = bx + dx;
          if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
          const double g = gradient(ny, nx);
          if (g < best) {
            best = g;
            yy = ny;
            cx = nx;
          }
        }
      }
      const auto* p = &lab[(static_cast<std::size_t>(std::lround(yy)) * w + std::lround(cx)) * 3];
      centers.push_back({p[0], p[1], p[2], yy, cx});
    }
  }

  const double spatial_weight = (params.compactness / step) * (params.compactness / step);
  std::vector<std::int32_t> labels(static_cast<std::size_t>(w) * h, -1);
  std::vector<double> dist(labels.size());

  auto distance = [&](const Center& c, int y, int x) {
    const double* p = &lab[(static_cast<std::size_t>(y) * w + x) * 3];
    const double dl = p[0] - c.l, da = p[1] - c.a, db = p[2] - c.b;
    const double dy = y - c.y, dx = x - c.x;
    return dl * dl + da * da + db * db + spatial_weight * (dy * dy + dx * dx);
  };

  for (int iter = 0; iter < params.max_iter; ++iter) {
    std::fill(labels.begin(), labels.end(), -1);
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    for (std::size_t ci = 0; ci < centers.size(); ++ci) {
      const auto& c = centers[ci];
      const int y0 = std::max(0, static_cast<int>(std::floor(c.y - step)));
      const int y1 = std::min(h - 1, static_cast<int>(std::ceil(c.y + step)));
      const int x0 = std::max(0, static_cast<int>(std::floor(c.x - step)));
      const int x1 = std::min(w - 1, static_cast<int>(std::ceil(c.x + step)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double d = distance(c, y, x);
          const std::size_t p = static_cast<std::size_t>(y) * w + x;
          // Strict comparison: ties go to the lowest centre id.
          if (d < dist[p]) {
            dist[p] = d;
            labels[p] = static_cast<std::int32_t>(ci);
          }
        }
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        if (labels[p] >= 0) continue;
        for (std::size_t ci = 0; ci < centers.size(); ++ci) {
          const double d = distance(centers[ci], y, x);
          if (d < dist[p]) {
            dist[p] = d;
            labels[p] = static_cast<std::int32_t>(ci);
          }
        }
      }
    }

    std::vector<std::array<double, 6>> sums(centers.size(), std::array<double, 6>{});
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        auto& s = sums[labels[p]];
        s[0] += lab[p * 3];
        s[1] += lab[p * 3 + 1];
        s[2] += lab[p * 3 + 2];
        s[3] += y;
        s[4] += x;
        s[5] += 1.0;
      }
    }
    double movement = 0.0;
    for (std::size_t ci = 0; ci < centers.size(); ++ci) {
      const auto& s = sums[ci];
      if (s[5] == 0.0) continue;
      Center next{s[0] / s[5], s[1] / s[5], s[2] / s[5], s[3] / s[5], s[4] / s[5]};
      movement += std::hypot(next.y - centers[ci].y, next.x - centers[ci].x);
      centers[ci] = next;
    }
    if (movement / static_cast<double>(centers.size()) < 0.5) break;
  }

  return compact(w, h, labels);
}

SegmentMap slic_segment(const NormalizedImage& image, const SlicParams& params) {
  const auto raw = slic_cluster(image, params);
  const int min_size = params.min_size > 0
                           ? params.min_size
                           : static_cast<int>(image.pixel_count() / static_cast<std::size_t>(params.segments) / 4);
  return enforce_connectivity(raw, min_size);
}

SegmentMap enforce_connectivity(const SegmentMap& raw, int min_size) {
  const int w = raw.width, h = raw.height;
  std::vector<int> comp;
  const int count = label_components(raw, comp);

  std::vector<int> parent(count), size(count, 0);
  for (int i = 0; i < count; ++i) parent[i] = i;
  for (int c : comp) ++size[c];

  std::vector<std::set<int>> adjacent(count);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int a = comp[y * w + x];
      if (x + 1 < w && comp[y * w + x + 1] != a) {
        adjacent[a].insert(comp[y * w + x + 1]);
        adjacent[comp[y * w + x + 1]].insert(a);
      }
      if (y + 1 < h && comp[(y + 1) * w + x] != a) {
        adjacent[a].insert(comp[(y + 1) * w + x]);
        adjacent[comp[(y + 1) * w + x]].insert(a);
      }
    }
  }

  auto find = [&](int i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  };

  using Entry = std::pair<int, int>;  // (size, root)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  for (int i = 0; i < count; ++i)
    if (size[i] < min_size) queue.push({size[i], i});

  while (!queue.empty()) {
    const auto [sz, id] = queue.top();
    queue.pop();
    if (find(id) != id || size[id] != sz || sz >= min_size) continue;

    int target = -1;
    std::set<int> resolved;
    for (int n : adjacent[id]) {
      const int r = find(n);
      if (r == id) continue;
      resolved.insert(r);
      if (target < 0 || size[r] > size[target] || (size[r] == size[target] && r < target)) target = r;
    }
    adjacent[id] = std::move(resolved);
    if (target < 0) continue;  // sole component

    parent[id] = target;
    size[target] += size[id];
    if (adjacent[target].size() < adjacent[id].size()) std::swap(adjacent[target], adjacent[id]);
    adjacent[target].insert(adjacent[id].begin(), adjacent[id].end());
    adjacent[id].clear();
    if (size[target] < min_size) queue.push({size[target], target});
  }

  std::vector<std::int32_t> merged(comp.size());
  for (std::size_t p = 0; p < comp.size(); ++p) merged[p] = find(comp[p]);
  return compact(w, h, merged);
}

int count_components(const SegmentMap& map) {
  std::vector<int> comp;
  return label_components(map, comp);
}

std::vector<int> segment_sizes(const SegmentMap& map) {
  std::vector<int> sizes(static_cast<std::size_t>(std::max(map.num_segments, 0)), 0);
  for (auto l : map.labels)
    if (l >= 0 && static_cast<std::size_t>(l) < sizes.size()) ++sizes[l];
  return sizes;
}

std::string to_pgm(const SegmentMap& map) {
  std::ostringstream out;
  out << "P2\n" << map.width << ' ' << map.height << '\n' << std::max(map.num_segments - 1, 0) << '\n';
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) out << (x ? " " : "") << map.at(y, x);
    out << '\n';
  }
  return out.str();
}

}  // namespace graphleaf
