#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace graphleaf {

/// Edge length of the square model input.
inline constexpr int kImageSize = 128;

/// 8-bit interleaved RGB raster.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // height * width * 3

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t& at(int y, int x, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  std::uint8_t at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
};

/// Float image in [-1, 1], interleaved RGB. Produced at kImageSize x
/// kImageSize by preprocessing; other sizes are allowed for in-memory use.
struct NormalizedImage {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;  // height * width * 3

  NormalizedImage() = default;
  NormalizedImage(int w, int h, float fill = 0.0f)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  float& at(int y, int x, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  float at(int y, int x, int c) const { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }

  bool operator==(const NormalizedImage&) const = default;
};

/// Decodes PNG/JPEG/BMP into RGB. Grayscale is replicated into three
/// channels and alpha is dropped. Throws DecodeError.
RgbImage decode_image(const std::filesystem::path& path);

/// Writes a PNG (used for fixtures and synthetic corpora). Throws IoError.
void write_png(const std::filesystem::path& path, const RgbImage& image);

/// Bilinear resize with half-pixel centres and edge clamping. Output values
/// stay in the 0..255 range of the source.
std::vector<float> resize_bilinear(const RgbImage& image, int out_width, int out_height);

/// Resize to `size` x `size`, scale to [0,1], then (v - 0.5) / 0.5.
NormalizedImage normalize_image(const RgbImage& image, int size = kImageSize);

/// decode_image followed by normalize_image.
NormalizedImage preprocess_image(const std::filesystem::path& path, int size = kImageSize);

}  // namespace graphleaf
