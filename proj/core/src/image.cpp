#include "graphleaf/image.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "graphleaf/error.hpp"

namespace graphleaf {

RgbImage decode_image(const std::filesystem::path& path) {
  cv::Mat raw;
  try {
    raw = cv::imread(path.string(), cv::IMREAD_COLOR);
  } catch (const cv::Exception& e) {
    throw DecodeError("cannot decode " + path.string() + ": " + e.what());
  }
  if (raw.empty()) throw DecodeError("cannot decode " + path.string());
  if (raw.depth() != CV_8U) raw.convertTo(raw, CV_8U);

  RgbImage out(raw.cols, raw.rows);
  for (int y = 0; y < raw.rows; ++y) {
    const auto* row = raw.ptr<cv::Vec3b>(y);
    for (int x = 0; x < raw.cols; ++x) {
      // OpenCV stores BGR.
      out.at(y, x, 0) = row[x][2];
      out.at(y, x, 1) = row[x][1];
      out.at(y, x, 2) = row[x][0];
    }
  }
  return out;
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  cv::Mat mat(image.height, image.width, CV_8UC3);
  for (int y = 0; y < image.height; ++y) {
    auto* row = mat.ptr<cv::Vec3b>(y);
    for (int x = 0; x < image.width; ++x)
      row[x] = cv::Vec3b(image.at(y, x, 2), image.at(y, x, 1), image.at(y, x, 0));
  }
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), mat);
  } catch (const cv::Exception& e) {
    throw IoError("cannot write " + path.string() + ": " + e.what());
  }
  if (!ok) throw IoError("cannot write " + path.string());
}

std::vector<float> resize_bilinear(const RgbImage& image, int out_width, int out_height) {
  if (image.width <= 0 || image.height <= 0) throw InputError("image has a zero dimension");
  if (out_width <= 0 || out_height <= 0) throw InputError("resize target has a zero dimension");

  const double sx = static_cast<double>(image.width) / out_width;
  const double sy = static_cast<double>(image.height) / out_height;
  std::vector<float> out(static_cast<std::size_t>(out_width) * out_height * 3);

  for (int oy = 0; oy < out_height; ++oy) {
    const double fy = std::clamp((oy + 0.5) * sy - 0.5, 0.0, image.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, image.height - 1);
    const double wy = fy - y0;
    for (int ox = 0; ox < out_width; ++ox) {
      const double fx = std::clamp((ox + 0.5) * sx - 0.5, 0.0, image.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = (1.0 - wx) * image.at(y0, x0, c) + wx * image.at(y0, x1, c);
        const double bottom = (1.0 - wx) * image.at(y1, x0, c) + wx * image.at(y1, x1, c);
        out[(static_cast<std::size_t>(oy) * out_width + ox) * 3 + c] =
            static_cast<float>((1.0 - wy) * top + wy * bottom);
      }
    }
  }
  return out;
}

NormalizedImage normalize_image(const RgbImage& image, int size) {
  const auto resized = resize_bilinear(image, size, size);
  NormalizedImage out(size, size);
  for (std::size_t i = 0; i < resized.size(); ++i) {
    const double unit = static_cast<double>(resized[i]) / 255.0;
    out.pixels[i] = static_cast<float>(std::clamp((unit - 0.5) / 0.5, -1.0, 1.0));
  }
  return out;
}

NormalizedImage preprocess_image(const std::filesystem::path& path, int size) {
  return normalize_image(decode_image(path), size);
}

}  // namespace graphleaf
