#include <doctest.h>

#include <algorithm>
#include <fstream>

#include "graphleaf/error.hpp"
#include "graphleaf/image.hpp"
#include "graphleaf/rng.hpp"
#include "synthetic.hpp"

using namespace graphleaf;

namespace {

RgbImage constant_image(int w, int h, std::uint8_t v) {
  RgbImage img(w, h);
  std::fill(img.pixels.begin(), img.pixels.end(), v);
  return img;
}

float expected_normalized(int v) { return static_cast<float>((v / 255.0 - 0.5) / 0.5); }

}  // namespace

TEST_CASE("normalize_image: constant images") {
  const auto white = normalize_image(constant_image(64, 64, 255));
  CHECK(white.width == kImageSize);
  CHECK(white.height == kImageSize);
  CHECK(white.pixels.size() == static_cast<std::size_t>(kImageSize * kImageSize * 3));
  CHECK(std::all_of(white.pixels.begin(), white.pixels.end(), [](float v) { return v == 1.0f; }));

  const auto black = normalize_image(constant_image(50, 30, 0));
  CHECK(std::all_of(black.pixels.begin(), black.pixels.end(), [](float v) { return v == -1.0f; }));

  const auto gray = normalize_image(constant_image(200, 100, 128));
  const float oracle = expected_normalized(128);
  CHECK(oracle == doctest::Approx(0.00392157).epsilon(1e-5));
  for (float v : gray.pixels) CHECK(v == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("resize_bilinear: identity size is exact and values stay in range") {
  Rng rng(5);
  RgbImage img(13, 9);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.uniform_int(256));
  const auto same = resize_bilinear(img, 13, 9);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) CHECK(same[i] == doctest::Approx(img.pixels[i]));

  const auto up = resize_bilinear(img, 40, 31);
  CHECK(up.size() == 40u * 31u * 3u);
  CHECK(*std::min_element(up.begin(), up.end()) >= 0.0f);
  CHECK(*std::max_element(up.begin(), up.end()) <= 255.0f);
}

TEST_CASE("resize_bilinear: 2x1 to 4x1 interpolates with clamped edges") {
  RgbImage img(2, 1);
  for (int c = 0; c < 3; ++c) {
    img.at(0, 0, c) = 0;
    img.at(0, 1, c) = 200;
  }
  const auto out = resize_bilinear(img, 4, 1);
  // Output centres map to source x = -0.25, 0.25, 0.75, 1.25.
  const float expected[4] = {0.0f, 50.0f, 150.0f, 200.0f};
  for (int x = 0; x < 4; ++x) CHECK(out[x * 3] == doctest::Approx(expected[x]));
}

TEST_CASE("normalize_image: range holds for random images") {
  Rng rng(17);
  for (int t = 0; t < 5; ++t) {
    RgbImage img(20 + t * 7, 15 + t * 3);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.uniform_int(256));
    const auto n = normalize_image(img);
    CHECK(*std::min_element(n.pixels.begin(), n.pixels.end()) >= -1.0f);
    CHECK(*std::max_element(n.pixels.begin(), n.pixels.end()) <= 1.0f);
  }
}

TEST_CASE("preprocess_image: decode, determinism and errors") {
  const auto dir = testing::temp_dir("image_io");
  Rng rng(2);
  const auto img = testing::natural_style_image(rng, 70, 50);
  write_png(dir / "a.png", img);
  const auto decoded = decode_image(dir / "a.png");
  CHECK(decoded.width == 70);
  CHECK(decoded.height == 50);
  CHECK(decoded.pixels == img.pixels);
  CHECK(preprocess_image(dir / "a.png") == preprocess_image(dir / "a.png"));

  std::ofstream(dir / "bad.png") << "not an image";
  CHECK_THROWS_AS(decode_image(dir / "bad.png"), DecodeError);
  CHECK_THROWS_AS(preprocess_image(dir / "missing.png"), DecodeError);
  CHECK_THROWS_AS(normalize_image(RgbImage(0, 5)), InputError);
}
