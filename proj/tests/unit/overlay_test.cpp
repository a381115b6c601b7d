#include <cstdlib>
#include <filesystem>

#include "doctest.h"
#include "dmcrop/dataset_io.hpp"
#include "dmcrop/error.hpp"
#include "dmcrop/overlay.hpp"
#include "support.hpp"

namespace dmcrop {
namespace {

namespace fs = std::filesystem;

struct Scene {
  DensityRaster density{40, 60, 0.0f};
  DensityMask mask{40, 60, 0};
  std::vector<CropRegion> crops{{1, 0, {5, 5, 30, 20}, 0, 0.08}};
  std::vector<Annotation> anns{testing::annotation(1, 1, 1, {10, 10, 8, 6})};

  Scene() {
    for (int r = 0; r < 40; ++r) {
      for (int c = 0; c < 60; ++c) density(r, c) = static_cast<float>(c) / 59.0f;
    }
    for (int r = 20; r < 30; ++r) {
      for (int c = 40; c < 55; ++c) mask(r, c) = 1;
    }
  }

  OverlayLayers layers() const { return {&density, &mask, crops, anns}; }
};

TEST_CASE("layers are drawn in order") {
  const Scene s;
  const RgbImage out = compose_overlay(blank_canvas({40, 60}), s.layers());
  CHECK(out.at(5, 20) == kCropColor);
  CHECK(out.at(10, 12) == kGroundTruthColor);
  CHECK(out.at(15, 17) == kGroundTruthColor);
  CHECK(out.at(12, 12) != kGroundTruthColor);
  CHECK(out.at(0, 0) == Rgb{0, 0, 0});  // zero density leaves the canvas alone
  const RgbImage no_mask =
      compose_overlay(blank_canvas({40, 60}), OverlayLayers{&s.density, nullptr, {}, {}});
  CHECK(out.at(25, 45) != no_mask.at(25, 45));
  CHECK(out.at(35, 45) == no_mask.at(35, 45));
}

TEST_CASE("mask tint blends at the configured opacity") {
  DensityMask mask(2, 2, 1);
  const RgbImage out =
      compose_overlay(blank_canvas({2, 2}, {100, 100, 100}), OverlayLayers{nullptr, &mask, {}, {}});
  CHECK(out.at(0, 0) == Rgb{154, 154, 65});
}

TEST_CASE("layers must match the canvas") {
  const Scene s;
  CHECK_THROWS_AS(compose_overlay(blank_canvas({41, 60}), s.layers()), Error);
}

TEST_CASE("png round trip and deterministic bytes") {
  const Scene s;
  const RgbImage img = compose_overlay(blank_canvas({40, 60}), s.layers());
  const auto a = render_overlay(blank_canvas({40, 60}), s.layers());
  const auto b = render_overlay(blank_canvas({40, 60}), s.layers());
  CHECK(a == b);
  CHECK(decode_png(a) == img);
  const std::vector<std::uint8_t> junk{1, 2, 3};
  CHECK_THROWS_AS(decode_png(junk), Error);
}

TEST_CASE("overlay matches the golden image") {
  const Scene s;
  const fs::path path = fs::path(DMCROP_TEST_DATA) / "golden_overlay.png";
  if (std::getenv("DMCROP_UPDATE_GOLDEN") != nullptr) {
    const auto png = render_overlay(blank_canvas({40, 60}), s.layers());
    write_text_file(path, std::string_view(reinterpret_cast<const char*>(png.data()), png.size()));
  }
  const std::string golden = read_text_file(path);
  const RgbImage expected = decode_png(
      std::span(reinterpret_cast<const std::uint8_t*>(golden.data()), golden.size()));
  CHECK(compose_overlay(blank_canvas({40, 60}), s.layers()) == expected);
}

TEST_CASE("single crop on a blank canvas matches golden bytes") {
  const std::vector<CropRegion> crops{{1, 0, {20, 30, 50, 40}, 0, 0.08}};
  const auto png = render_overlay(blank_canvas({100, 100}), OverlayLayers{nullptr, nullptr, crops, {}});
  const fs::path path = fs::path(DMCROP_TEST_DATA) / "golden_crop_rect.png";
  if (std::getenv("DMCROP_UPDATE_GOLDEN") != nullptr) {
    write_text_file(path, std::string_view(reinterpret_cast<const char*>(png.data()), png.size()));
  }
  const std::string golden = read_text_file(path);
  CHECK(std::vector<std::uint8_t>(golden.begin(), golden.end()) == png);
  const RgbImage img = decode_png(png);
  int stroked = 0;
  for (int r = 0; r < 100; ++r) {
    for (int c = 0; c < 100; ++c) stroked += img.at(r, c) == kCropColor;
  }
  CHECK(stroked == 2 * 50 + 2 * 38);
}

TEST_CASE("empty overlay encodes the canvas unchanged") {
  const RgbImage canvas = blank_canvas({20, 30}, {10, 20, 30});
  CHECK(render_overlay(canvas, OverlayLayers{}) == encode_png(canvas));
}

TEST_CASE("tinted pixel count equals the mask popcount") {
  testing::Rng rng(71);
  const DensityMask mask = testing::random_mask(rng, 33, 47, 0.3);
  const auto png = render_overlay(blank_canvas({33, 47}), OverlayLayers{nullptr, &mask, {}, {}});
  const RgbImage img = decode_png(png);
  int tinted = 0;
  int popcount = 0;
  for (int r = 0; r < 33; ++r) {
    for (int c = 0; c < 47; ++c) {
      tinted += img.at(r, c) != Rgb{0, 0, 0};
      popcount += mask(r, c);
    }
  }
  CHECK(tinted == popcount);
}

}  // namespace
}  // namespace dmcrop
