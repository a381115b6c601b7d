#ifndef DMCROP_OVERLAY_HPP_
#define DMCROP_OVERLAY_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "dmcrop/dataset_io.hpp"
#include "dmcrop/mask_crop.hpp"
#include "dmcrop/raster.hpp"

namespace dmcrop {

using Rgb = std::array<std::uint8_t, 3>;

/// 8-bit RGB image, row-major, 3 bytes per pixel.
struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;

  Rgb at(int row, int col) const;
  void set(int row, int col, Rgb c);
  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

inline constexpr Rgb kMaskTint{255, 255, 0};
inline constexpr double kMaskAlpha = 0.35;
inline constexpr double kDensityAlpha = 0.6;
inline constexpr Rgb kCropColor{255, 255, 0};
inline constexpr Rgb kGroundTruthColor{0, 0, 255};

RgbImage blank_canvas(ImageSize size, Rgb fill = {0, 0, 0});

std::vector<std::uint8_t> encode_png(const RgbImage& image);
RgbImage decode_png(std::span<const std::uint8_t> bytes);

struct OverlayLayers {
  const DensityRaster* density = nullptr;
  const DensityMask* mask = nullptr;
  std::span<const CropRegion> crops;
  std::span<const Annotation> annotations;
};

/// Draws, bottom to top: the density map (colour-mapped, opacity scaled by
/// value), the mask tint, crop outlines, ground-truth outlines. Throws
/// kInvalidArgument when a raster layer does not match the canvas.
RgbImage compose_overlay(const RgbImage& canvas, const OverlayLayers& layers);

std::vector<std::uint8_t> render_overlay(const RgbImage& canvas, const OverlayLayers& layers);

}  // namespace dmcrop

#endif  // DMCROP_OVERLAY_HPP_
