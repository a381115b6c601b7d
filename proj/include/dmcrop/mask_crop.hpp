#ifndef DMCROP_MASK_CROP_HPP_
#define DMCROP_MASK_CROP_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dmcrop/geometry.hpp"
#include "dmcrop/raster.hpp"

namespace dmcrop {

/// Sliding-window size and the density threshold a window must exceed.
struct MaskParams {
  int window_h = 1;
  int window_w = 1;
  double threshold = 0.0;
};

inline constexpr double kVisionDroneThreshold = 0.08;
inline constexpr double kUavdtThreshold = 0.03;
inline constexpr int kDefaultMinCropSize = 70;

/// A rectangle to cut out of an image, in whole pixels.
struct CropRegion {
  std::int64_t image_id = 0;
  int crop_index = 0;  // position within the image's crop sequence
  BoundingBox rect;
  std::int64_t component_size = 0;        // mask pixels in the source component
  std::optional<double> source_threshold;  // unset for uniform-grid crops

  friend bool operator==(const CropRegion&, const CropRegion&) = default;
};

/// Tiles the raster with non-overlapping windows anchored at (0, 0); windows
/// at the right and bottom edges are clipped to the image. A window is set to
/// 1 when its density sum is strictly greater than the threshold.
DensityMask density_mask(const DensityRaster& density, const MaskParams& params);

/// 8-connected component labels. 0 is background; component ids are dense
/// from 1 and numbered in raster-scan order of their first pixel.
struct Labeling {
  Raster<std::int32_t> labels;
  int count = 0;
};

Labeling connected_components(const DensityMask& mask);

/// One crop per connected component, using the component's circumscribed
/// rectangle. Crops narrower or shorter than `min_size` are dropped. The
/// result is ordered by (y, x) and crop_index follows that order.
std::vector<CropRegion> crops_from_mask(const DensityMask& mask, int min_size,
                                        std::int64_t image_id = 0,
                                        std::optional<double> threshold = std::nullopt);

/// rows x cols tiling of the image; the last row and column absorb the
/// remainder. Interior edges are pushed outward by `overlap` pixels.
std::vector<CropRegion> uniform_grid(ImageSize size, int rows, int cols, int overlap = 0,
                                     std::int64_t image_id = 0);

/// Window size from the mean object extent, rounded and at least 1.
MaskParams mask_params_from_mean(double mean_h, double mean_w, double threshold);

/// Crop manifest: one JSON object per line with image_id, crop_index, x, y,
/// w, h, threshold (null for grid crops) and component_size.
std::string write_crop_manifest(const std::vector<CropRegion>& crops);
std::vector<CropRegion> parse_crop_manifest(std::string_view text);

}  // namespace dmcrop

#endif  // DMCROP_MASK_CROP_HPP_
