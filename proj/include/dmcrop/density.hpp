#ifndef DMCROP_DENSITY_HPP_
#define DMCROP_DENSITY_HPP_

#include <cstdint>
#include <span>
#include <variant>

#include "dmcrop/dataset_io.hpp"
#include "dmcrop/geometry.hpp"
#include "dmcrop/raster.hpp"

namespace dmcrop {

inline constexpr double kDefaultFixedSigma = 15.0;
inline constexpr double kDefaultAdaptiveBeta = 0.3;
inline constexpr int kDefaultAdaptiveNeighbors = 3;
inline constexpr double kDefaultTruncationSigmas = 4.0;

struct FixedKernel {
  double sigma = kDefaultFixedSigma;
};

/// Geometry-adaptive kernel: sigma = beta * mean distance to the k nearest
/// other objects. Images with a single object use `fallback_sigma`.
struct AdaptiveKernel {
  double beta = kDefaultAdaptiveBeta;
  int k = kDefaultAdaptiveNeighbors;
  double fallback_sigma = kDefaultFixedSigma;
};

/// Per-category kernel: sigma = half the diagonal of the category's mean box.
struct ClassWiseKernel {
  CategoryStats stats;
};

struct KernelSpec {
  std::variant<FixedKernel, AdaptiveKernel, ClassWiseKernel> mode = FixedKernel{};
  double truncation_radius_sigmas = kDefaultTruncationSigmas;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// 0.5 * sqrt(mean_h^2 + mean_w^2) for one category.
double sigma_classwise(const CategoryStats& stats, std::int64_t category_id);

/// beta times the mean distance from centers[index] to its k nearest
/// neighbours. Throws kInvalidArgument for a single center or k out of range.
double sigma_adaptive(std::span<const Point2> centers, std::size_t index, double beta, int k);

/// Sums one truncated, unit-mass Gaussian per annotation, centred on the pixel
/// that contains the box centre. Kernel mass falling outside the image is
/// discarded, so interior objects contribute exactly 1.
DensityRaster render_density(ImageSize size, std::span<const Annotation> annotations,
                             const KernelSpec& spec);

/// Catmull-Rom bicubic upsampling with half-pixel-centre alignment and edge
/// replication. Overshoot below zero is clamped to zero.
DensityRaster upsample_bicubic(const DensityRaster& raster, ImageSize target);
DensityRaster upsample_bicubic(const DensityRaster& raster, int factor);

struct DensityError {
  double loss = 0.0;            // sum of squared differences / (2 * n_images)
  double loss_per_pixel = 0.0;  // loss divided by the pixel count
  double mae = 0.0;             // mean absolute difference per pixel
  double count_error = 0.0;     // |sum(pred) - sum(gt)|
};

DensityError density_error(const DensityRaster& pred, const DensityRaster& gt, int n_images);

}  // namespace dmcrop

#endif  // DMCROP_DENSITY_HPP_
