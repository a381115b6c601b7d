#ifndef DMCROP_PIPELINE_HPP_
#define DMCROP_PIPELINE_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "dmcrop/dataset_io.hpp"
#include "dmcrop/density.hpp"
#include "dmcrop/evaluate.hpp"
#include "dmcrop/fusion.hpp"
#include "dmcrop/mask_crop.hpp"
#include "dmcrop/oracle.hpp"

namespace dmcrop {

enum class Profile { kVisionDrone, kUavdt, kCustom };

/// Preset values of a dataset profile. Custom has no threshold preset.
struct ProfileDefaults {
  std::optional<double> threshold;
  int min_crop = kDefaultMinCropSize;
  double nms_iou = kFusionNmsIou;
  int max_dets = kMaxDetsPerImage;
};

Profile parse_profile(std::string_view name);
std::string_view to_string(Profile profile);
ProfileDefaults profile_defaults(Profile profile);

struct GridSpec {
  int rows = 3;
  int cols = 4;
  int overlap = 0;
};

struct WindowSize {
  int height = 1;
  int width = 1;
};

struct PipelineConfig {
  KernelSpec kernel;                                // for maps rendered from annotations
  std::optional<std::filesystem::path> density_dir;  // predicted maps named <image_id>.dmap
  std::optional<WindowSize> window;                 // default: global mean object size
  double threshold = kVisionDroneThreshold;
  int min_crop = kDefaultMinCropSize;
  std::optional<GridSpec> grid;  // uniform crops instead of density crops
  bool use_global = true;        // fuse whole-image detections
  FusionParams fusion;
  MissPolicy miss;
  EvalParams eval;
  int jobs = 1;
};

struct ImageOutcome {
  std::int64_t image_id = 0;
  std::vector<CropRegion> crops;
  std::vector<Detection> global_detections;
  std::vector<Detection> crop_detections;  // already in image coordinates
  std::vector<Detection> fused;
};

struct PipelineResult {
  std::vector<ImageOutcome> images;  // ordered by image id
  std::vector<Detection> detections;
  EvalResult eval;
};

/// Loads `<dir>/<image_id>.dmap` and upsamples it to the image when smaller.
DensityRaster load_density_for(const std::filesystem::path& dir, const ImageRecord& image);

/// Mask parameters for the run: explicit window or the global mean object
/// size from `stats`, with the configured threshold.
MaskParams resolve_mask_params(const PipelineConfig& config, const CategoryStats& stats);

/// Density crops (or grid crops) for one image.
std::vector<CropRegion> image_crops(const Dataset& gt, const ImageRecord& image,
                                    const CategoryStats& stats, const PipelineConfig& config);

/// density -> mask -> crops -> oracle detection on crops and the whole image
/// -> fusion -> evaluation. Images may be processed concurrently; results
/// are always ordered by image id.
PipelineResult run_oracle_pipeline(const Dataset& gt, const CategoryStats& stats,
                                   const PipelineConfig& config);

/// Calls fn(0..count-1) on up to `jobs` threads. The first exception thrown
/// by any call is rethrown after all workers stop.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace dmcrop

#endif  // DMCROP_PIPELINE_HPP_
