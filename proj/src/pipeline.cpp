#include "dmcrop/pipeline.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "dmcrop/error.hpp"
#include "dmcrop/remap.hpp"

namespace dmcrop {

Profile parse_profile(std::string_view name) {
  if (name == "visiondrone") return Profile::kVisionDrone;
  if (name == "uavdt") return Profile::kUavdt;
  if (name == "custom") return Profile::kCustom;
  throw Error(ErrorKind::kInvalidArgument, "unknown profile '" + std::string(name) + "'");
}

std::string_view to_string(Profile profile) {
  switch (profile) {
    case Profile::kVisionDrone:
      return "visiondrone";
    case Profile::kUavdt:
      return "uavdt";
    case Profile::kCustom:
      return "custom";
  }
  return "custom";
}

ProfileDefaults profile_defaults(Profile profile) {
  ProfileDefaults d;
  switch (profile) {
    case Profile::kVisionDrone:
      d.threshold = kVisionDroneThreshold;
      break;
    case Profile::kUavdt:
      d.threshold = kUavdtThreshold;
      break;
    case Profile::kCustom:
      break;
  }
  return d;
}

DensityRaster load_density_for(const std::filesystem::path& dir, const ImageRecord& image) {
  DensityRaster density = read_density_file(dir / (std::to_string(image.id) + ".dmap"));
  if (density.size() == image.size()) return density;
  // Predicted maps come at reduced resolution; bring them back to the image.
  return upsample_bicubic(density, image.size());
}

MaskParams resolve_mask_params(const PipelineConfig& config, const CategoryStats& stats) {
  if (config.window) {
    return MaskParams{config.window->height, config.window->width, config.threshold};
  }
  return mask_params_from_mean(stats.global.mean_h, stats.global.mean_w, config.threshold);
}

std::vector<CropRegion> image_crops(const Dataset& gt, const ImageRecord& image,
                                    const CategoryStats& stats, const PipelineConfig& config) {
  if (config.grid) {
    return uniform_grid(image.size(), config.grid->rows, config.grid->cols, config.grid->overlap,
                        image.id);
  }
  DensityRaster density;
  if (config.density_dir) {
    density = load_density_for(*config.density_dir, image);
  } else {
    const auto anns = gt.annotations_for(image.id);
    density = render_density(image.size(), anns, config.kernel);
  }
  const DensityMask mask = density_mask(density, resolve_mask_params(config, stats));
  return crops_from_mask(mask, config.min_crop, image.id, config.threshold);
}

PipelineResult run_oracle_pipeline(const Dataset& gt, const CategoryStats& stats,
                                   const PipelineConfig& config) {
  const auto& images = gt.images();
  PipelineResult result;
  result.images.resize(images.size());
  parallel_for(images.size(), config.jobs, [&](std::size_t i) {
    const ImageRecord& image = images[i];
    ImageOutcome& outcome = result.images[i];
    outcome.image_id = image.id;
    outcome.crops = image_crops(gt, image, stats, config);
    if (config.use_global) outcome.global_detections = oracle_detect_image(gt, image.id, config.miss);
    for (const CropRegion& crop : outcome.crops) {
      const auto local = oracle_detect_crop(gt, crop, config.miss);
      auto mapped = backproject_detections(crop, local, image.size());
      outcome.crop_detections.insert(outcome.crop_detections.end(), mapped.detections.begin(),
                                     mapped.detections.end());
    }
    outcome.fused = fuse(outcome.global_detections, outcome.crop_detections, config.fusion);
  });
  for (const ImageOutcome& outcome : result.images) {
    result.detections.insert(result.detections.end(), outcome.fused.begin(), outcome.fused.end());
  }
  result.eval = evaluate(result.detections, gt, config.eval);
  return result;
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::size_t failure_index = count;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < std::min(workers, count); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          // Report the lowest failing index so errors are reproducible.
          std::lock_guard lock(failure_mutex);
          if (i < failure_index) {
            failure_index = i;
            failure = std::current_exception();
          }
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace dmcrop
