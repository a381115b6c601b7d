#ifndef DMCROP_ORACLE_HPP_
#define DMCROP_ORACLE_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "dmcrop/dataset_io.hpp"
#include "dmcrop/detection.hpp"
#include "dmcrop/mask_crop.hpp"

namespace dmcrop {

/// Probability of missing an object, indexed by AreaClass. Draws come from a
/// generator seeded by (seed, image id, region), so results do not depend on
/// call order.
struct MissPolicy {
  std::array<double, 3> drop_probability{0.0, 0.0, 0.0};
  std::uint64_t seed = 0;

  bool active() const {
    return drop_probability[0] > 0.0 || drop_probability[1] > 0.0 || drop_probability[2] > 0.0;
  }
};

/// Stand-in detector: every ground-truth box of `image_id` whose centre lies
/// in `region` ([x, x+w) x [y, y+h)), clipped to the region, in
/// region-local coordinates, with score 1. `crop_index` tags the output and
/// selects the miss-policy stream; nullopt means the whole image.
std::vector<Detection> oracle_detect(const Dataset& gt, std::int64_t image_id,
                                     const BoundingBox& region, std::optional<int> crop_index,
                                     const MissPolicy& policy = {});

/// Whole-image convenience overload.
std::vector<Detection> oracle_detect_image(const Dataset& gt, std::int64_t image_id,
                                           const MissPolicy& policy = {});

/// Crop overload; the region is the crop rectangle.
std::vector<Detection> oracle_detect_crop(const Dataset& gt, const CropRegion& crop,
                                          const MissPolicy& policy = {});

}  // namespace dmcrop

#endif  // DMCROP_ORACLE_HPP_
