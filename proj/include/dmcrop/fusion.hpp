#ifndef DMCROP_FUSION_HPP_
#define DMCROP_FUSION_HPP_

#include <span>
#include <vector>

#include "dmcrop/detection.hpp"

namespace dmcrop {

/// NMS threshold used when fusing crop and global detections in the
/// experiments, and the alternative 0.5 setting of the ClusDet-style fusion.
inline constexpr double kFusionNmsIou = 0.7;
inline constexpr double kClusDetNmsIou = 0.5;
inline constexpr int kMaxDetsPerImage = 500;

struct FusionParams {
  double nms_iou = kFusionNmsIou;
  int max_dets_per_image = kMaxDetsPerImage;
};

/// Greedy class-aware NMS within each (image, category). Candidates are
/// visited by descending score, then ascending area, then input order; a box
/// survives when its IoU with every kept box is at most `iou_threshold`.
/// Survivors keep their input order.
std::vector<Detection> nms(std::span<const Detection> dets, double iou_threshold);

/// Global detections followed by crop detections, suppressed with nms and
/// capped at `max_dets_per_image` per image. Output is ordered by image id,
/// then by the NMS visiting order.
std::vector<Detection> fuse(std::span<const Detection> global_dets,
                            std::span<const Detection> crop_dets, const FusionParams& params = {});

}  // namespace dmcrop

#endif  // DMCROP_FUSION_HPP_
