#ifndef DMCROP_EVALUATE_HPP_
#define DMCROP_EVALUATE_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>

#include "dmcrop/dataset_io.hpp"
#include "dmcrop/detection.hpp"

namespace dmcrop {

inline constexpr int kIouThresholdCount = 10;  // 0.50, 0.55, ..., 0.95
inline constexpr int kRecallPointCount = 101;  // 0.00, 0.01, ..., 1.00

/// IoU threshold i, computed as an exact decimal quotient so that 0.6 here
/// compares equal to an IoU of 60/100.
constexpr double iou_threshold(int i) { return (50.0 + 5.0 * i) / 100.0; }

struct EvalParams {
  int max_dets_per_image = 500;
};

struct CategoryAp {
  std::optional<double> ap;
  std::optional<double> ap50;
  std::optional<double> ap75;
};

/// COCO-style average precision. An unset value means no ground truth fell
/// into that bucket.
struct EvalResult {
  std::optional<double> ap;
  std::optional<double> ap50;
  std::optional<double> ap75;
  std::optional<double> ap_small;
  std::optional<double> ap_medium;
  std::optional<double> ap_large;
  std::map<std::int64_t, CategoryAp> per_category;
};

/// Greedy score-ordered matching per image and category at each IoU
/// threshold, 101-point interpolated precision, averaged over thresholds and
/// categories. Size buckets ignore ground truth outside the bucket and
/// unmatched detections outside it. Throws kIntegrity when a detection names
/// an unknown image or category.
EvalResult evaluate(std::span<const Detection> dets, const Dataset& gt,
                    const EvalParams& params = {});

/// {"AP", "AP50", "AP75", "APs", "APm", "APl", "per_category"}; undefined
/// values are written as -1.
std::string eval_report_json(const EvalResult& result, const Dataset& gt);

}  // namespace dmcrop

#endif  // DMCROP_EVALUATE_HPP_
