#include "dmcrop/fusion.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <utility>

#include "dmcrop/error.hpp"

namespace dmcrop {

namespace {

// Indices of `dets` in NMS visiting order.
std::vector<std::size_t> priority_order(std::span<const Detection> dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
    return dets[a].bbox.area() < dets[b].bbox.area();
  });
  return order;
}

}  // namespace

std::vector<Detection> nms(std::span<const Detection> dets, double iou_threshold) {
  using Key = std::pair<std::int64_t, std::int64_t>;
  std::map<Key, std::vector<std::size_t>> kept_by_group;
  std::vector<bool> keep(dets.size(), false);
  for (std::size_t i : priority_order(dets)) {
    auto& kept = kept_by_group[{dets[i].image_id, dets[i].category_id}];
    const bool survives = std::all_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return iou(dets[i].bbox, dets[k].bbox) <= iou_threshold;
    });
    if (survives) {
      kept.push_back(i);
      keep[i] = true;
    }
  }
  std::vector<Detection> out;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (keep[i]) out.push_back(dets[i]);
  }
  return out;
}

std::vector<Detection> fuse(std::span<const Detection> global_dets,
                            std::span<const Detection> crop_dets, const FusionParams& params) {
  if (!(params.nms_iou > 0.0 && params.nms_iou < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "fusion NMS threshold must lie in (0, 1)");
  }
  if (params.max_dets_per_image < 1) {
    throw Error(ErrorKind::kInvalidArgument, "max_dets_per_image must be >= 1");
  }
  std::vector<Detection> all(global_dets.begin(), global_dets.end());
  all.insert(all.end(), crop_dets.begin(), crop_dets.end());
  const std::vector<Detection> kept = nms(all, params.nms_iou);

  std::map<std::int64_t, std::vector<Detection>> per_image;
  for (std::size_t i : priority_order(kept)) per_image[kept[i].image_id].push_back(kept[i]);

  std::vector<Detection> out;
  out.reserve(kept.size());
  for (auto& [image_id, dets] : per_image) {
    const auto limit = std::min(dets.size(), static_cast<std::size_t>(params.max_dets_per_image));
    out.insert(out.end(), dets.begin(), dets.begin() + static_cast<std::ptrdiff_t>(limit));
  }
  return out;
}

}  // namespace dmcrop
