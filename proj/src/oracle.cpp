#include "dmcrop/oracle.hpp"

#include <random>

#include "dmcrop/error.hpp"

namespace dmcrop {

namespace {

std::uint64_t mix(std::uint64_t seed, std::int64_t image_id, std::optional<int> crop_index) {
  // splitmix64 finalizer over the three inputs.
  auto step = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = step(seed);
  h = step(h ^ static_cast<std::uint64_t>(image_id));
  h = step(h ^ static_cast<std::uint64_t>(crop_index ? *crop_index + 1 : 0));
  return h;
}

}  // namespace

std::vector<Detection> oracle_detect(const Dataset& gt, std::int64_t image_id,
                                     const BoundingBox& region, std::optional<int> crop_index,
                                     const MissPolicy& policy) {
  for (double p : policy.drop_probability) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorKind::kInvalidArgument, "miss probabilities must lie in [0, 1]");
    }
  }
  // mt19937_64 output is fully specified; the 53-bit conversion below keeps
  // draws identical across standard libraries.
  std::mt19937_64 rng(mix(policy.seed, image_id, crop_index));

  std::vector<Detection> out;
  for (const Annotation& a : gt.annotations_for(image_id)) {
    const double cx = a.bbox.center_x();
    const double cy = a.bbox.center_y();
    if (cx < region.x || cx >= region.right() || cy < region.y || cy >= region.bottom()) continue;
    if (policy.active()) {
      // One draw per candidate keeps the stream aligned with the candidate list.
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      if (u < policy.drop_probability[static_cast<std::size_t>(area_class(a.bbox))]) continue;
    }
    const auto clipped = clip(a.bbox, region);
    if (!clipped) continue;
    Detection d;
    d.image_id = image_id;
    d.category_id = a.category_id;
    d.bbox = BoundingBox{clipped->x - region.x, clipped->y - region.y, clipped->w, clipped->h};
    d.score = 1.0;
    d.crop = crop_index;
    out.push_back(d);
  }
  return out;
}

std::vector<Detection> oracle_detect_image(const Dataset& gt, std::int64_t image_id,
                                           const MissPolicy& policy) {
  const ImageRecord& img = gt.image(image_id);
  const BoundingBox full{0.0, 0.0, static_cast<double>(img.width), static_cast<double>(img.height)};
  return oracle_detect(gt, image_id, full, std::nullopt, policy);
}

std::vector<Detection> oracle_detect_crop(const Dataset& gt, const CropRegion& crop,
                                          const MissPolicy& policy) {
  return oracle_detect(gt, crop.image_id, crop.rect, crop.crop_index, policy);
}

}  // namespace dmcrop
