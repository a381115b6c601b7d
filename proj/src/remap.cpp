#include "dmcrop/remap.hpp"

#include <filesystem>

#include "dmcrop/error.hpp"
#include "json.hpp"

namespace dmcrop {

CropAnnotationSet project_annotations(const CropRegion& crop, std::span<const Annotation> anns,
                                      double min_visibility) {
  if (!(min_visibility > 0.0 && min_visibility <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "min_visibility must lie in (0, 1]");
  }
  CropAnnotationSet out{crop, {}, {}};
  for (const Annotation& a : anns) {
    if (a.image_id != crop.image_id) continue;
    const auto clipped = clip(a.bbox, crop.rect);
    if (!clipped) continue;
    const double visibility = clipped->area() / a.bbox.area();
    if (visibility < min_visibility) continue;
    Annotation local = a;
    local.bbox = BoundingBox{clipped->x - crop.rect.x, clipped->y - crop.rect.y, clipped->w,
                             clipped->h};
    out.annotations.push_back(local);
    out.visibility.push_back(std::min(visibility, 1.0));
  }
  return out;
}

BackprojectResult backproject_detections(const CropRegion& crop, std::span<const Detection> dets,
                                         ImageSize image, const BackprojectOptions& options) {
  if (!(options.scale > 0.0)) throw Error(ErrorKind::kInvalidArgument, "scale must be positive");
  const BoundingBox bounds{0.0, 0.0, static_cast<double>(image.width),
                           static_cast<double>(image.height)};
  BackprojectResult out;
  out.detections.reserve(dets.size());
  for (const Detection& d : dets) {
    const BoundingBox global{d.bbox.x * options.scale + crop.rect.x,
                             d.bbox.y * options.scale + crop.rect.y, d.bbox.w * options.scale,
                             d.bbox.h * options.scale};
    if (options.drop_border_touching &&
        (global.x <= crop.rect.x || global.y <= crop.rect.y ||
         global.right() >= crop.rect.right() || global.bottom() >= crop.rect.bottom())) {
      continue;
    }
    const auto clipped = clip(global, bounds);
    if (!clipped) {
      ++out.dropped;
      continue;
    }
    Detection g = d;
    g.image_id = crop.image_id;
    g.bbox = *clipped;
    g.crop = crop.crop_index;
    out.detections.push_back(g);
  }
  return out;
}

std::string crop_annotations_to_coco(std::span<const CropAnnotationSet> sets,
                                     const Dataset& source) {
  using nlohmann::ordered_json;
  ordered_json images = ordered_json::array();
  ordered_json annotations = ordered_json::array();
  std::int64_t next_ann = 1;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const CropAnnotationSet& set = sets[i];
    const ImageRecord& parent = source.image(set.crop.image_id);
    std::string stem = std::filesystem::path(parent.file_name).stem().string();
    if (stem.empty()) stem = std::to_string(parent.id);
    const auto crop_image_id = static_cast<std::int64_t>(i + 1);
    const BoundingBox& r = set.crop.rect;
    images.push_back({{"id", crop_image_id},
                      {"file_name", stem + "_crop" + std::to_string(set.crop.crop_index) + ".jpg"},
                      {"width", std::llround(r.w)},
                      {"height", std::llround(r.h)},
                      {"source_image_id", parent.id},
                      {"crop_index", set.crop.crop_index},
                      {"crop", {std::llround(r.x), std::llround(r.y), std::llround(r.w),
                                std::llround(r.h)}}});
    for (std::size_t k = 0; k < set.annotations.size(); ++k) {
      const Annotation& a = set.annotations[k];
      annotations.push_back({{"id", next_ann++},
                             {"image_id", crop_image_id},
                             {"category_id", a.category_id},
                             {"bbox", {a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h}},
                             {"area", a.bbox.area()},
                             {"iscrowd", 0},
                             {"visibility", set.visibility[k]},
                             {"source_annotation_id", a.id}});
    }
  }
  ordered_json categories = ordered_json::array();
  for (const auto& [id, name] : source.categories()) {
    categories.push_back({{"id", id}, {"name", name}});
  }
  ordered_json doc;
  doc["images"] = std::move(images);
  doc["annotations"] = std::move(annotations);
  doc["categories"] = std::move(categories);
  return doc.dump();
}

}  // namespace dmcrop
