#ifndef DMCROP_REMAP_HPP_
#define DMCROP_REMAP_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dmcrop/dataset_io.hpp"
#include "dmcrop/detection.hpp"
#include "dmcrop/mask_crop.hpp"

namespace dmcrop {

inline constexpr double kDefaultMinVisibility = 0.5;

/// Annotations of one crop, in crop-local coordinates. visibility[i] is the
/// fraction of annotation i's original area that survived clipping.
struct CropAnnotationSet {
  CropRegion crop;
  std::vector<Annotation> annotations;
  std::vector<double> visibility;
};

/// Clips each annotation of the crop's image to the crop and translates it
/// to the crop origin. Annotations whose visible fraction is below
/// `min_visibility` are left out.
CropAnnotationSet project_annotations(const CropRegion& crop, std::span<const Annotation> anns,
                                      double min_visibility = kDefaultMinVisibility);

struct BackprojectOptions {
  double scale = 1.0;  // crop pixels per detector-input pixel
  bool drop_border_touching = false;
};

struct BackprojectResult {
  std::vector<Detection> detections;
  std::size_t dropped = 0;  // boxes left with zero area after clipping
};

/// Maps crop-local detections into image coordinates: scale, translate by
/// the crop origin, clip to the image. Scores pass through unchanged.
BackprojectResult backproject_detections(const CropRegion& crop, std::span<const Detection> dets,
                                         ImageSize image, const BackprojectOptions& options = {});

/// COCO document with one synthetic image per crop. Crop images are numbered
/// 1..n in the order given, file names are `<stem>_crop<k>.jpg`.
std::string crop_annotations_to_coco(std::span<const CropAnnotationSet> sets,
                                     const Dataset& source);

}  // namespace dmcrop

#endif  // DMCROP_REMAP_HPP_
