#ifndef DMCROP_DETECTION_HPP_
#define DMCROP_DETECTION_HPP_

#include <cstdint>
#include <optional>

#include "dmcrop/geometry.hpp"

namespace dmcrop {

/// A scored box. `crop` names the crop the box was detected in; nullopt means
/// the box came from the whole image.
struct Detection {
  std::int64_t image_id = 0;
  std::int64_t category_id = 0;
  BoundingBox bbox;
  double score = 0.0;
  std::optional<int> crop;

  friend bool operator==(const Detection&, const Detection&) = default;
};

}  // namespace dmcrop

#endif  // DMCROP_DETECTION_HPP_
