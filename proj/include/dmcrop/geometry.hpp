#ifndef DMCROP_GEOMETRY_HPP_
#define DMCROP_GEOMETRY_HPP_

#include <optional>
#include <span>
#include <string_view>

namespace dmcrop {

/// Axis-aligned box in continuous pixel coordinates. (x, y) is the top-left
/// corner; the box covers [x, x + w) x [y, y + h). A valid box has w > 0 and
/// h > 0.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double right() const { return x + w; }
  double bottom() const { return y + h; }
  double area() const { return w * h; }
  double center_x() const { return x + w / 2.0; }
  double center_y() const { return y + h / 2.0; }
  bool valid() const { return w > 0.0 && h > 0.0; }

  bool contains(const BoundingBox& other) const {
    return other.x >= x && other.y >= y && other.right() <= right() &&
           other.bottom() <= bottom();
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

enum class AreaClass { kSmall, kMedium, kLarge };

std::string_view to_string(AreaClass c);

/// Integer pixel index: column x, row y.
struct Pixel {
  int x = 0;
  int y = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Image extent in pixels.
struct ImageSize {
  int height = 0;
  int width = 0;
  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

// Boxes below 32^2 are small, below 96^2 medium, everything else large.
inline constexpr double kSmallAreaLimit = 32.0 * 32.0;
inline constexpr double kMediumAreaLimit = 96.0 * 96.0;

/// Intersection over union. Areas are measured from the box edges so that
/// iou(a, a) is exactly 1.
double iou(const BoundingBox& a, const BoundingBox& b);

/// Intersection of `b` with `r`, or nullopt when it is empty or degenerate.
/// Along each axis where one interval contains the other, the contained
/// interval is returned unchanged (no re-rounding of its width).
std::optional<BoundingBox> clip(const BoundingBox& b, const BoundingBox& r);

AreaClass area_class(const BoundingBox& b);
AreaClass area_class(double area);

/// Smallest rectangle covering every pixel, with inclusive extents
/// (w = max_x - min_x + 1). Throws kInvalidArgument on an empty set.
BoundingBox circumscribed_rect(std::span<const Pixel> points);

}  // namespace dmcrop

#endif  // DMCROP_GEOMETRY_HPP_
