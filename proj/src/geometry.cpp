#include "dmcrop/geometry.hpp"

#include <algorithm>
#include <limits>

#include "dmcrop/error.hpp"

namespace dmcrop {

std::string_view to_string(AreaClass c) {
  switch (c) {
    case AreaClass::kSmall:
      return "small";
    case AreaClass::kMedium:
      return "medium";
    case AreaClass::kLarge:
      return "large";
  }
  return "unknown";
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double area_a = (a.right() - a.x) * (a.bottom() - a.y);
  const double area_b = (b.right() - b.x) * (b.bottom() - b.y);
  const double uni = area_a + area_b - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

namespace {

struct Interval {
  double start;
  double length;
};

std::optional<Interval> intersect(double b0, double bl, double r0, double rl) {
  const double b1 = b0 + bl;
  const double r1 = r0 + rl;
  if (b0 >= r0 && b1 <= r1) return Interval{b0, bl};
  if (r0 >= b0 && r1 <= b1) return Interval{r0, rl};
  const double lo = std::max(b0, r0);
  const double hi = std::min(b1, r1);
  if (hi - lo <= 0.0) return std::nullopt;
  return Interval{lo, hi - lo};
}

}  // namespace

std::optional<BoundingBox> clip(const BoundingBox& b, const BoundingBox& r) {
  const auto ix = intersect(b.x, b.w, r.x, r.w);
  if (!ix) return std::nullopt;
  const auto iy = intersect(b.y, b.h, r.y, r.h);
  if (!iy) return std::nullopt;
  if (ix->length <= 0.0 || iy->length <= 0.0) return std::nullopt;
  return BoundingBox{ix->start, iy->start, ix->length, iy->length};
}

AreaClass area_class(double area) {
  if (area < kSmallAreaLimit) return AreaClass::kSmall;
  if (area < kMediumAreaLimit) return AreaClass::kMedium;
  return AreaClass::kLarge;
}

AreaClass area_class(const BoundingBox& b) { return area_class(b.area()); }

BoundingBox circumscribed_rect(std::span<const Pixel> points) {
  if (points.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "empty region");
  }
  int min_x = std::numeric_limits<int>::max();
  int min_y = std::numeric_limits<int>::max();
  int max_x = std::numeric_limits<int>::min();
  int max_y = std::numeric_limits<int>::min();
  for (const Pixel& p : points) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  return BoundingBox{static_cast<double>(min_x), static_cast<double>(min_y),
                     static_cast<double>(max_x - min_x + 1),
                     static_cast<double>(max_y - min_y + 1)};
}

}  // namespace dmcrop
