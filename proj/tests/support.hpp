// Reference implementations and random fixtures shared by the unit and
// acceptance tests. The references are deliberately naive.
#ifndef DMCROP_TESTS_SUPPORT_HPP_
#define DMCROP_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <random>
#include <vector>

#include "dmcrop/dataset_io.hpp"
#include "dmcrop/detection.hpp"
#include "dmcrop/geometry.hpp"
#include "dmcrop/raster.hpp"

namespace dmcrop::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// Truncated Gaussian of one object evaluated pixel by pixel, normalised over
// its full square support.
inline std::vector<double> gaussian_reference(ImageSize size, int cx, int cy, double sigma,
                                              double trunc_sigmas) {
  const int radius = static_cast<int>(std::ceil(trunc_sigmas * sigma));
  double total = 0.0;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      total += std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
    }
  }
  std::vector<double> out(static_cast<std::size_t>(size.height) * size.width, 0.0);
  for (int r = 0; r < size.height; ++r) {
    for (int c = 0; c < size.width; ++c) {
      const int dx = c - cx;
      const int dy = r - cy;
      if (std::abs(dx) > radius || std::abs(dy) > radius) continue;
      out[static_cast<std::size_t>(r) * size.width + c] =
          std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma)) / total;
    }
  }
  return out;
}

inline double raster_sum(const DensityRaster& r) {
  double s = 0.0;
  for (float v : r.values()) s += v;
  return s;
}

// For every pixel, re-sums the whole window the pixel belongs to.
inline DensityMask mask_reference(const DensityRaster& d, int wh, int ww, double threshold) {
  DensityMask out(d.height(), d.width());
  for (int r = 0; r < d.height(); ++r) {
    for (int c = 0; c < d.width(); ++c) {
      const int r0 = (r / wh) * wh;
      const int c0 = (c / ww) * ww;
      double s = 0.0;
      for (int y = r0; y < std::min(r0 + wh, d.height()); ++y) {
        for (int x = c0; x < std::min(c0 + ww, d.width()); ++x) s += d(y, x);
      }
      out(r, c) = s > threshold ? 1 : 0;
    }
  }
  return out;
}

// Breadth-first 8-connected labelling.
inline Raster<std::int32_t> flood_fill_labels(const DensityMask& mask) {
  Raster<std::int32_t> labels(mask.height(), mask.width(), 0);
  std::int32_t next = 0;
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      if (!mask(r, c) || labels(r, c)) continue;
      labels(r, c) = ++next;
      std::deque<std::pair<int, int>> queue{{r, c}};
      while (!queue.empty()) {
        const auto [y, x] = queue.front();
        queue.pop_front();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int ny = y + dy;
            const int nx = x + dx;
            if (ny < 0 || nx < 0 || ny >= mask.height() || nx >= mask.width()) continue;
            if (!mask(ny, nx) || labels(ny, nx)) continue;
            labels(ny, nx) = labels(r, c);
            queue.emplace_back(ny, nx);
          }
        }
      }
    }
  }
  return labels;
}

// Two labellings describe the same partition when their labels are in
// one-to-one correspondence and agree on background.
inline bool same_partition(const Raster<std::int32_t>& a, const Raster<std::int32_t>& b) {
  if (!a.same_shape(b)) return false;
  std::map<std::int32_t, std::int32_t> ab;
  std::map<std::int32_t, std::int32_t> ba;
  for (std::size_t i = 0; i < a.pixel_count(); ++i) {
    const auto x = a.values()[i];
    const auto y = b.values()[i];
    if ((x == 0) != (y == 0)) return false;
    if (x == 0) continue;
    if (auto [it, fresh] = ab.emplace(x, y); !fresh && it->second != y) return false;
    if (auto [it, fresh] = ba.emplace(y, x); !fresh && it->second != x) return false;
  }
  return true;
}

inline double iou_reference(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double ih = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = iw * ih;
  const double uni = a.w * a.h + b.w * b.h - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

// Full suppression matrix, then a single pass in priority order. Returns the
// kept input indices in ascending order.
inline std::vector<std::size_t> nms_reference(const std::vector<Detection>& dets, double thr) {
  const std::size_t n = dets.size();
  std::vector<std::vector<bool>> suppresses(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      suppresses[i][j] = i != j && dets[i].image_id == dets[j].image_id &&
                         dets[i].category_id == dets[j].category_id &&
                         iou_reference(dets[i].bbox, dets[j].bbox) > thr;
    }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
    return dets[a].bbox.area() < dets[b].bbox.area();
  });
  std::vector<bool> kept(n, false);
  for (std::size_t i : order) {
    bool ok = true;
    for (std::size_t j = 0; j < n; ++j) {
      if (kept[j] && suppresses[j][i]) ok = false;
    }
    kept[i] = ok;
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (kept[i]) out.push_back(i);
  }
  return out;
}

inline DensityRaster random_density(Rng& rng, int h, int w, double sparsity = 0.5) {
  DensityRaster d(h, w);
  for (float& v : d.values()) {
    v = uniform(rng, 0.0, 1.0) < sparsity ? 0.0f : static_cast<float>(uniform(rng, 0.0, 0.05));
  }
  return d;
}

inline DensityMask random_mask(Rng& rng, int h, int w, double fill) {
  DensityMask m(h, w);
  for (auto& v : m.values()) v = uniform(rng, 0.0, 1.0) < fill ? 1 : 0;
  return m;
}

// Boxes on a coarse lattice so that exact ties in IoU and score occur.
inline std::vector<Detection> random_detections(Rng& rng, int count) {
  std::vector<Detection> out;
  for (int i = 0; i < count; ++i) {
    Detection d;
    d.image_id = uniform_int(rng, 1, 3);
    d.category_id = uniform_int(rng, 1, 3);
    d.bbox = {static_cast<double>(uniform_int(rng, 0, 20) * 2),
              static_cast<double>(uniform_int(rng, 0, 20) * 2),
              static_cast<double>(uniform_int(rng, 2, 12) * 2),
              static_cast<double>(uniform_int(rng, 2, 12) * 2)};
    d.score = uniform_int(rng, 1, 20) / 20.0;
    out.push_back(d);
  }
  return out;
}

inline ImageRecord image_record(std::int64_t id, int width, int height) {
  return ImageRecord{id, "img" + std::to_string(id) + ".jpg", width, height};
}

inline Annotation annotation(std::int64_t id, std::int64_t image_id, std::int64_t category,
                             BoundingBox box) {
  return Annotation{id, image_id, category, box};
}

}  // namespace dmcrop::testing

#endif  // DMCROP_TESTS_SUPPORT_HPP_
