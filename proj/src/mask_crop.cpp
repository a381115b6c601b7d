#include "dmcrop/mask_crop.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "dmcrop/error.hpp"
#include "json.hpp"

namespace dmcrop {

namespace {

// Union-find over provisional labels; the root of a set is its smallest label.
class LabelForest {
 public:
  std::int32_t make() {
    parent_.push_back(static_cast<std::int32_t>(parent_.size()));
    return parent_.back();
  }

  std::int32_t find(std::int32_t x) {
    std::int32_t root = x;
    while (parent_[static_cast<std::size_t>(root)] != root) {
      root = parent_[static_cast<std::size_t>(root)];
    }
    while (parent_[static_cast<std::size_t>(x)] != root) {
      const std::int32_t next = parent_[static_cast<std::size_t>(x)];
      parent_[static_cast<std::size_t>(x)] = root;
      x = next;
    }
    return root;
  }

  std::int32_t unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return a;
    if (b < a) std::swap(a, b);
    parent_[static_cast<std::size_t>(b)] = a;
    return a;
  }

 private:
  std::vector<std::int32_t> parent_{0};  // label 0 is background
};

struct ComponentExtent {
  int min_x = std::numeric_limits<int>::max();
  int min_y = std::numeric_limits<int>::max();
  int max_x = std::numeric_limits<int>::min();
  int max_y = std::numeric_limits<int>::min();
  std::int64_t pixels = 0;
};

}  // namespace

DensityMask density_mask(const DensityRaster& density, const MaskParams& params) {
  if (density.empty()) throw Error(ErrorKind::kInvalidArgument, "density raster is empty");
  if (params.window_h < 1 || params.window_w < 1) {
    throw Error(ErrorKind::kInvalidArgument, "window must be at least 1x1");
  }
  if (!(params.threshold >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "threshold must be non-negative");
  }
  const int height = density.height();
  const int width = density.width();
  const int windows_x = (width + params.window_w - 1) / params.window_w;
  DensityMask mask(height, width, 0);
  std::vector<double> sums(static_cast<std::size_t>(windows_x));

  for (int top = 0; top < height; top += params.window_h) {
    const int bottom = std::min(top + params.window_h, height);
    std::fill(sums.begin(), sums.end(), 0.0);
    // Each window accumulates row-major, the same order as summing it alone.
    for (int r = top; r < bottom; ++r) {
      const auto row = density.row(r);
      for (int j = 0; j < windows_x; ++j) {
        const int left = j * params.window_w;
        const int right = std::min(left + params.window_w, width);
        double s = sums[static_cast<std::size_t>(j)];
        for (int c = left; c < right; ++c) s += row[static_cast<std::size_t>(c)];
        sums[static_cast<std::size_t>(j)] = s;
      }
    }
    for (int j = 0; j < windows_x; ++j) {
      if (!(sums[static_cast<std::size_t>(j)] > params.threshold)) continue;
      const int left = j * params.window_w;
      const int right = std::min(left + params.window_w, width);
      for (int r = top; r < bottom; ++r) {
        auto row = mask.row(r);
        std::fill(row.begin() + left, row.begin() + right, std::uint8_t{1});
      }
    }
  }
  return mask;
}

Labeling connected_components(const DensityMask& mask) {
  const int height = mask.height();
  const int width = mask.width();
  Labeling out{Raster<std::int32_t>(height, width, 0), 0};
  auto& labels = out.labels;
  LabelForest forest;

  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      if (mask(r, c) == 0) continue;
      // Already-visited 8-neighbours: W, NW, N, NE.
      std::array<std::int32_t, 4> seen{};
      std::size_t n = 0;
      if (c > 0 && labels(r, c - 1) != 0) seen[n++] = labels(r, c - 1);
      if (r > 0) {
        if (c > 0 && labels(r - 1, c - 1) != 0) seen[n++] = labels(r - 1, c - 1);
        if (labels(r - 1, c) != 0) seen[n++] = labels(r - 1, c);
        if (c + 1 < width && labels(r - 1, c + 1) != 0) seen[n++] = labels(r - 1, c + 1);
      }
      if (n == 0) {
        labels(r, c) = forest.make();
        continue;
      }
      std::int32_t root = seen[0];
      for (std::size_t i = 1; i < n; ++i) root = forest.unite(root, seen[i]);
      labels(r, c) = forest.find(root);
    }
  }

  std::vector<std::int32_t> dense;
  for (std::int32_t& v : labels.values()) {
    if (v == 0) continue;
    const auto root = static_cast<std::size_t>(forest.find(v));
    if (dense.size() <= root) dense.resize(root + 1, 0);
    if (dense[root] == 0) dense[root] = ++out.count;
    v = dense[root];
  }
  return out;
}

std::vector<CropRegion> crops_from_mask(const DensityMask& mask, int min_size,
                                        std::int64_t image_id, std::optional<double> threshold) {
  if (min_size < 0) throw Error(ErrorKind::kInvalidArgument, "min_size must be non-negative");
  const Labeling labeling = connected_components(mask);
  std::vector<ComponentExtent> extents(static_cast<std::size_t>(labeling.count));
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      const std::int32_t id = labeling.labels(r, c);
      if (id == 0) continue;
      ComponentExtent& e = extents[static_cast<std::size_t>(id - 1)];
      e.min_x = std::min(e.min_x, c);
      e.max_x = std::max(e.max_x, c);
      e.min_y = std::min(e.min_y, r);
      e.max_y = std::max(e.max_y, r);
      ++e.pixels;
    }
  }

  std::vector<CropRegion> crops;
  for (const ComponentExtent& e : extents) {
    const std::array<Pixel, 2> corners{Pixel{e.min_x, e.min_y}, Pixel{e.max_x, e.max_y}};
    const BoundingBox rect = circumscribed_rect(corners);
    if (rect.w < min_size || rect.h < min_size) continue;
    crops.push_back(CropRegion{image_id, 0, rect, e.pixels, threshold});
  }
  // Components are already in label order, so a stable sort breaks ties by label.
  std::stable_sort(crops.begin(), crops.end(), [](const CropRegion& a, const CropRegion& b) {
    if (a.rect.y != b.rect.y) return a.rect.y < b.rect.y;
    return a.rect.x < b.rect.x;
  });
  for (std::size_t i = 0; i < crops.size(); ++i) crops[i].crop_index = static_cast<int>(i);
  return crops;
}

std::vector<CropRegion> uniform_grid(ImageSize size, int rows, int cols, int overlap,
                                     std::int64_t image_id) {
  if (rows < 1 || cols < 1) throw Error(ErrorKind::kInvalidArgument, "grid needs rows, cols >= 1");
  if (overlap < 0) throw Error(ErrorKind::kInvalidArgument, "overlap must be non-negative");
  if (rows > size.height || cols > size.width) {
    throw Error(ErrorKind::kInvalidArgument, "grid is finer than the image");
  }
  const auto edges = [overlap](int extent, int parts, int i) {
    const int step = extent / parts;
    int lo = i * step;
    int hi = (i == parts - 1) ? extent : (i + 1) * step;
    if (i > 0) lo = std::max(0, lo - overlap);
    if (i < parts - 1) hi = std::min(extent, hi + overlap);
    return std::pair{lo, hi};
  };
  std::vector<CropRegion> crops;
  crops.reserve(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
  for (int i = 0; i < rows; ++i) {
    const auto [y0, y1] = edges(size.height, rows, i);
    for (int j = 0; j < cols; ++j) {
      const auto [x0, x1] = edges(size.width, cols, j);
      CropRegion c;
      c.image_id = image_id;
      c.crop_index = static_cast<int>(crops.size());
      c.rect = BoundingBox{static_cast<double>(x0), static_cast<double>(y0),
                           static_cast<double>(x1 - x0), static_cast<double>(y1 - y0)};
      c.component_size = static_cast<std::int64_t>(x1 - x0) * (y1 - y0);
      crops.push_back(c);
    }
  }
  return crops;
}

MaskParams mask_params_from_mean(double mean_h, double mean_w, double threshold) {
  const auto round_window = [](double v) {
    return std::max(1, static_cast<int>(std::lround(v)));
  };
  return MaskParams{round_window(mean_h), round_window(mean_w), threshold};
}

std::string write_crop_manifest(const std::vector<CropRegion>& crops) {
  std::string out;
  for (const CropRegion& c : crops) {
    nlohmann::ordered_json j;
    j["image_id"] = c.image_id;
    j["crop_index"] = c.crop_index;
    j["x"] = std::llround(c.rect.x);
    j["y"] = std::llround(c.rect.y);
    j["w"] = std::llround(c.rect.w);
    j["h"] = std::llround(c.rect.h);
    if (c.source_threshold) {
      j["threshold"] = *c.source_threshold;
    } else {
      j["threshold"] = nullptr;
    }
    j["component_size"] = c.component_size;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<CropRegion> parse_crop_manifest(std::string_view text) {
  std::vector<CropRegion> crops;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "manifest line " + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      CropRegion c;
      c.image_id = j.at("image_id").get<std::int64_t>();
      c.crop_index = j.at("crop_index").get<int>();
      c.rect = BoundingBox{j.at("x").get<double>(), j.at("y").get<double>(),
                           j.at("w").get<double>(), j.at("h").get<double>()};
      if (auto it = j.find("threshold"); it != j.end() && !it->is_null()) {
        c.source_threshold = it->get<double>();
      }
      if (auto it = j.find("component_size"); it != j.end()) {
        c.component_size = it->get<std::int64_t>();
      } else {
        c.component_size = std::llround(c.rect.w * c.rect.h);
      }
      if (!c.rect.valid()) throw Error(ErrorKind::kValidation, where + ": empty crop rectangle");
      crops.push_back(c);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kParse, where + ": " + e.what());
    }
  }
  return crops;
}

}  // namespace dmcrop
