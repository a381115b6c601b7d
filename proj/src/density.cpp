#include "dmcrop/density.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "dmcrop/error.hpp"

namespace dmcrop {

namespace {

// Normalized 1-D Gaussian taps for offsets -radius..radius. The outer product
// of two of these sums to 1 over the (2r+1)^2 support.
std::vector<double> gaussian_taps(double sigma, int radius) {
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  const double denom = 2.0 * sigma * sigma;
  double sum = 0.0;
  for (int d = -radius; d <= radius; ++d) {
    const double v = std::exp(-static_cast<double>(d) * d / denom);
    taps[static_cast<std::size_t>(d + radius)] = v;
    sum += v;
  }
  for (double& v : taps) v /= sum;
  return taps;
}

int truncation_radius(double sigma, double sigmas) {
  return static_cast<int>(std::ceil(sigmas * sigma));
}

void splat(std::vector<double>& acc, ImageSize size, int cx, int cy,
           const std::vector<double>& taps, int radius) {
  const int r0 = std::max(0, cy - radius);
  const int r1 = std::min(size.height - 1, cy + radius);
  const int c0 = std::max(0, cx - radius);
  const int c1 = std::min(size.width - 1, cx + radius);
  for (int r = r0; r <= r1; ++r) {
    const double wy = taps[static_cast<std::size_t>(r - cy + radius)];
    double* out = acc.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(size.width);
    for (int c = c0; c <= c1; ++c) {
      out[c] += wy * taps[static_cast<std::size_t>(c - cx + radius)];
    }
  }
}

int center_index(double coord, int extent) {
  return std::clamp(static_cast<int>(std::floor(coord)), 0, extent - 1);
}

double catmull_rom(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

struct Taps {
  int index[4];
  double weight[4];
};

// Source taps for each destination sample along one axis.
std::vector<Taps> resample_taps(int src, int dst) {
  std::vector<Taps> out(static_cast<std::size_t>(dst));
  const double scale = static_cast<double>(src) / static_cast<double>(dst);
  for (int i = 0; i < dst; ++i) {
    const double pos = (i + 0.5) * scale - 0.5;
    const double base = std::floor(pos);
    const double frac = pos - base;
    Taps& t = out[static_cast<std::size_t>(i)];
    for (int k = 0; k < 4; ++k) {
      t.index[k] = std::clamp(static_cast<int>(base) - 1 + k, 0, src - 1);
      t.weight[k] = catmull_rom(frac - (k - 1));
    }
  }
  return out;
}

}  // namespace

double sigma_classwise(const CategoryStats& stats, std::int64_t category_id) {
  auto it = stats.per_category.find(category_id);
  if (it == stats.per_category.end() || it->second.count <= 0) {
    throw Error(ErrorKind::kInvalidArgument,
                "no scale statistics for category " + std::to_string(category_id));
  }
  const ScaleStats& s = it->second;
  if (!(s.mean_h > 0.0) || !(s.mean_w > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                "non-positive mean extent for category " + std::to_string(category_id));
  }
  return 0.5 * std::sqrt(s.mean_h * s.mean_h + s.mean_w * s.mean_w);
}

double sigma_adaptive(std::span<const Point2> centers, std::size_t index, double beta, int k) {
  if (centers.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument, "adaptive kernel undefined for isolated object");
  }
  if (index >= centers.size()) {
    throw Error(ErrorKind::kInvalidArgument, "center index out of range");
  }
  if (k < 1 || static_cast<std::size_t>(k) > centers.size() - 1) {
    throw Error(ErrorKind::kInvalidArgument,
                "k = " + std::to_string(k) + " exceeds the " + std::to_string(centers.size() - 1) +
                    " available neighbours");
  }
  if (!(beta > 0.0)) throw Error(ErrorKind::kInvalidArgument, "beta must be positive");
  std::vector<double> dist;
  dist.reserve(centers.size() - 1);
  const Point2 p = centers[index];
  for (std::size_t j = 0; j < centers.size(); ++j) {
    if (j == index) continue;
    dist.push_back(std::hypot(centers[j].x - p.x, centers[j].y - p.y));
  }
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
  double sum = 0.0;
  for (int j = 0; j < k; ++j) sum += dist[static_cast<std::size_t>(j)];
  return beta * sum / k;
}

DensityRaster render_density(ImageSize size, std::span<const Annotation> annotations,
                             const KernelSpec& spec) {
  if (size.height <= 0 || size.width <= 0) {
    throw Error(ErrorKind::kInvalidArgument, "image extent must be positive");
  }
  if (!(spec.truncation_radius_sigmas > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "truncation radius must be positive");
  }

  std::vector<Point2> centers;
  centers.reserve(annotations.size());
  for (const Annotation& a : annotations) centers.push_back({a.bbox.center_x(), a.bbox.center_y()});

  std::vector<double> sigmas(annotations.size());
  std::visit(
      [&](const auto& mode) {
        using Mode = std::decay_t<decltype(mode)>;
        for (std::size_t i = 0; i < annotations.size(); ++i) {
          if constexpr (std::is_same_v<Mode, FixedKernel>) {
            sigmas[i] = mode.sigma;
          } else if constexpr (std::is_same_v<Mode, AdaptiveKernel>) {
            if (mode.k < 1) throw Error(ErrorKind::kInvalidArgument, "k must be at least 1");
            if (centers.size() < 2) {
              sigmas[i] = mode.fallback_sigma;
              continue;
            }
            const int k = std::min<int>(mode.k, static_cast<int>(centers.size()) - 1);
            const double s = sigma_adaptive(centers, i, mode.beta, k);
            // Coincident neighbours give a zero distance; treat like isolation.
            sigmas[i] = s > 0.0 ? s : mode.fallback_sigma;
          } else {
            sigmas[i] = sigma_classwise(mode.stats, annotations[i].category_id);
          }
        }
      },
      spec.mode);

  std::vector<double> acc(static_cast<std::size_t>(size.height) * static_cast<std::size_t>(size.width),
                          0.0);
  std::map<double, std::pair<int, std::vector<double>>> kernels;
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const double sigma = sigmas[i];
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw Error(ErrorKind::kInvalidArgument, "kernel sigma must be positive");
    }
    auto it = kernels.find(sigma);
    if (it == kernels.end()) {
      const int radius = truncation_radius(sigma, spec.truncation_radius_sigmas);
      it = kernels.emplace(sigma, std::make_pair(radius, gaussian_taps(sigma, radius))).first;
    }
    const auto& [radius, taps] = it->second;
    splat(acc, size, center_index(centers[i].x, size.width), center_index(centers[i].y, size.height),
          taps, radius);
  }

  std::vector<float> values(acc.size());
  std::transform(acc.begin(), acc.end(), values.begin(),
                 [](double v) { return static_cast<float>(v); });
  return DensityRaster(size.height, size.width, std::move(values));
}

DensityRaster upsample_bicubic(const DensityRaster& raster, ImageSize target) {
  if (raster.empty()) throw Error(ErrorKind::kInvalidArgument, "cannot upsample an empty raster");
  if (target.height < raster.height() || target.width < raster.width()) {
    throw Error(ErrorKind::kInvalidArgument, "target is smaller than the source raster");
  }
  if (target == raster.size()) return raster;

  const int sh = raster.height();
  const int sw = raster.width();
  const auto col_taps = resample_taps(sw, target.width);
  const auto row_taps = resample_taps(sh, target.height);

  // Horizontal pass into a sh x tw buffer, then vertical.
  std::vector<double> horizontal(static_cast<std::size_t>(sh) * static_cast<std::size_t>(target.width));
  for (int r = 0; r < sh; ++r) {
    const auto src = raster.row(r);
    double* out = horizontal.data() + static_cast<std::size_t>(r) * target.width;
    for (int c = 0; c < target.width; ++c) {
      const Taps& t = col_taps[static_cast<std::size_t>(c)];
      double v = 0.0;
      for (int k = 0; k < 4; ++k) v += t.weight[k] * src[static_cast<std::size_t>(t.index[k])];
      out[c] = v;
    }
  }
  DensityRaster out(target.height, target.width);
  for (int r = 0; r < target.height; ++r) {
    const Taps& t = row_taps[static_cast<std::size_t>(r)];
    auto dst = out.row(r);
    for (int c = 0; c < target.width; ++c) {
      double v = 0.0;
      for (int k = 0; k < 4; ++k) {
        v += t.weight[k] * horizontal[static_cast<std::size_t>(t.index[k]) * target.width + c];
      }
      dst[static_cast<std::size_t>(c)] = static_cast<float>(std::max(v, 0.0));
    }
  }
  return out;
}

DensityRaster upsample_bicubic(const DensityRaster& raster, int factor) {
  if (factor < 1) throw Error(ErrorKind::kInvalidArgument, "upsampling factor must be >= 1");
  return upsample_bicubic(raster, ImageSize{raster.height() * factor, raster.width() * factor});
}

DensityError density_error(const DensityRaster& pred, const DensityRaster& gt, int n_images) {
  if (!pred.same_shape(gt)) {
    throw Error(ErrorKind::kInvalidArgument, "density rasters differ in shape");
  }
  if (n_images < 1) throw Error(ErrorKind::kInvalidArgument, "n_images must be >= 1");
  double sq = 0.0;
  double abs_sum = 0.0;
  double pred_sum = 0.0;
  double gt_sum = 0.0;
  const auto p = pred.values();
  const auto g = gt.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = static_cast<double>(p[i]) - static_cast<double>(g[i]);
    sq += d * d;
    abs_sum += std::abs(d);
    pred_sum += p[i];
    gt_sum += g[i];
  }
  DensityError e;
  e.loss = sq / (2.0 * n_images);
  const double pixels = p.empty() ? 1.0 : static_cast<double>(p.size());
  e.loss_per_pixel = e.loss / pixels;
  e.mae = p.empty() ? 0.0 : abs_sum / pixels;
  e.count_error = std::abs(pred_sum - gt_sum);
  return e;
}

}  // namespace dmcrop
