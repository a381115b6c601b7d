#ifndef DMCROP_RASTER_HPP_
#define DMCROP_RASTER_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dmcrop/error.hpp"
#include "dmcrop/geometry.hpp"

namespace dmcrop {

/// Dense row-major single-channel grid.
template <typename T>
class Raster {
 public:
  Raster() = default;

  Raster(int height, int width, T fill = T{}) : height_(height), width_(width) {
    if (height < 0 || width < 0) {
      throw Error(ErrorKind::kInvalidArgument, "negative raster extent");
    }
    values_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill);
  }

  Raster(int height, int width, std::vector<T> values)
      : height_(height), width_(width), values_(std::move(values)) {
    if (height < 0 || width < 0 ||
        values_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
      throw Error(ErrorKind::kInvalidArgument, "raster values do not match extent");
    }
  }

  int height() const { return height_; }
  int width() const { return width_; }
  ImageSize size() const { return {height_, width_}; }
  std::size_t pixel_count() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  T& operator()(int row, int col) { return values_[index(row, col)]; }
  const T& operator()(int row, int col) const { return values_[index(row, col)]; }

  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }
  std::span<T> row(int r) { return std::span<T>(values_).subspan(index(r, 0), width_); }
  std::span<const T> row(int r) const {
    return std::span<const T>(values_).subspan(index(r, 0), width_);
  }

  bool same_shape(const Raster& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<T> values_;
};

/// Non-negative object density, one value per image pixel.
using DensityRaster = Raster<float>;

/// Binary mask; every value is 0 or 1.
using DensityMask = Raster<std::uint8_t>;

}  // namespace dmcrop

#endif  // DMCROP_RASTER_HPP_
