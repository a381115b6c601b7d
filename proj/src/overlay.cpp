#include "dmcrop/overlay.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "dmcrop/error.hpp"

namespace dmcrop {

namespace {

std::size_t offset(const RgbImage& img, int row, int col) {
  return (static_cast<std::size_t>(row) * static_cast<std::size_t>(img.width) +
          static_cast<std::size_t>(col)) *
         3;
}

std::uint8_t blend(std::uint8_t base, std::uint8_t tint, double alpha) {
  const double v = base * (1.0 - alpha) + tint * alpha;
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

void blend_pixel(RgbImage& img, int row, int col, Rgb tint, double alpha) {
  const Rgb base = img.at(row, col);
  img.set(row, col, {blend(base[0], tint[0], alpha), blend(base[1], tint[1], alpha),
                     blend(base[2], tint[2], alpha)});
}

// Piecewise-linear blue -> cyan -> yellow -> red ramp over [0, 1].
Rgb colormap(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const auto channel = [](double x) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(x, 0.0, 1.0) * 255.0));
  };
  const double r = std::clamp(4.0 * t - 1.5, 0.0, 1.0) - std::clamp(4.0 * t - 3.5, 0.0, 0.5);
  const double g = std::clamp(2.0 - std::abs(4.0 * t - 2.0), 0.0, 1.0);
  const double b = std::clamp(1.5 - std::abs(4.0 * t - 1.0), 0.0, 1.0);
  return {channel(r), channel(g), channel(b)};
}

void stroke_rect(RgbImage& img, const BoundingBox& box, Rgb color) {
  const int x0 = static_cast<int>(std::floor(box.x));
  const int y0 = static_cast<int>(std::floor(box.y));
  const int x1 = static_cast<int>(std::ceil(box.right())) - 1;
  const int y1 = static_cast<int>(std::ceil(box.bottom())) - 1;
  if (x1 < x0 || y1 < y0) return;
  const auto plot = [&](int row, int col) {
    if (row >= 0 && row < img.height && col >= 0 && col < img.width) img.set(row, col, color);
  };
  for (int c = x0; c <= x1; ++c) {
    plot(y0, c);
    plot(y1, c);
  }
  for (int r = y0; r <= y1; ++r) {
    plot(r, x0);
    plot(r, x1);
  }
}

}  // namespace

Rgb RgbImage::at(int row, int col) const {
  const std::size_t o = offset(*this, row, col);
  return {pixels[o], pixels[o + 1], pixels[o + 2]};
}

void RgbImage::set(int row, int col, Rgb c) {
  const std::size_t o = offset(*this, row, col);
  pixels[o] = c[0];
  pixels[o + 1] = c[1];
  pixels[o + 2] = c[2];
}

RgbImage blank_canvas(ImageSize size, Rgb fill) {
  if (size.height <= 0 || size.width <= 0) {
    throw Error(ErrorKind::kInvalidArgument, "canvas extent must be positive");
  }
  RgbImage img{size.height, size.width, {}};
  img.pixels.resize(static_cast<std::size_t>(size.height) * static_cast<std::size_t>(size.width) * 3);
  for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
    img.pixels[i] = fill[0];
    img.pixels[i + 1] = fill[1];
    img.pixels[i + 2] = fill[2];
  }
  return img;
}

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
  if (image.pixels.size() !=
      static_cast<std::size_t>(image.height) * static_cast<std::size_t>(image.width) * 3) {
    throw Error(ErrorKind::kInvalidArgument, "pixel buffer does not match image extent");
  }
  png_image desc{};
  desc.version = PNG_IMAGE_VERSION;
  desc.width = static_cast<png_uint_32>(image.width);
  desc.height = static_cast<png_uint_32>(image.height);
  desc.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&desc, nullptr, &size, 0, image.pixels.data(), 0, nullptr)) {
    throw Error(ErrorKind::kIo, std::string("PNG encoding failed: ") + desc.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&desc, out.data(), &size, 0, image.pixels.data(), 0, nullptr)) {
    throw Error(ErrorKind::kIo, std::string("PNG encoding failed: ") + desc.message);
  }
  out.resize(size);
  return out;
}

RgbImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image desc{};
  desc.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&desc, bytes.data(), bytes.size())) {
    throw Error(ErrorKind::kFormat, std::string("PNG decoding failed: ") + desc.message);
  }
  desc.format = PNG_FORMAT_RGB;
  RgbImage img{static_cast<int>(desc.height), static_cast<int>(desc.width), {}};
  img.pixels.resize(PNG_IMAGE_SIZE(desc));
  if (!png_image_finish_read(&desc, nullptr, img.pixels.data(), 0, nullptr)) {
    png_image_free(&desc);
    throw Error(ErrorKind::kFormat, std::string("PNG decoding failed: ") + desc.message);
  }
  return img;
}

RgbImage compose_overlay(const RgbImage& canvas, const OverlayLayers& layers) {
  const ImageSize size{canvas.height, canvas.width};
  if (layers.density != nullptr && layers.density->size() != size) {
    throw Error(ErrorKind::kInvalidArgument, "density extent does not match the canvas");
  }
  if (layers.mask != nullptr && layers.mask->size() != size) {
    throw Error(ErrorKind::kInvalidArgument, "mask extent does not match the canvas");
  }
  RgbImage out = canvas;
  if (layers.density != nullptr) {
    const auto values = layers.density->values();
    const float peak = values.empty() ? 0.0f : *std::max_element(values.begin(), values.end());
    if (peak > 0.0f) {
      for (int r = 0; r < size.height; ++r) {
        for (int c = 0; c < size.width; ++c) {
          const double t = (*layers.density)(r, c) / static_cast<double>(peak);
          if (t > 0.0) blend_pixel(out, r, c, colormap(t), kDensityAlpha * t);
        }
      }
    }
  }
  if (layers.mask != nullptr) {
    for (int r = 0; r < size.height; ++r) {
      for (int c = 0; c < size.width; ++c) {
        if ((*layers.mask)(r, c) != 0) blend_pixel(out, r, c, kMaskTint, kMaskAlpha);
      }
    }
  }
  for (const CropRegion& crop : layers.crops) stroke_rect(out, crop.rect, kCropColor);
  for (const Annotation& a : layers.annotations) stroke_rect(out, a.bbox, kGroundTruthColor);
  return out;
}

std::vector<std::uint8_t> render_overlay(const RgbImage& canvas, const OverlayLayers& layers) {
  return encode_png(compose_overlay(canvas, layers));
}

}  // namespace dmcrop
