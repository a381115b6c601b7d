#ifndef DMCROP_DATASET_IO_HPP_
#define DMCROP_DATASET_IO_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dmcrop/detection.hpp"
#include "dmcrop/geometry.hpp"
#include "dmcrop/raster.hpp"

namespace dmcrop {

struct ImageRecord {
  std::int64_t id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;

  ImageSize size() const { return {height, width}; }
  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct Annotation {
  std::int64_t id = 0;
  std::int64_t image_id = 0;
  std::int64_t category_id = 0;
  BoundingBox bbox;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

/// What happened to the raw annotations while a dataset was built.
struct LoadReport {
  std::size_t dropped_degenerate = 0;  // non-positive w or h in the input
  std::size_t dropped_outside = 0;     // nothing left after clamping to the image
  std::vector<std::int64_t> clamped_ids;

  friend bool operator==(const LoadReport&, const LoadReport&) = default;
};

/// Immutable COCO-style dataset. Images and annotations are ordered by id,
/// every annotation references a known image and category, and every box
/// lies inside its image.
class Dataset {
 public:
  Dataset() = default;

  /// Validates references, drops degenerate boxes and clamps the rest to
  /// their image. Throws kIntegrity on dangling or duplicate ids and
  /// kValidation on images with non-positive extent.
  static Dataset build(std::vector<ImageRecord> images, std::vector<Annotation> annotations,
                       std::map<std::int64_t, std::string> categories);

  const std::vector<ImageRecord>& images() const { return images_; }
  const std::vector<Annotation>& annotations() const { return annotations_; }
  const std::map<std::int64_t, std::string>& categories() const { return categories_; }
  const LoadReport& report() const { return report_; }

  const ImageRecord* find_image(std::int64_t id) const;
  const ImageRecord& image(std::int64_t id) const;
  bool has_category(std::int64_t id) const { return categories_.contains(id); }

  /// Annotations of one image, ordered by annotation id.
  std::vector<Annotation> annotations_for(std::int64_t image_id) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<ImageRecord> images_;
  std::vector<Annotation> annotations_;
  std::map<std::int64_t, std::string> categories_;
  std::map<std::int64_t, std::vector<std::size_t>> by_image_;
  LoadReport report_;
};

/// Parses a COCO annotation document. Throws kParse (with the byte offset)
/// on malformed JSON or missing fields and kIntegrity on dangling ids.
Dataset parse_coco(std::string_view json_text);

/// Serializes a dataset back to a COCO annotation document.
std::string to_coco_json(const Dataset& dataset);

struct ScaleStats {
  double mean_h = 0.0;
  double mean_w = 0.0;
  std::int64_t count = 0;

  friend bool operator==(const ScaleStats&, const ScaleStats&) = default;
};

/// Mean box extent per category and over the whole dataset.
struct CategoryStats {
  std::map<std::int64_t, ScaleStats> per_category;
  ScaleStats global;

  friend bool operator==(const CategoryStats&, const CategoryStats&) = default;
};

/// Means are summed in sorted order, so the result does not depend on the
/// order of the annotations. Throws kInvalidArgument on an empty set.
CategoryStats dataset_stats(std::span<const Annotation> annotations);
CategoryStats dataset_stats(const Dataset& dataset);

// DMAP raster layout: "DMAP", u16 version, u16 reserved, u32 height,
// u32 width, then height * width little-endian f32 values, row-major.
inline constexpr std::size_t kDensityHeaderSize = 16;
inline constexpr std::uint16_t kDensityFormatVersion = 1;

std::vector<std::uint8_t> write_density(const DensityRaster& raster);
DensityRaster read_density(std::span<const std::uint8_t> bytes);

DensityRaster read_density_file(const std::filesystem::path& path);
void write_density_file(const std::filesystem::path& path, const DensityRaster& raster);

/// COCO results array ordered by image id, then by descending score.
/// Throws kValidation when a score lies outside [0, 1].
std::string write_coco_detections(std::span<const Detection> detections);
std::vector<Detection> parse_coco_detections(std::string_view json_text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace dmcrop

#endif  // DMCROP_DATASET_IO_HPP_
