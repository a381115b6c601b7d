#include "dmcrop/dataset_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "dmcrop/error.hpp"
#include "json.hpp"

namespace dmcrop {

using nlohmann::json;

namespace {

std::string id_str(std::int64_t id) { return std::to_string(id); }

// Clamps one interval [start, start + length) to [0, limit). Returns false when
// nothing remains. Leaves the interval untouched when it already fits.
bool clamp_interval(double& start, double& length, double limit, bool& changed) {
  const double end = start + length;
  if (start >= 0.0 && end <= limit) return true;
  const double lo = std::max(start, 0.0);
  const double hi = std::min(end, limit);
  changed = true;
  if (hi - lo <= 0.0) return false;
  start = lo;
  length = hi - lo;
  return true;
}

const json& require(const json& object, const char* key, const std::string& where) {
  if (!object.is_object()) {
    throw Error(ErrorKind::kParse, where + ": expected an object");
  }
  auto it = object.find(key);
  if (it == object.end()) {
    throw Error(ErrorKind::kParse, where + ": missing field '" + key + "'");
  }
  return *it;
}

template <typename T>
T field(const json& object, const char* key, const std::string& where) {
  const json& value = require(object, key, where);
  try {
    return value.get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, where + ": bad field '" + key + "': " + e.what());
  }
}

BoundingBox bbox_field(const json& object, const std::string& where) {
  const json& value = require(object, "bbox", where);
  if (!value.is_array() || value.size() != 4) {
    throw Error(ErrorKind::kParse, where + ": bbox must be an array of 4 numbers");
  }
  for (const json& v : value) {
    if (!v.is_number()) {
      throw Error(ErrorKind::kParse, where + ": bbox must be an array of 4 numbers");
    }
  }
  return BoundingBox{value[0].get<double>(), value[1].get<double>(), value[2].get<double>(),
                     value[3].get<double>()};
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kParse,
                "malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

const json& array_field(const json& doc, const char* key) {
  const json& value = require(doc, key, "document");
  if (!value.is_array()) {
    throw Error(ErrorKind::kParse, std::string("document: '") + key + "' must be an array");
  }
  return value;
}

double sorted_mean(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) {
    out.push_back(static_cast<std::uint8_t>((v >> shift) & 0xff));
  }
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

}  // namespace

Dataset Dataset::build(std::vector<ImageRecord> images, std::vector<Annotation> annotations,
                       std::map<std::int64_t, std::string> categories) {
  Dataset d;
  std::sort(images.begin(), images.end(),
            [](const ImageRecord& a, const ImageRecord& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].width <= 0 || images[i].height <= 0) {
      throw Error(ErrorKind::kValidation,
                  "image " + id_str(images[i].id) + " has non-positive extent");
    }
    if (i > 0 && images[i].id == images[i - 1].id) {
      throw Error(ErrorKind::kIntegrity, "duplicate image " + id_str(images[i].id));
    }
  }
  d.images_ = std::move(images);
  d.categories_ = std::move(categories);

  std::sort(annotations.begin(), annotations.end(),
            [](const Annotation& a, const Annotation& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    Annotation ann = annotations[i];
    if (i > 0 && ann.id == annotations[i - 1].id) {
      throw Error(ErrorKind::kIntegrity, "duplicate annotation " + id_str(ann.id));
    }
    const ImageRecord* img = d.find_image(ann.image_id);
    if (img == nullptr) {
      throw Error(ErrorKind::kIntegrity, "annotation " + id_str(ann.id) +
                                             " references missing image " + id_str(ann.image_id));
    }
    if (!d.has_category(ann.category_id)) {
      throw Error(ErrorKind::kIntegrity, "annotation " + id_str(ann.id) +
                                             " references missing category " +
                                             id_str(ann.category_id));
    }
    BoundingBox& b = ann.bbox;
    if (!(std::isfinite(b.x) && std::isfinite(b.y) && std::isfinite(b.w) && std::isfinite(b.h)) ||
        !b.valid()) {
      ++d.report_.dropped_degenerate;
      continue;
    }
    bool changed = false;
    if (!clamp_interval(b.x, b.w, img->width, changed) ||
        !clamp_interval(b.y, b.h, img->height, changed)) {
      ++d.report_.dropped_outside;
      continue;
    }
    if (changed) d.report_.clamped_ids.push_back(ann.id);
    d.by_image_[ann.image_id].push_back(d.annotations_.size());
    d.annotations_.push_back(ann);
  }
  return d;
}

const ImageRecord* Dataset::find_image(std::int64_t id) const {
  auto it = std::lower_bound(images_.begin(), images_.end(), id,
                             [](const ImageRecord& r, std::int64_t v) { return r.id < v; });
  if (it == images_.end() || it->id != id) return nullptr;
  return &*it;
}

const ImageRecord& Dataset::image(std::int64_t id) const {
  const ImageRecord* r = find_image(id);
  if (r == nullptr) throw Error(ErrorKind::kIntegrity, "unknown image " + id_str(id));
  return *r;
}

std::vector<Annotation> Dataset::annotations_for(std::int64_t image_id) const {
  std::vector<Annotation> out;
  auto it = by_image_.find(image_id);
  if (it == by_image_.end()) return out;
  out.reserve(it->second.size());
  for (std::size_t idx : it->second) out.push_back(annotations_[idx]);
  return out;
}

Dataset parse_coco(std::string_view json_text) {
  const json doc = parse_json(json_text);
  if (!doc.is_object()) throw Error(ErrorKind::kParse, "document: expected an object");

  std::vector<ImageRecord> images;
  for (const json& j : array_field(doc, "images")) {
    const std::string where = "image";
    ImageRecord r;
    r.id = field<std::int64_t>(j, "id", where);
    const std::string at = "image " + id_str(r.id);
    r.width = field<int>(j, "width", at);
    r.height = field<int>(j, "height", at);
    if (auto it = j.find("file_name"); it != j.end() && it->is_string()) {
      r.file_name = it->get<std::string>();
    }
    images.push_back(std::move(r));
  }

  std::map<std::int64_t, std::string> categories;
  for (const json& j : array_field(doc, "categories")) {
    const auto id = field<std::int64_t>(j, "id", "category");
    std::string name = std::to_string(id);
    if (auto it = j.find("name"); it != j.end() && it->is_string()) name = it->get<std::string>();
    if (!categories.emplace(id, std::move(name)).second) {
      throw Error(ErrorKind::kIntegrity, "duplicate category " + id_str(id));
    }
  }

  std::vector<Annotation> annotations;
  std::int64_t position = 0;
  for (const json& j : array_field(doc, "annotations")) {
    ++position;
    Annotation a;
    // Annotation ids are optional in some exports; fall back to position.
    a.id = position;
    if (j.is_object() && j.contains("id")) a.id = field<std::int64_t>(j, "id", "annotation");
    const std::string at = "annotation " + id_str(a.id);
    a.image_id = field<std::int64_t>(j, "image_id", at);
    a.category_id = field<std::int64_t>(j, "category_id", at);
    a.bbox = bbox_field(j, at);
    annotations.push_back(a);
  }
  return Dataset::build(std::move(images), std::move(annotations), std::move(categories));
}

std::string to_coco_json(const Dataset& dataset) {
  json doc;
  json images = json::array();
  for (const ImageRecord& r : dataset.images()) {
    images.push_back(
        {{"id", r.id}, {"file_name", r.file_name}, {"width", r.width}, {"height", r.height}});
  }
  json annotations = json::array();
  for (const Annotation& a : dataset.annotations()) {
    annotations.push_back({{"id", a.id},
                           {"image_id", a.image_id},
                           {"category_id", a.category_id},
                           {"bbox", {a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h}},
                           {"area", a.bbox.area()},
                           {"iscrowd", 0}});
  }
  json categories = json::array();
  for (const auto& [id, name] : dataset.categories()) {
    categories.push_back({{"id", id}, {"name", name}});
  }
  doc["images"] = std::move(images);
  doc["annotations"] = std::move(annotations);
  doc["categories"] = std::move(categories);
  return doc.dump();
}

CategoryStats dataset_stats(std::span<const Annotation> annotations) {
  if (annotations.empty()) throw Error(ErrorKind::kInvalidArgument, "no annotations");
  std::map<std::int64_t, std::pair<std::vector<double>, std::vector<double>>> extents;
  std::vector<double> all_h;
  std::vector<double> all_w;
  for (const Annotation& a : annotations) {
    auto& [hs, ws] = extents[a.category_id];
    hs.push_back(a.bbox.h);
    ws.push_back(a.bbox.w);
    all_h.push_back(a.bbox.h);
    all_w.push_back(a.bbox.w);
  }
  CategoryStats stats;
  for (auto& [category, hw] : extents) {
    const auto count = static_cast<std::int64_t>(hw.first.size());
    stats.per_category[category] =
        ScaleStats{sorted_mean(std::move(hw.first)), sorted_mean(std::move(hw.second)), count};
  }
  const auto total = static_cast<std::int64_t>(all_h.size());
  stats.global = ScaleStats{sorted_mean(std::move(all_h)), sorted_mean(std::move(all_w)), total};
  return stats;
}

CategoryStats dataset_stats(const Dataset& dataset) {
  return dataset_stats(std::span<const Annotation>(dataset.annotations()));
}

std::vector<std::uint8_t> write_density(const DensityRaster& raster) {
  std::vector<std::uint8_t> out;
  out.reserve(kDensityHeaderSize + 4 * raster.pixel_count());
  for (char c : std::string_view("DMAP")) out.push_back(static_cast<std::uint8_t>(c));
  put_u16(out, kDensityFormatVersion);
  put_u16(out, 0);
  put_u32(out, static_cast<std::uint32_t>(raster.height()));
  put_u32(out, static_cast<std::uint32_t>(raster.width()));
  for (float v : raster.values()) {
    if (!(v >= 0.0f) || !std::isfinite(v)) {
      throw Error(ErrorKind::kValidation, "density values must be finite and non-negative");
    }
    put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

DensityRaster read_density(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kDensityHeaderSize) {
    throw Error(ErrorKind::kFormat, "truncated density header");
  }
  if (bytes[0] != 'D' || bytes[1] != 'M' || bytes[2] != 'A' || bytes[3] != 'P') {
    throw Error(ErrorKind::kFormat, "bad magic, expected DMAP");
  }
  const std::uint16_t version = get_u16(bytes, 4);
  if (version != kDensityFormatVersion) {
    throw Error(ErrorKind::kFormat, "unsupported DMAP version " + std::to_string(version));
  }
  const std::uint32_t height = get_u32(bytes, 8);
  const std::uint32_t width = get_u32(bytes, 12);
  constexpr auto kMaxDim = static_cast<std::uint32_t>(std::numeric_limits<int>::max());
  if (height > kMaxDim || width > kMaxDim) {
    throw Error(ErrorKind::kFormat, "raster extent too large");
  }
  const std::uint64_t count = static_cast<std::uint64_t>(height) * width;
  const std::uint64_t expected = kDensityHeaderSize + 4 * count;
  if (bytes.size() != expected) {
    throw Error(ErrorKind::kFormat, "payload is " + std::to_string(bytes.size()) +
                                        " bytes, expected " + std::to_string(expected));
  }
  std::vector<float> values(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const float v = std::bit_cast<float>(get_u32(bytes, kDensityHeaderSize + 4 * i));
    if (!(v >= 0.0f) || !std::isfinite(v)) {
      throw Error(ErrorKind::kFormat, "negative or non-finite density value at index " +
                                          std::to_string(i));
    }
    values[i] = v;
  }
  return DensityRaster(static_cast<int>(height), static_cast<int>(width), std::move(values));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorKind::kIo, "short write to " + path.string());
}

DensityRaster read_density_file(const std::filesystem::path& path) {
  const std::string raw = read_text_file(path);
  return read_density(std::span(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
}

void write_density_file(const std::filesystem::path& path, const DensityRaster& raster) {
  const auto bytes = write_density(raster);
  write_text_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string write_coco_detections(std::span<const Detection> detections) {
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  for (const Detection& d : detections) {
    if (!(d.score >= 0.0 && d.score <= 1.0)) {
      throw Error(ErrorKind::kValidation, "detection score outside [0, 1] in image " +
                                              id_str(d.image_id));
    }
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (detections[a].image_id != detections[b].image_id) {
      return detections[a].image_id < detections[b].image_id;
    }
    return detections[a].score > detections[b].score;
  });
  json out = json::array();
  for (std::size_t i : order) {
    const Detection& d = detections[i];
    out.push_back({{"image_id", d.image_id},
                   {"category_id", d.category_id},
                   {"bbox", {d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h}},
                   {"score", d.score}});
  }
  return out.dump();
}

std::vector<Detection> parse_coco_detections(std::string_view json_text) {
  const json doc = parse_json(json_text);
  if (!doc.is_array()) throw Error(ErrorKind::kParse, "detections: expected a JSON array");
  std::vector<Detection> out;
  out.reserve(doc.size());
  std::size_t index = 0;
  for (const json& j : doc) {
    const std::string at = "detection " + std::to_string(index++);
    Detection d;
    d.image_id = field<std::int64_t>(j, "image_id", at);
    d.category_id = field<std::int64_t>(j, "category_id", at);
    d.bbox = bbox_field(j, at);
    d.score = field<double>(j, "score", at);
    if (!(d.score >= 0.0 && d.score <= 1.0)) {
      throw Error(ErrorKind::kValidation, at + ": score outside [0, 1]");
    }
    out.push_back(d);
  }
  return out;
}

}  // namespace dmcrop
