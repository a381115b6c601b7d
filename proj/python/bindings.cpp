#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "dmcrop/dataset_io.hpp"
#include "dmcrop/density.hpp"
#include "dmcrop/error.hpp"
#include "dmcrop/evaluate.hpp"
#include "dmcrop/fusion.hpp"
#include "dmcrop/mask_crop.hpp"
#include "dmcrop/oracle.hpp"
#include "dmcrop/pipeline.hpp"
#include "dmcrop/remap.hpp"

namespace py = pybind11;
using namespace dmcrop;

namespace {

template <typename T>
py::array_t<T> to_numpy(const Raster<T>& r) {
  py::array_t<T> out({r.height(), r.width()});
  if (r.pixel_count() > 0) std::memcpy(out.mutable_data(), r.values().data(), r.pixel_count() * sizeof(T));
  return out;
}

template <typename T>
Raster<T> from_numpy(const py::array_t<T, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
  const auto h = static_cast<int>(a.shape(0));
  const auto w = static_cast<int>(a.shape(1));
  std::vector<T> values(a.data(), a.data() + a.size());
  return Raster<T>(h, w, std::move(values));
}

KernelSpec kernel_spec(const std::string& kernel, double sigma, double beta, int k,
                       double trunc_sigmas, const std::optional<CategoryStats>& stats) {
  KernelSpec spec;
  spec.truncation_radius_sigmas = trunc_sigmas;
  if (kernel == "fixed") {
    spec.mode = FixedKernel{sigma};
  } else if (kernel == "adaptive") {
    spec.mode = AdaptiveKernel{beta, k, sigma};
  } else if (kernel == "classwise") {
    if (!stats) throw py::value_error("the classwise kernel needs scale statistics");
    spec.mode = ClassWiseKernel{*stats};
  } else {
    throw py::value_error("unknown kernel '" + kernel + "'");
  }
  return spec;
}

py::dict eval_dict(const EvalResult& r) {
  const auto value = [](const std::optional<double>& v) -> py::object {
    return v ? py::cast(*v) : py::none();
  };
  py::dict per_category;
  for (const auto& [id, c] : r.per_category) {
    py::dict d;
    d["AP"] = value(c.ap);
    d["AP50"] = value(c.ap50);
    d["AP75"] = value(c.ap75);
    per_category[py::int_(id)] = d;
  }
  py::dict out;
  out["AP"] = value(r.ap);
  out["AP50"] = value(r.ap50);
  out["AP75"] = value(r.ap75);
  out["APs"] = value(r.ap_small);
  out["APm"] = value(r.ap_medium);
  out["APl"] = value(r.ap_large);
  out["per_category"] = per_category;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Density-map guided cropping for aerial object detection.";

  // Owned by the module for the life of the interpreter.
  static PyObject* error_type = PyErr_NewException("dmcrop._core.Error", PyExc_RuntimeError, nullptr);
  m.attr("Error") = py::handle(error_type);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const std::string msg = std::string(to_string(e.kind())) + ": " + e.what();
      PyErr_SetString(error_type, msg.c_str());
    }
  });

  py::class_<BoundingBox>(m, "BoundingBox")
      .def(py::init<double, double, double, double>(), py::arg("x"), py::arg("y"), py::arg("w"),
           py::arg("h"))
      .def_readwrite("x", &BoundingBox::x)
      .def_readwrite("y", &BoundingBox::y)
      .def_readwrite("w", &BoundingBox::w)
      .def_readwrite("h", &BoundingBox::h)
      .def("area", &BoundingBox::area)
      .def("contains", &BoundingBox::contains)
      .def("as_tuple", [](const BoundingBox& b) { return py::make_tuple(b.x, b.y, b.w, b.h); })
      .def(py::self == py::self)
      .def("__repr__", [](const BoundingBox& b) {
        return "BoundingBox(" + std::to_string(b.x) + ", " + std::to_string(b.y) + ", " +
               std::to_string(b.w) + ", " + std::to_string(b.h) + ")";
      });

  m.def("iou", &iou);
  m.def("area_class", [](const BoundingBox& b) { return std::string(to_string(area_class(b))); });

  py::class_<ImageRecord>(m, "ImageRecord")
      .def_readonly("id", &ImageRecord::id)
      .def_readonly("file_name", &ImageRecord::file_name)
      .def_readonly("width", &ImageRecord::width)
      .def_readonly("height", &ImageRecord::height);

  py::class_<Annotation>(m, "Annotation")
      .def_readonly("id", &Annotation::id)
      .def_readonly("image_id", &Annotation::image_id)
      .def_readonly("category_id", &Annotation::category_id)
      .def_readonly("bbox", &Annotation::bbox);

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("images", &Dataset::images)
      .def_property_readonly("annotations", &Dataset::annotations)
      .def_property_readonly("categories", &Dataset::categories)
      .def("annotations_for", &Dataset::annotations_for, py::arg("image_id"))
      .def("to_json", [](const Dataset& d) { return to_coco_json(d); });

  m.def("parse_coco", [](const std::string& text) { return parse_coco(text); }, py::arg("text"));
  m.def("load_coco", [](const std::filesystem::path& p) { return parse_coco(read_text_file(p)); },
        py::arg("path"));

  py::class_<ScaleStats>(m, "ScaleStats")
      .def_readonly("mean_h", &ScaleStats::mean_h)
      .def_readonly("mean_w", &ScaleStats::mean_w)
      .def_readonly("count", &ScaleStats::count);
  py::class_<CategoryStats>(m, "CategoryStats")
      .def_readonly("per_category", &CategoryStats::per_category)
      .def_readonly("global_", &CategoryStats::global);
  m.def("dataset_stats", py::overload_cast<const Dataset&>(&dataset_stats), py::arg("dataset"));
  m.def("sigma_classwise", &sigma_classwise, py::arg("stats"), py::arg("category_id"));

  m.def(
      "render_density",
      [](const Dataset& d, std::int64_t image_id, const std::string& kernel, double sigma,
         double beta, int k, double trunc_sigmas, std::optional<CategoryStats> stats) {
        if (kernel == "classwise" && !stats) stats = dataset_stats(d);
        const auto anns = d.annotations_for(image_id);
        return to_numpy(render_density(d.image(image_id).size(), anns,
                                       kernel_spec(kernel, sigma, beta, k, trunc_sigmas, stats)));
      },
      py::arg("dataset"), py::arg("image_id"), py::arg("kernel") = "classwise",
      py::arg("sigma") = kDefaultFixedSigma, py::arg("beta") = kDefaultAdaptiveBeta,
      py::arg("k") = kDefaultAdaptiveNeighbors, py::arg("trunc_sigmas") = kDefaultTruncationSigmas,
      py::arg("stats") = py::none(),
      "Ground-truth density map of one image as a float32 (H, W) array.");

  m.def(
      "upsample_bicubic",
      [](const py::array_t<float, py::array::c_style | py::array::forcecast>& a, int height,
         int width) { return to_numpy(upsample_bicubic(from_numpy<float>(a), {height, width})); },
      py::arg("density"), py::arg("height"), py::arg("width"));

  m.def(
      "density_mask",
      [](const py::array_t<float, py::array::c_style | py::array::forcecast>& a, int window_h,
         int window_w, double threshold) {
        return to_numpy(density_mask(from_numpy<float>(a), {window_h, window_w, threshold}));
      },
      py::arg("density"), py::arg("window_h"), py::arg("window_w"),
      py::arg("threshold") = kVisionDroneThreshold);

  m.def(
      "connected_components",
      [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a) {
        const Labeling l = connected_components(from_numpy<std::uint8_t>(a));
        return py::make_tuple(to_numpy(l.labels), l.count);
      },
      py::arg("mask"));

  py::class_<CropRegion>(m, "CropRegion")
      .def_readonly("image_id", &CropRegion::image_id)
      .def_readonly("crop_index", &CropRegion::crop_index)
      .def_readonly("rect", &CropRegion::rect)
      .def_readonly("component_size", &CropRegion::component_size)
      .def_readonly("source_threshold", &CropRegion::source_threshold);

  m.def(
      "crops_from_mask",
      [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a,
         int min_size, std::int64_t image_id, std::optional<double> threshold) {
        return crops_from_mask(from_numpy<std::uint8_t>(a), min_size, image_id, threshold);
      },
      py::arg("mask"), py::arg("min_size") = kDefaultMinCropSize, py::arg("image_id") = 0,
      py::arg("threshold") = py::none());
  m.def(
      "uniform_grid",
      [](int height, int width, int rows, int cols, int overlap, std::int64_t image_id) {
        return uniform_grid({height, width}, rows, cols, overlap, image_id);
      },
      py::arg("height"), py::arg("width"), py::arg("rows") = 3, py::arg("cols") = 4,
      py::arg("overlap") = 0, py::arg("image_id") = 0);
  m.def("write_crop_manifest", &write_crop_manifest, py::arg("crops"));
  m.def("parse_crop_manifest", &parse_crop_manifest, py::arg("text"));

  m.def(
      "read_density",
      [](const std::filesystem::path& p) { return to_numpy(read_density_file(p)); },
      py::arg("path"));
  m.def(
      "write_density",
      [](const std::filesystem::path& p,
         const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
        write_density_file(p, from_numpy<float>(a));
      },
      py::arg("path"), py::arg("density"));

  py::class_<Detection>(m, "Detection")
      .def(py::init([](std::int64_t image_id, std::int64_t category_id, const BoundingBox& bbox,
                       double score) { return Detection{image_id, category_id, bbox, score, {}}; }),
           py::arg("image_id"), py::arg("category_id"), py::arg("bbox"), py::arg("score"))
      .def_readwrite("image_id", &Detection::image_id)
      .def_readwrite("category_id", &Detection::category_id)
      .def_readwrite("bbox", &Detection::bbox)
      .def_readwrite("score", &Detection::score)
      .def_readonly("crop", &Detection::crop);

  m.def("nms", &nms, py::arg("detections"), py::arg("iou_threshold") = kFusionNmsIou);
  m.def(
      "fuse",
      [](const std::vector<Detection>& global, const std::vector<Detection>& crop, double nms_iou,
         int max_dets) { return fuse(global, crop, {nms_iou, max_dets}); },
      py::arg("global_detections"), py::arg("crop_detections"), py::arg("nms_iou") = kFusionNmsIou,
      py::arg("max_dets") = kMaxDetsPerImage);
  m.def(
      "backproject",
      [](const CropRegion& crop, const std::vector<Detection>& dets, int height, int width,
         double scale) { return backproject_detections(crop, dets, {height, width}, {scale, false}).detections; },
      py::arg("crop"), py::arg("detections"), py::arg("height"), py::arg("width"),
      py::arg("scale") = 1.0);
  m.def(
      "oracle_detect",
      [](const Dataset& d, std::int64_t image_id) { return oracle_detect_image(d, image_id); },
      py::arg("dataset"), py::arg("image_id"));

  m.def(
      "evaluate",
      [](const std::vector<Detection>& dets, const Dataset& gt, int max_dets) {
        return eval_dict(evaluate(dets, gt, {max_dets}));
      },
      py::arg("detections"), py::arg("dataset"), py::arg("max_dets") = EvalParams{}.max_dets_per_image);

  m.def(
      "run_oracle_pipeline",
      [](const Dataset& d, const std::string& profile, std::optional<double> threshold,
         std::optional<std::pair<int, int>> grid, bool use_global, int jobs) {
        const ProfileDefaults preset = profile_defaults(parse_profile(profile));
        PipelineConfig config;
        if (!threshold && !preset.threshold) {
          throw py::value_error("a threshold is required with the custom profile");
        }
        config.threshold = threshold ? *threshold : *preset.threshold;
        config.min_crop = preset.min_crop;
        config.fusion = {preset.nms_iou, preset.max_dets};
        if (grid) config.grid = GridSpec{grid->first, grid->second, 0};
        config.use_global = use_global;
        config.jobs = jobs;
        const CategoryStats stats = dataset_stats(d);
        config.kernel = KernelSpec{ClassWiseKernel{stats}};
        PipelineResult r;
        {
          py::gil_scoped_release release;
          r = run_oracle_pipeline(d, stats, config);
        }
        py::dict out = eval_dict(r.eval);
        out["detections"] = r.detections;
        std::vector<CropRegion> crops;
        for (const auto& o : r.images) crops.insert(crops.end(), o.crops.begin(), o.crops.end());
        out["crops"] = crops;
        return out;
      },
      py::arg("dataset"), py::arg("profile") = "visiondrone", py::arg("threshold") = py::none(),
      py::arg("grid") = py::none(), py::arg("use_global") = true, py::arg("jobs") = 1,
      "End-to-end run with ground truth standing in for the detector.");
}
