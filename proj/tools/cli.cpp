#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dmcrop/dataset_io.hpp"
#include "dmcrop/density.hpp"
#include "dmcrop/error.hpp"
#include "dmcrop/evaluate.hpp"
#include "dmcrop/fusion.hpp"
#include "dmcrop/mask_crop.hpp"
#include "dmcrop/oracle.hpp"
#include "dmcrop/overlay.hpp"
#include "dmcrop/pipeline.hpp"
#include "dmcrop/remap.hpp"
#include "json.hpp"

namespace dmcrop::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kProfileEnv = "DMNET_PROFILE";

// Raised for flag combinations CLI11 cannot express; exits with kExitUsage.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct KernelOptions {
  std::string kernel = "classwise";
  double sigma = kDefaultFixedSigma;
  double beta = kDefaultAdaptiveBeta;
  int knn = kDefaultAdaptiveNeighbors;
  double trunc_sigmas = kDefaultTruncationSigmas;

  void attach(CLI::App* cmd) {
    cmd->add_option("--kernel", kernel, "Density kernel")
        ->check(CLI::IsMember({"fixed", "adaptive", "classwise"}))
        ->capture_default_str();
    cmd->add_option("--sigma", sigma, "Fixed kernel sigma (also the adaptive fallback)")
        ->capture_default_str();
    cmd->add_option("--beta", beta, "Adaptive kernel beta")->capture_default_str();
    cmd->add_option("--knn", knn, "Adaptive kernel neighbour count")->capture_default_str();
    cmd->add_option("--trunc-sigmas", trunc_sigmas, "Kernel support radius in sigmas")
        ->capture_default_str();
  }

  KernelSpec spec(const CategoryStats& stats) const {
    KernelSpec s;
    s.truncation_radius_sigmas = trunc_sigmas;
    if (kernel == "fixed") {
      s.mode = FixedKernel{sigma};
    } else if (kernel == "adaptive") {
      s.mode = AdaptiveKernel{beta, knn, sigma};
    } else {
      s.mode = ClassWiseKernel{stats};
    }
    return s;
  }
};

// Threshold, crop filter, window and fusion settings with profile presets.
struct CropOptions {
  std::string profile;
  std::optional<double> threshold;
  std::optional<int> min_crop;
  std::vector<int> window;

  void attach(CLI::App* cmd, bool with_crop_filter = true) {
    cmd->add_option("--profile", profile,
                    "Dataset profile: visiondrone, uavdt or custom (default from DMNET_PROFILE)")
        ->check(CLI::IsMember({"visiondrone", "uavdt", "custom"}));
    cmd->add_option("--threshold", threshold, "Density threshold a window sum must exceed");
    cmd->add_option("--window", window, "Sliding window H W (default: mean object size)")
        ->expected(2);
    if (with_crop_filter) {
      cmd->add_option("--min-crop", min_crop, "Drop crops narrower or shorter than this");
    }
  }

  Profile resolved_profile() const {
    if (!profile.empty()) return parse_profile(profile);
    if (const char* env = std::getenv(kProfileEnv); env != nullptr && *env != '\0') {
      try {
        return parse_profile(env);
      } catch (const Error&) {
        throw UsageError(std::string(kProfileEnv) + " names an unknown profile '" + env + "'");
      }
    }
    return Profile::kVisionDrone;
  }

  double resolved_threshold() const {
    if (threshold) return *threshold;
    const auto preset = profile_defaults(resolved_profile()).threshold;
    if (!preset) throw UsageError("--threshold is required with the custom profile");
    return *preset;
  }

  int resolved_min_crop() const {
    return min_crop.value_or(profile_defaults(resolved_profile()).min_crop);
  }

  std::optional<WindowSize> resolved_window() const {
    if (window.empty()) return std::nullopt;
    return WindowSize{window[0], window[1]};
  }
};

struct FusionOptions {
  std::optional<double> nms;
  std::string nms_preset;
  std::optional<int> max_dets;

  void attach(CLI::App* cmd) {
    cmd->add_option("--nms", nms, "Fusion NMS IoU threshold (default 0.7)");
    cmd->add_option("--nms-preset", nms_preset,
                    "Named NMS setting: experiment (0.7) or clusdet (0.5)")
        ->check(CLI::IsMember({"experiment", "clusdet"}));
    cmd->add_option("--max-dets", max_dets, "Detections kept per image after fusion (default 500)");
  }

  FusionParams params(Profile profile) const {
    const ProfileDefaults d = profile_defaults(profile);
    FusionParams p{d.nms_iou, d.max_dets};
    if (nms_preset == "clusdet") p.nms_iou = kClusDetNmsIou;
    if (nms_preset == "experiment") p.nms_iou = kFusionNmsIou;
    if (nms) p.nms_iou = *nms;
    if (max_dets) p.max_dets_per_image = *max_dets;
    return p;
  }
};

struct MissOptions {
  double small = 0.0;
  double medium = 0.0;
  double large = 0.0;
  std::uint64_t seed = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--miss-small", small, "Oracle miss probability for small objects");
    cmd->add_option("--miss-medium", medium, "Oracle miss probability for medium objects");
    cmd->add_option("--miss-large", large, "Oracle miss probability for large objects");
    cmd->add_option("--seed", seed, "Seed for the oracle miss policy")->capture_default_str();
  }

  MissPolicy policy() const { return MissPolicy{{small, medium, large}, seed}; }
};

Dataset load_dataset(const std::string& path) { return parse_coco(read_text_file(path)); }

CategoryStats stats_for(const Dataset& ann, const std::string& stats_ann) {
  if (stats_ann.empty()) return dataset_stats(ann);
  return dataset_stats(load_dataset(stats_ann));
}

ordered_json scale_json(const ScaleStats& s) {
  return {{"mean_h", s.mean_h}, {"mean_w", s.mean_w}, {"count", s.count}};
}

ordered_json stats_json(const CategoryStats& stats, const Dataset& d) {
  ordered_json cats = ordered_json::object();
  for (const auto& [id, s] : stats.per_category) {
    ordered_json j = scale_json(s);
    auto it = d.categories().find(id);
    j["name"] = it == d.categories().end() ? std::to_string(id) : it->second;
    j["sigma"] = sigma_classwise(stats, id);
    cats[std::to_string(id)] = std::move(j);
  }
  ordered_json doc;
  doc["global"] = scale_json(stats.global);
  doc["categories"] = std::move(cats);
  return doc;
}

void emit(std::ostream& out, const std::string& text, const std::string& path) {
  if (path.empty()) {
    out << text << '\n';
  } else {
    write_text_file(path, text + "\n");
  }
}

std::vector<CropRegion> crops_of_image(const std::vector<CropRegion>& all, std::int64_t image_id) {
  std::vector<CropRegion> out;
  for (const CropRegion& c : all) {
    if (c.image_id == image_id) out.push_back(c);
  }
  return out;
}

void print_error(std::ostream& err, std::string_view kind, std::string_view message) {
  err << ordered_json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Density-map guided cropping for aerial object detection", "dmcrop"};
  app.require_subcommand(1);
  int jobs = 1;

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "Per-category and global mean object size");
  std::string stats_ann, stats_out;
  stats_cmd->add_option("--ann", stats_ann, "COCO annotation file")->required();
  stats_cmd->add_option("--out", stats_out, "Write JSON here instead of stdout");

  // gt-density
  auto* gtd_cmd = app.add_subcommand("gt-density", "Render ground-truth density maps (DMAP)");
  std::string gtd_ann, gtd_stats_ann, gtd_out;
  std::vector<std::int64_t> gtd_images;
  KernelOptions gtd_kernel;
  gtd_cmd->add_option("--ann", gtd_ann, "COCO annotation file")->required();
  gtd_cmd->add_option("--stats-ann", gtd_stats_ann, "Annotations for class-wise statistics");
  gtd_cmd->add_option("--out-dir", gtd_out, "Directory for <image_id>.dmap files")->required();
  gtd_cmd->add_option("--image-id", gtd_images, "Only these images");
  gtd_cmd->add_option("--jobs", jobs, "Worker threads");
  gtd_kernel.attach(gtd_cmd);

  // density-error
  auto* derr_cmd = app.add_subcommand("density-error", "Compare a predicted and a reference map");
  std::string derr_pred, derr_gt;
  int derr_n = 1;
  derr_cmd->add_option("--pred", derr_pred, "Predicted DMAP")->required();
  derr_cmd->add_option("--gt", derr_gt, "Reference DMAP")->required();
  derr_cmd->add_option("--n-images", derr_n, "N in the 1/(2N) normalisation")
      ->capture_default_str();

  // mask
  auto* mask_cmd = app.add_subcommand("mask", "Density mask and crop manifest for one map");
  std::string mask_density, mask_ann, mask_out_mask, mask_out_manifest;
  std::int64_t mask_image_id = 0;
  std::vector<int> mask_upsample_to;
  int mask_upsample = 1;
  CropOptions mask_opts;
  mask_cmd->add_option("--density", mask_density, "Input DMAP")->required();
  mask_cmd->add_option("--ann", mask_ann, "Annotations for the default window size");
  mask_cmd->add_option("--image-id", mask_image_id, "Image id recorded in the manifest");
  mask_cmd->add_option("--upsample", mask_upsample, "Bicubic upsampling factor before masking");
  mask_cmd->add_option("--upsample-to", mask_upsample_to, "Bicubic upsampling target H W")
      ->expected(2);
  mask_cmd->add_option("--out-mask", mask_out_mask, "Mask output (default <density>.mask.dmap)");
  mask_cmd->add_option("--out-manifest", mask_out_manifest,
                       "Manifest output (default <density>.crops.jsonl)");
  mask_opts.attach(mask_cmd);

  // crop
  auto* crop_cmd = app.add_subcommand("crop", "Crop manifest for every image of a dataset");
  std::string crop_ann, crop_stats_ann, crop_density_dir, crop_out;
  std::vector<int> crop_grid;
  int crop_overlap = 0;
  CropOptions crop_opts;
  KernelOptions crop_kernel;
  crop_cmd->add_option("--ann", crop_ann, "COCO annotation file")->required();
  crop_cmd->add_option("--stats-ann", crop_stats_ann, "Annotations for window and class sizes");
  crop_cmd->add_option("--density-dir", crop_density_dir,
                       "Predicted maps <image_id>.dmap (default: render from annotations)");
  crop_cmd->add_option("--grid", crop_grid, "Uniform R C grid instead of density crops")
      ->expected(2);
  crop_cmd->add_option("--grid-overlap", crop_overlap, "Grid overlap in pixels");
  crop_cmd->add_option("--out", crop_out, "Manifest output (JSON lines)")->required();
  crop_cmd->add_option("--jobs", jobs, "Worker threads");
  crop_opts.attach(crop_cmd);
  crop_kernel.attach(crop_cmd);

  // remap
  auto* remap_cmd = app.add_subcommand("remap", "Move boxes between image and crop coordinates");
  std::string remap_to, remap_ann, remap_crops, remap_dets, remap_out;
  double remap_min_vis = kDefaultMinVisibility;
  double remap_scale = 1.0;
  bool remap_drop_border = false;
  remap_cmd->add_option("--to", remap_to, "crop: project annotations; global: map detections back")
      ->check(CLI::IsMember({"crop", "global"}))
      ->required();
  remap_cmd->add_option("--ann", remap_ann, "COCO annotation file of the full images")->required();
  remap_cmd->add_option("--crops", remap_crops, "Crop manifest")->required();
  remap_cmd->add_option("--dets", remap_dets, "Crop detections (image_id = manifest line)");
  remap_cmd->add_option("--min-visibility", remap_min_vis, "Keep clipped boxes at least this visible")
      ->capture_default_str();
  remap_cmd->add_option("--scale", remap_scale, "Crop pixels per detector-input pixel")
      ->capture_default_str();
  remap_cmd->add_flag("--drop-border", remap_drop_border, "Drop detections touching a crop edge");
  remap_cmd->add_option("--out", remap_out, "Output COCO file")->required();

  // detect
  auto* detect_cmd = app.add_subcommand("detect", "Run the oracle detector");
  std::string detect_ann, detect_crops, detect_out;
  bool detect_oracle = false;
  MissOptions detect_miss;
  detect_cmd->add_flag("--oracle", detect_oracle, "Use ground truth as the detector (required)");
  detect_cmd->add_option("--ann", detect_ann, "COCO annotation file")->required();
  detect_cmd->add_option("--crops", detect_crops,
                         "Detect inside these crops; output image_id = manifest line");
  detect_cmd->add_option("--out", detect_out, "COCO results output")->required();
  detect_miss.attach(detect_cmd);

  // fuse
  auto* fuse_cmd = app.add_subcommand("fuse", "Fuse global and crop detections with NMS");
  std::string fuse_global, fuse_crop, fuse_out, fuse_profile;
  FusionOptions fuse_opts;
  fuse_cmd->add_option("--global", fuse_global, "Whole-image detections")->required();
  fuse_cmd->add_option("--crop-dets", fuse_crop, "Crop detections in image coordinates");
  fuse_cmd->add_option("--out", fuse_out, "Fused COCO results output")->required();
  fuse_cmd->add_option("--profile", fuse_profile, "Dataset profile")
      ->check(CLI::IsMember({"visiondrone", "uavdt", "custom"}));
  fuse_opts.attach(fuse_cmd);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "COCO-style AP of detections");
  std::string eval_ann, eval_dets, eval_out;
  int eval_max_dets = EvalParams{}.max_dets_per_image;
  eval_cmd->add_option("--ann", eval_ann, "Ground-truth COCO file")->required();
  eval_cmd->add_option("--dets", eval_dets, "COCO results file")->required();
  eval_cmd->add_option("--max-dets", eval_max_dets, "Detections per image considered")
      ->capture_default_str();
  eval_cmd->add_option("--out", eval_out, "Write the report here instead of stdout");

  // render
  auto* render_cmd = app.add_subcommand("render", "Overlay density, mask, crops and boxes as PNG");
  std::string render_ann, render_image, render_density_path, render_mask, render_crops, render_out;
  std::optional<std::int64_t> render_image_id;
  std::vector<int> render_size;
  bool render_no_gt = false;
  render_cmd->add_option("--ann", render_ann, "COCO annotation file (boxes and image size)");
  render_cmd->add_option("--image-id", render_image_id, "Image to draw");
  render_cmd->add_option("--image", render_image, "PNG canvas (default: black canvas)");
  render_cmd->add_option("--size", render_size, "Blank canvas size H W")->expected(2);
  render_cmd->add_option("--density", render_density_path, "Density DMAP layer");
  render_cmd->add_option("--mask", render_mask, "Mask DMAP layer");
  render_cmd->add_option("--crops", render_crops, "Crop manifest layer");
  render_cmd->add_flag("--no-gt", render_no_gt, "Do not draw ground-truth boxes");
  render_cmd->add_option("--out", render_out, "PNG output")->required();

  // pipeline
  auto* pipe_cmd = app.add_subcommand("pipeline", "End-to-end run with the oracle detector");
  std::string pipe_ann, pipe_stats_ann, pipe_density_dir, pipe_out_dir;
  bool pipe_oracle = false;
  bool pipe_no_global = false;
  std::vector<int> pipe_grid;
  int pipe_overlap = 0;
  CropOptions pipe_opts;
  KernelOptions pipe_kernel;
  FusionOptions pipe_fusion;
  MissOptions pipe_miss;
  int pipe_max_eval = EvalParams{}.max_dets_per_image;
  pipe_cmd->add_flag("--oracle", pipe_oracle, "Use ground truth as the detector (required)");
  pipe_cmd->add_option("--ann", pipe_ann, "COCO annotation file")->required();
  pipe_cmd->add_option("--stats-ann", pipe_stats_ann, "Annotations for window and class sizes");
  pipe_cmd->add_option("--density-dir", pipe_density_dir, "Predicted maps <image_id>.dmap");
  pipe_cmd->add_option("--grid", pipe_grid, "Uniform R C grid instead of density crops")
      ->expected(2);
  pipe_cmd->add_option("--grid-overlap", pipe_overlap, "Grid overlap in pixels");
  pipe_cmd->add_flag("--no-global", pipe_no_global, "Do not fuse whole-image detections");
  pipe_cmd->add_option("--eval-max-dets", pipe_max_eval, "Detections per image in evaluation")
      ->capture_default_str();
  pipe_cmd->add_option("--out-dir", pipe_out_dir, "Also write intermediate artifacts here");
  pipe_cmd->add_option("--jobs", jobs, "Worker threads");
  pipe_opts.attach(pipe_cmd);
  pipe_kernel.attach(pipe_cmd);
  pipe_fusion.attach(pipe_cmd);
  pipe_miss.attach(pipe_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    print_error(err, "usage", e.what());
    return kExitUsage;
  }

  try {
    if (*stats_cmd) {
      const Dataset d = load_dataset(stats_ann);
      emit(out, stats_json(dataset_stats(d), d).dump(), stats_out);
    } else if (*gtd_cmd) {
      const Dataset d = load_dataset(gtd_ann);
      std::optional<CategoryStats> stats;
      if (gtd_kernel.kernel == "classwise") stats = stats_for(d, gtd_stats_ann);
      const KernelSpec spec = gtd_kernel.spec(stats.value_or(CategoryStats{}));
      std::vector<const ImageRecord*> todo;
      for (const ImageRecord& img : d.images()) {
        if (gtd_images.empty() ||
            std::find(gtd_images.begin(), gtd_images.end(), img.id) != gtd_images.end()) {
          todo.push_back(&img);
        }
      }
      std::vector<double> sums(todo.size());
      parallel_for(todo.size(), jobs, [&](std::size_t i) {
        const ImageRecord& img = *todo[i];
        const auto anns = d.annotations_for(img.id);
        const DensityRaster r = dmcrop::render_density(img.size(), anns, spec);
        double s = 0.0;
        for (float v : r.values()) s += v;
        sums[i] = s;
        write_density_file(fs::path(gtd_out) / (std::to_string(img.id) + ".dmap"), r);
      });
      for (std::size_t i = 0; i < todo.size(); ++i) {
        out << ordered_json{{"image_id", todo[i]->id},
                            {"file", (fs::path(gtd_out) / (std::to_string(todo[i]->id) + ".dmap"))
                                         .string()},
                            {"objects", d.annotations_for(todo[i]->id).size()},
                            {"sum", sums[i]}}
                   .dump()
            << '\n';
      }
    } else if (*derr_cmd) {
      const DensityError e =
          density_error(read_density_file(derr_pred), read_density_file(derr_gt), derr_n);
      out << ordered_json{{"loss", e.loss},
                          {"loss_per_pixel", e.loss_per_pixel},
                          {"mae", e.mae},
                          {"count_error", e.count_error}}
                 .dump()
          << '\n';
    } else if (*mask_cmd) {
      const double threshold = mask_opts.resolved_threshold();
      DensityRaster density = read_density_file(mask_density);
      if (!mask_upsample_to.empty()) {
        density = upsample_bicubic(density, ImageSize{mask_upsample_to[0], mask_upsample_to[1]});
      } else if (mask_upsample != 1) {
        density = upsample_bicubic(density, mask_upsample);
      }
      MaskParams params;
      if (auto w = mask_opts.resolved_window()) {
        params = MaskParams{w->height, w->width, threshold};
      } else if (!mask_ann.empty()) {
        const CategoryStats s = dataset_stats(load_dataset(mask_ann));
        params = mask_params_from_mean(s.global.mean_h, s.global.mean_w, threshold);
      } else {
        throw UsageError("mask needs --window or --ann to size the sliding window");
      }
      const DensityMask mask = density_mask(density, params);
      const auto crops =
          crops_from_mask(mask, mask_opts.resolved_min_crop(), mask_image_id, threshold);
      const fs::path in(mask_density);
      const fs::path stem = in.parent_path() / in.stem();
      const std::string mask_path =
          mask_out_mask.empty() ? stem.string() + ".mask.dmap" : mask_out_mask;
      const std::string manifest_path =
          mask_out_manifest.empty() ? stem.string() + ".crops.jsonl" : mask_out_manifest;
      DensityRaster mask_raster(mask.height(), mask.width());
      for (std::size_t i = 0; i < mask.pixel_count(); ++i) {
        mask_raster.values()[i] = mask.values()[i] ? 1.0f : 0.0f;
      }
      write_density_file(mask_path, mask_raster);
      write_text_file(manifest_path, write_crop_manifest(crops));
      std::int64_t on = 0;
      for (auto v : mask.values()) on += v;
      out << ordered_json{{"mask", mask_path},
                          {"manifest", manifest_path},
                          {"window", {params.window_h, params.window_w}},
                          {"threshold", threshold},
                          {"mask_pixels", on},
                          {"crops", crops.size()}}
                 .dump()
          << '\n';
    } else if (*crop_cmd) {
      const Dataset d = load_dataset(crop_ann);
      PipelineConfig config;
      config.threshold = crop_opts.resolved_threshold();
      config.min_crop = crop_opts.resolved_min_crop();
      config.window = crop_opts.resolved_window();
      if (!crop_grid.empty()) config.grid = GridSpec{crop_grid[0], crop_grid[1], crop_overlap};
      if (!crop_density_dir.empty()) config.density_dir = crop_density_dir;
      const bool needs_stats = !config.grid && (!config.window || crop_kernel.kernel == "classwise");
      const CategoryStats stats = needs_stats ? stats_for(d, crop_stats_ann) : CategoryStats{};
      config.kernel = crop_kernel.spec(stats);
      std::vector<std::vector<CropRegion>> per_image(d.images().size());
      parallel_for(d.images().size(), jobs, [&](std::size_t i) {
        per_image[i] = image_crops(d, d.images()[i], stats, config);
      });
      std::vector<CropRegion> all;
      for (const auto& crops : per_image) all.insert(all.end(), crops.begin(), crops.end());
      write_text_file(crop_out, write_crop_manifest(all));
      out << ordered_json{{"manifest", crop_out}, {"images", d.images().size()},
                          {"crops", all.size()}}
                 .dump()
          << '\n';
    } else if (*remap_cmd) {
      const Dataset d = load_dataset(remap_ann);
      const auto crops = parse_crop_manifest(read_text_file(remap_crops));
      if (remap_to == "crop") {
        std::vector<CropAnnotationSet> sets;
        sets.reserve(crops.size());
        for (const CropRegion& c : crops) {
          const auto anns = d.annotations_for(c.image_id);
          sets.push_back(project_annotations(c, anns, remap_min_vis));
        }
        write_text_file(remap_out, crop_annotations_to_coco(sets, d) + "\n");
        std::size_t kept = 0;
        for (const auto& s : sets) kept += s.annotations.size();
        out << ordered_json{{"crops", sets.size()}, {"annotations", kept}}.dump() << '\n';
      } else {
        if (remap_dets.empty()) throw UsageError("remap --to global needs --dets");
        const auto local = parse_coco_detections(read_text_file(remap_dets));
        std::map<std::int64_t, std::vector<Detection>> by_crop;
        for (const Detection& det : local) {
          if (det.image_id < 1 || det.image_id > static_cast<std::int64_t>(crops.size())) {
            throw Error(ErrorKind::kIntegrity, "detection references crop image " +
                                                   std::to_string(det.image_id) +
                                                   " not in the manifest");
          }
          by_crop[det.image_id].push_back(det);
        }
        std::vector<Detection> global;
        std::size_t dropped = 0;
        const BackprojectOptions opts{remap_scale, remap_drop_border};
        for (const auto& [crop_no, dets] : by_crop) {
          const CropRegion& crop = crops[static_cast<std::size_t>(crop_no - 1)];
          const auto r = backproject_detections(crop, dets, d.image(crop.image_id).size(), opts);
          global.insert(global.end(), r.detections.begin(), r.detections.end());
          dropped += r.dropped;
        }
        write_text_file(remap_out, write_coco_detections(global) + "\n");
        out << ordered_json{{"detections", global.size()}, {"dropped", dropped}}.dump() << '\n';
      }
    } else if (*detect_cmd) {
      if (!detect_oracle) throw UsageError("detect currently supports only --oracle");
      const Dataset d = load_dataset(detect_ann);
      std::vector<Detection> dets;
      if (detect_crops.empty()) {
        for (const ImageRecord& img : d.images()) {
          const auto found = oracle_detect_image(d, img.id, detect_miss.policy());
          dets.insert(dets.end(), found.begin(), found.end());
        }
      } else {
        const auto crops = parse_crop_manifest(read_text_file(detect_crops));
        for (std::size_t i = 0; i < crops.size(); ++i) {
          auto found = oracle_detect_crop(d, crops[i], detect_miss.policy());
          for (Detection& det : found) det.image_id = static_cast<std::int64_t>(i + 1);
          dets.insert(dets.end(), found.begin(), found.end());
        }
      }
      write_text_file(detect_out, write_coco_detections(dets) + "\n");
      out << ordered_json{{"detections", dets.size()}}.dump() << '\n';
    } else if (*fuse_cmd) {
      const auto global = parse_coco_detections(read_text_file(fuse_global));
      std::vector<Detection> crop;
      if (!fuse_crop.empty()) crop = parse_coco_detections(read_text_file(fuse_crop));
      CropOptions profile_only;
      profile_only.profile = fuse_profile;
      const FusionParams params = fuse_opts.params(profile_only.resolved_profile());
      const auto fused = fuse(global, crop, params);
      write_text_file(fuse_out, write_coco_detections(fused) + "\n");
      out << ordered_json{{"input", global.size() + crop.size()},
                          {"fused", fused.size()},
                          {"nms_iou", params.nms_iou},
                          {"max_dets", params.max_dets_per_image}}
                 .dump()
          << '\n';
    } else if (*eval_cmd) {
      const Dataset d = load_dataset(eval_ann);
      const auto dets = parse_coco_detections(read_text_file(eval_dets));
      const EvalResult r = evaluate(dets, d, EvalParams{eval_max_dets});
      emit(out, eval_report_json(r, d), eval_out);
    } else if (*render_cmd) {
      std::optional<Dataset> d;
      if (!render_ann.empty()) d = load_dataset(render_ann);
      std::optional<DensityRaster> density;
      std::optional<DensityMask> mask;
      if (!render_density_path.empty()) density = read_density_file(render_density_path);
      if (!render_mask.empty()) {
        const DensityRaster m = read_density_file(render_mask);
        mask = DensityMask(m.height(), m.width());
        for (std::size_t i = 0; i < m.pixel_count(); ++i) {
          mask->values()[i] = m.values()[i] > 0.0f ? 1 : 0;
        }
      }
      RgbImage canvas;
      if (!render_image.empty()) {
        const std::string raw = read_text_file(render_image);
        canvas = decode_png(std::span(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
      } else if (!render_size.empty()) {
        canvas = blank_canvas(ImageSize{render_size[0], render_size[1]});
      } else if (d && render_image_id) {
        canvas = blank_canvas(d->image(*render_image_id).size());
      } else if (density) {
        canvas = blank_canvas(density->size());
      } else if (mask) {
        canvas = blank_canvas(mask->size());
      } else {
        throw UsageError("render needs --image, --size, --ann with --image-id, or a raster layer");
      }
      std::vector<CropRegion> crops;
      if (!render_crops.empty()) {
        crops = parse_crop_manifest(read_text_file(render_crops));
        if (render_image_id) crops = crops_of_image(crops, *render_image_id);
      }
      std::vector<Annotation> anns;
      if (d && render_image_id && !render_no_gt) anns = d->annotations_for(*render_image_id);
      OverlayLayers layers;
      layers.density = density ? &*density : nullptr;
      layers.mask = mask ? &*mask : nullptr;
      layers.crops = crops;
      layers.annotations = anns;
      const auto png = render_overlay(canvas, layers);
      write_text_file(render_out,
                      std::string_view(reinterpret_cast<const char*>(png.data()), png.size()));
      out << ordered_json{{"out", render_out}, {"height", canvas.height}, {"width", canvas.width}}
                 .dump()
          << '\n';
    } else if (*pipe_cmd) {
      if (!pipe_oracle) throw UsageError("pipeline currently supports only --oracle");
      const Dataset d = load_dataset(pipe_ann);
      const Profile profile = pipe_opts.resolved_profile();
      PipelineConfig config;
      config.threshold = pipe_opts.resolved_threshold();
      config.min_crop = pipe_opts.resolved_min_crop();
      config.window = pipe_opts.resolved_window();
      if (!pipe_grid.empty()) config.grid = GridSpec{pipe_grid[0], pipe_grid[1], pipe_overlap};
      if (!pipe_density_dir.empty()) config.density_dir = pipe_density_dir;
      config.use_global = !pipe_no_global;
      config.fusion = pipe_fusion.params(profile);
      config.miss = pipe_miss.policy();
      config.eval = EvalParams{pipe_max_eval};
      config.jobs = jobs;
      const CategoryStats stats = stats_for(d, pipe_stats_ann);
      config.kernel = pipe_kernel.spec(stats);
      const PipelineResult result = run_oracle_pipeline(d, stats, config);
      const std::string report = eval_report_json(result.eval, d);
      if (!pipe_out_dir.empty()) {
        const fs::path dir(pipe_out_dir);
        std::vector<CropRegion> crops;
        std::vector<Detection> global, crop_dets;
        for (const ImageOutcome& o : result.images) {
          crops.insert(crops.end(), o.crops.begin(), o.crops.end());
          global.insert(global.end(), o.global_detections.begin(), o.global_detections.end());
          crop_dets.insert(crop_dets.end(), o.crop_detections.begin(), o.crop_detections.end());
        }
        write_text_file(dir / "crops.jsonl", write_crop_manifest(crops));
        write_text_file(dir / "global_dets.json", write_coco_detections(global) + "\n");
        write_text_file(dir / "crop_dets.json", write_coco_detections(crop_dets) + "\n");
        write_text_file(dir / "fused_dets.json", write_coco_detections(result.detections) + "\n");
        write_text_file(dir / "report.json", report + "\n");
      }
      out << report << '\n';
    }
  } catch (const UsageError& e) {
    print_error(err, "usage", e.what());
    return kExitUsage;
  } catch (const Error& e) {
    print_error(err, to_string(e.kind()), e.what());
    return kExitError;
  } catch (const fs::filesystem_error& e) {
    print_error(err, "io", e.what());
    return kExitError;
  }
  return kExitOk;
}

}  // namespace dmcrop::cli
