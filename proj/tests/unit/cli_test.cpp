#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "doctest.h"
#include "dmcrop/dataset_io.hpp"
#include "json.hpp"

namespace dmcrop {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "dmcrop");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / name) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string operator/(const std::string& file) const { return (path_ / file).string(); }

 private:
  fs::path path_;
};

std::string fixture() { return (fs::path(DMCROP_TEST_DATA) / "clustered.json").string(); }

TEST_CASE("stats prints per-category sizes and sigma") {
  const Run r = run({"stats", "--ann", fixture()});
  REQUIRE(r.code == 0);
  const json doc = json::parse(r.out);
  CHECK(doc["global"]["count"].get<int>() > 0);
  for (const auto& [id, cat] : doc["categories"].items()) {
    const double h = cat["mean_h"];
    const double w = cat["mean_w"];
    CHECK(cat["sigma"].get<double>() == doctest::Approx(0.5 * std::sqrt(h * h + w * w)));
  }
}

TEST_CASE("usage and runtime errors are JSON with distinct exit codes") {
  Run r = run({"bogus"});
  CHECK(r.code == cli::kExitUsage);
  CHECK(json::parse(r.err)["error"] == "usage");
  r = run({"pipeline", "--ann", fixture()});
  CHECK(r.code == cli::kExitUsage);
  r = run({"eval", "--ann", "/nonexistent.json", "--dets", "/nonexistent.json"});
  CHECK(r.code == cli::kExitError);
  CHECK(json::parse(r.err)["error"] == "io");
  r = run({"mask", "--density", "/nonexistent.dmap", "--profile", "custom", "--window", "3", "3"});
  CHECK(r.code == cli::kExitUsage);
  CHECK(run({"--help"}).code == cli::kExitOk);
}

TEST_CASE("malformed annotations exit with a parse error") {
  TempDir dir("dmcrop_cli_parse");
  write_text_file(dir / "bad.json", "{\"images\": [");
  const Run r = run({"stats", "--ann", dir / "bad.json"});
  CHECK(r.code == cli::kExitError);
  CHECK(json::parse(r.err)["error"] == "parse");
}

TEST_CASE("profile comes from the flag, then the environment") {
  TempDir dir("dmcrop_cli_profile");
  DensityRaster d(10, 10, 0.0f);
  d(5, 5) = 0.05f;
  write_density_file(dir / "d.dmap", d);
  const std::vector<std::string> base{"mask", "--density", dir / "d.dmap", "--window", "2", "2",
                                      "--min-crop", "1"};
  auto with = [&](std::vector<std::string> extra) {
    auto args = base;
    args.insert(args.end(), extra.begin(), extra.end());
    return json::parse(run(args).out);
  };
  ::unsetenv("DMNET_PROFILE");
  CHECK(with({})["threshold"] == 0.08);
  CHECK(with({})["crops"] == 0);
  ::setenv("DMNET_PROFILE", "uavdt", 1);
  CHECK(with({})["threshold"] == 0.03);
  CHECK(with({})["crops"] == 1);
  CHECK(with({"--profile", "visiondrone"})["threshold"] == 0.08);
  CHECK(with({"--threshold", "0.01"})["threshold"] == 0.01);
  ::setenv("DMNET_PROFILE", "nonsense", 1);
  CHECK(run(base).code == cli::kExitUsage);
  ::unsetenv("DMNET_PROFILE");
}

TEST_CASE("gt-density writes one map per image") {
  TempDir dir("dmcrop_cli_gtd");
  const Run r = run({"gt-density", "--ann", fixture(), "--out-dir", dir / "maps", "--kernel",
                     "fixed", "--sigma", "4"});
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    const json j = json::parse(line);
    const DensityRaster m = read_density_file(j["file"].get<std::string>());
    CHECK(m.height() > 0);
    ++n;
  }
  CHECK(n == 10);
}

TEST_CASE("manual chain equals the pipeline") {
  TempDir dir("dmcrop_cli_chain");
  const std::vector<std::string> miss{"--miss-small", "0.2", "--miss-medium", "0.1", "--seed", "5"};
  auto with_miss = [&](std::vector<std::string> args) {
    args.insert(args.end(), miss.begin(), miss.end());
    return run(args);
  };
  REQUIRE(run({"crop", "--ann", fixture(), "--out", dir / "crops.jsonl"}).code == 0);
  REQUIRE(with_miss({"detect", "--oracle", "--ann", fixture(), "--out", dir / "g.json"}).code == 0);
  REQUIRE(with_miss({"detect", "--oracle", "--ann", fixture(), "--crops", dir / "crops.jsonl",
                     "--out", dir / "c_local.json"})
              .code == 0);
  REQUIRE(run({"remap", "--to", "global", "--ann", fixture(), "--crops", dir / "crops.jsonl",
               "--dets", dir / "c_local.json", "--out", dir / "c.json"})
              .code == 0);
  REQUIRE(run({"fuse", "--global", dir / "g.json", "--crop-dets", dir / "c.json", "--out",
               dir / "f.json"})
              .code == 0);
  const Run manual = run({"eval", "--ann", fixture(), "--dets", dir / "f.json"});
  REQUIRE(manual.code == 0);
  const Run pipe = with_miss({"pipeline", "--oracle", "--ann", fixture(), "--out-dir",
                              dir / "pipe"});
  REQUIRE(pipe.code == 0);
  CHECK(manual.out == pipe.out);
  CHECK(read_text_file(dir / "f.json") == read_text_file(dir / "pipe/fused_dets.json"));
  CHECK(read_text_file(dir / "crops.jsonl") == read_text_file(dir / "pipe/crops.jsonl"));
}

TEST_CASE("results do not depend on the worker count") {
  TempDir dir("dmcrop_cli_jobs");
  const Run one = run({"pipeline", "--oracle", "--ann", fixture(), "--miss-small", "0.3",
                       "--out-dir", dir / "a", "--jobs", "1"});
  const Run four = run({"pipeline", "--oracle", "--ann", fixture(), "--miss-small", "0.3",
                        "--out-dir", dir / "b", "--jobs", "4"});
  REQUIRE(one.code == 0);
  CHECK(one.out == four.out);
  for (const char* f : {"crops.jsonl", "fused_dets.json", "report.json"}) {
    CHECK(read_text_file(dir / (std::string("a/") + f)) ==
          read_text_file(dir / (std::string("b/") + f)));
  }
  REQUIRE(run({"gt-density", "--ann", fixture(), "--out-dir", dir / "m1", "--jobs", "1"}).code == 0);
  REQUIRE(run({"gt-density", "--ann", fixture(), "--out-dir", dir / "m4", "--jobs", "4"}).code == 0);
  CHECK(read_text_file(dir / "m1/3.dmap") == read_text_file(dir / "m4/3.dmap"));
}

TEST_CASE("mask outputs are byte-identical across runs") {
  TempDir dir("dmcrop_cli_mask_repeat");
  REQUIRE(run({"gt-density", "--ann", fixture(), "--out-dir", dir / "maps", "--image-id", "2"})
              .code == 0);
  std::vector<std::string> mask_bytes;
  std::vector<std::string> manifest_bytes;
  for (int i = 0; i < 2; ++i) {
    const std::string tag = std::to_string(i);
    REQUIRE(run({"mask", "--density", dir / "maps/2.dmap", "--threshold", "0.08", "--window", "40",
                 "30", "--min-crop", "1", "--out-mask", dir / ("m" + tag + ".dmap"),
                 "--out-manifest", dir / ("c" + tag + ".jsonl")})
                .code == 0);
    mask_bytes.push_back(read_text_file(dir / ("m" + tag + ".dmap")));
    manifest_bytes.push_back(read_text_file(dir / ("c" + tag + ".jsonl")));
  }
  CHECK(mask_bytes[0] == mask_bytes[1]);
  CHECK(manifest_bytes[0] == manifest_bytes[1]);
  CHECK_FALSE(manifest_bytes[0].empty());
}

TEST_CASE("remap to crop writes a loadable COCO file") {
  TempDir dir("dmcrop_cli_remap");
  REQUIRE(run({"crop", "--ann", fixture(), "--out", dir / "crops.jsonl"}).code == 0);
  const Run r = run({"remap", "--to", "crop", "--ann", fixture(), "--crops", dir / "crops.jsonl",
                     "--out", dir / "crop_ann.json"});
  REQUIRE(r.code == 0);
  const Dataset crops = parse_coco(read_text_file(dir / "crop_ann.json"));
  CHECK(crops.images().size() == json::parse(r.out)["crops"].get<std::size_t>());
}

TEST_CASE("mask and render produce files") {
  TempDir dir("dmcrop_cli_render");
  REQUIRE(run({"gt-density", "--ann", fixture(), "--out-dir", dir.operator/("maps"), "--image-id",
               "1"})
              .code == 0);
  const Run m = run({"mask", "--density", dir / "maps/1.dmap", "--ann", fixture(), "--image-id",
                     "1"});
  REQUIRE(m.code == 0);
  const json info = json::parse(m.out);
  CHECK(fs::exists(info["mask"].get<std::string>()));
  CHECK(fs::exists(info["manifest"].get<std::string>()));
  const Run r = run({"render", "--ann", fixture(), "--image-id", "1", "--density",
                     dir / "maps/1.dmap", "--mask", info["mask"].get<std::string>(), "--crops",
                     info["manifest"].get<std::string>(), "--out", dir / "o.png"});
  REQUIRE(r.code == 0);
  CHECK(fs::file_size(dir / "o.png") > 0);
}

}  // namespace
}  // namespace dmcrop
