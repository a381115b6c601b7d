#include "doctest.h"
#include "dmcrop/error.hpp"
#include "dmcrop/evaluate.hpp"
#include "json.hpp"
#include "support.hpp"

namespace dmcrop {
namespace {

Dataset one_box_dataset() {
  return Dataset::build({testing::image_record(1, 100, 100)},
                        {testing::annotation(1, 1, 1, {0, 0, 10, 10})}, {{1, "car"}, {2, "bus"}});
}

TEST_CASE("iou thresholds are exact decimals") {
  CHECK(iou_threshold(0) == 0.5);
  CHECK(iou_threshold(2) == 0.6);
  CHECK(iou_threshold(9) == 0.95);
}

TEST_CASE("single box at IoU 0.6 scores 0.3") {
  const Dataset gt = one_box_dataset();
  const std::vector<Detection> dets{{1, 1, {0, 0, 10, 6}, 0.9, {}}};
  const EvalResult r = evaluate(dets, gt);
  CHECK(*r.ap == 0.3);
  CHECK(*r.ap50 == 1.0);
  CHECK(*r.ap75 == 0.0);
  CHECK(*r.ap_small == 0.3);
  CHECK_FALSE(r.ap_medium.has_value());
  CHECK_FALSE(r.per_category.at(2).ap.has_value());
}

TEST_CASE("a higher-scored false positive halves precision") {
  const Dataset gt = one_box_dataset();
  const std::vector<Detection> dets{{1, 1, {50, 50, 10, 10}, 0.9, {}},
                                    {1, 1, {0, 0, 10, 10}, 0.8, {}}};
  CHECK(*evaluate(dets, gt).ap == doctest::Approx(0.5));
  const std::vector<Detection> reversed{{1, 1, {50, 50, 10, 10}, 0.7, {}},
                                        {1, 1, {0, 0, 10, 10}, 0.8, {}}};
  CHECK(*evaluate(reversed, gt).ap == 1.0);
}

TEST_CASE("half recall covers 51 of 101 recall points") {
  const Dataset gt = Dataset::build(
      {testing::image_record(1, 100, 100)},
      {testing::annotation(1, 1, 1, {0, 0, 10, 10}), testing::annotation(2, 1, 1, {50, 50, 10, 10})},
      {{1, "car"}});
  const std::vector<Detection> dets{{1, 1, {0, 0, 10, 10}, 0.9, {}}};
  CHECK(*evaluate(dets, gt).ap == doctest::Approx(51.0 / 101.0));
}

TEST_CASE("ground truth as detections scores one") {
  testing::Rng rng(61);
  std::vector<ImageRecord> images;
  std::vector<Annotation> anns;
  for (int i = 1; i <= 5; ++i) {
    images.push_back(testing::image_record(i, 400, 400));
    for (int k = 0; k < 20; ++k) {
      anns.push_back(testing::annotation(static_cast<std::int64_t>(anns.size()) + 1, i,
                                         testing::uniform_int(rng, 1, 3),
                                         {testing::uniform(rng, 0, 300), testing::uniform(rng, 0, 300),
                                          testing::uniform(rng, 4, 99), testing::uniform(rng, 4, 99)}));
    }
  }
  const Dataset gt = Dataset::build(images, anns, {{1, "a"}, {2, "b"}, {3, "c"}});
  std::vector<Detection> dets;
  for (const auto& a : gt.annotations()) dets.push_back({a.image_id, a.category_id, a.bbox, 1.0, {}});
  const EvalResult r = evaluate(dets, gt);
  CHECK(*r.ap == 1.0);
  CHECK(*r.ap_small == 1.0);
  CHECK(*r.ap_large == 1.0);
}

TEST_CASE("per-image cap drops low-scored detections") {
  const Dataset gt = one_box_dataset();
  const std::vector<Detection> dets{{1, 1, {50, 50, 10, 10}, 0.9, {}},
                                    {1, 1, {0, 0, 10, 10}, 0.8, {}}};
  CHECK(*evaluate(dets, gt, {1}).ap == 0.0);
  CHECK_THROWS_AS(evaluate(dets, gt, {0}), Error);
}

TEST_CASE("unknown ids are integrity errors") {
  const Dataset gt = one_box_dataset();
  const std::vector<Detection> bad_cat{{1, 9, {0, 0, 1, 1}, 0.9, {}}};
  const std::vector<Detection> bad_img{{4, 1, {0, 0, 1, 1}, 0.9, {}}};
  CHECK_THROWS_AS(evaluate(bad_cat, gt), Error);
  CHECK_THROWS_AS(evaluate(bad_img, gt), Error);
}

TEST_CASE("report writes undefined metrics as -1") {
  const Dataset gt = one_box_dataset();
  const std::vector<Detection> dets{{1, 1, {0, 0, 10, 10}, 0.9, {}}};
  const auto doc = nlohmann::json::parse(eval_report_json(evaluate(dets, gt), gt));
  CHECK(doc["AP"] == 1.0);
  CHECK(doc["APl"] == -1.0);
  CHECK(doc["per_category"]["2"]["AP"] == -1.0);
  CHECK(doc["per_category"]["1"]["name"] == "car");
}

}  // namespace
}  // namespace dmcrop
