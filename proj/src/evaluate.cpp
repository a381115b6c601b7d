#include "dmcrop/evaluate.hpp"

#include <algorithm>
#include <numeric>
#include <utility>
#include <vector>

#include "dmcrop/error.hpp"
#include "json.hpp"

namespace dmcrop {

namespace {

enum class Bucket { kAll, kSmall, kMedium, kLarge };

bool in_bucket(Bucket bucket, const BoundingBox& b) {
  switch (bucket) {
    case Bucket::kAll:
      return true;
    case Bucket::kSmall:
      return area_class(b) == AreaClass::kSmall;
    case Bucket::kMedium:
      return area_class(b) == AreaClass::kMedium;
    case Bucket::kLarge:
      return area_class(b) == AreaClass::kLarge;
  }
  return false;
}

using PerThreshold = std::array<bool, kIouThresholdCount>;

// Matched detections of every image for one (category, bucket), in image order.
struct Accumulator {
  std::vector<double> scores;
  std::vector<PerThreshold> matched;
  std::vector<PerThreshold> ignored;
  std::int64_t positives = 0;  // non-ignored ground truth
};

void match_image(std::span<const Annotation> gts, std::span<const Detection> dts, Bucket bucket,
                 Accumulator& acc) {
  // Non-ignored ground truth first, as COCO does.
  std::vector<std::size_t> g_order(gts.size());
  std::iota(g_order.begin(), g_order.end(), 0);
  std::stable_sort(g_order.begin(), g_order.end(), [&](std::size_t a, std::size_t b) {
    return in_bucket(bucket, gts[a].bbox) > in_bucket(bucket, gts[b].bbox);
  });
  std::vector<bool> g_ignore(gts.size());
  for (std::size_t k = 0; k < gts.size(); ++k) {
    g_ignore[k] = !in_bucket(bucket, gts[g_order[k]].bbox);
    if (!g_ignore[k]) ++acc.positives;
  }

  std::vector<std::vector<double>> ious(dts.size(), std::vector<double>(gts.size()));
  for (std::size_t d = 0; d < dts.size(); ++d) {
    for (std::size_t k = 0; k < gts.size(); ++k) ious[d][k] = iou(dts[d].bbox, gts[g_order[k]].bbox);
  }

  std::vector<PerThreshold> matched(dts.size(), PerThreshold{});
  std::vector<PerThreshold> ignored(dts.size(), PerThreshold{});
  for (int t = 0; t < kIouThresholdCount; ++t) {
    std::vector<bool> g_taken(gts.size(), false);
    for (std::size_t d = 0; d < dts.size(); ++d) {
      double best = std::min(iou_threshold(t), 1.0 - 1e-10);
      std::ptrdiff_t m = -1;
      for (std::size_t k = 0; k < gts.size(); ++k) {
        if (g_taken[k]) continue;
        // Once a real match exists, ignored ground truth cannot replace it.
        if (m > -1 && !g_ignore[static_cast<std::size_t>(m)] && g_ignore[k]) break;
        if (ious[d][k] < best) continue;
        best = ious[d][k];
        m = static_cast<std::ptrdiff_t>(k);
      }
      if (m == -1) {
        ignored[d][static_cast<std::size_t>(t)] = !in_bucket(bucket, dts[d].bbox);
        continue;
      }
      g_taken[static_cast<std::size_t>(m)] = true;
      matched[d][static_cast<std::size_t>(t)] = true;
      ignored[d][static_cast<std::size_t>(t)] = g_ignore[static_cast<std::size_t>(m)];
    }
  }
  for (std::size_t d = 0; d < dts.size(); ++d) {
    acc.scores.push_back(dts[d].score);
    acc.matched.push_back(matched[d]);
    acc.ignored.push_back(ignored[d]);
  }
}

using PrecisionTable = std::array<std::array<double, kRecallPointCount>, kIouThresholdCount>;

// Interpolated precision at each recall point, or nullopt without positives.
std::optional<PrecisionTable> precision_table(const Accumulator& acc) {
  if (acc.positives == 0) return std::nullopt;
  std::vector<std::size_t> order(acc.scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return acc.scores[a] > acc.scores[b]; });

  PrecisionTable table{};
  for (int t = 0; t < kIouThresholdCount; ++t) {
    const auto ti = static_cast<std::size_t>(t);
    std::vector<double> recall;
    std::vector<double> precision;
    double tp = 0.0;
    double fp = 0.0;
    for (std::size_t i : order) {
      if (acc.ignored[i][ti]) continue;
      if (acc.matched[i][ti]) {
        tp += 1.0;
      } else {
        fp += 1.0;
      }
      recall.push_back(tp / static_cast<double>(acc.positives));
      precision.push_back(tp / (tp + fp));  // tp + fp >= 1 here
    }
    for (std::size_t i = precision.size(); i-- > 1;) {
      precision[i - 1] = std::max(precision[i - 1], precision[i]);
    }
    for (int r = 0; r < kRecallPointCount; ++r) {
      const double target = r / 100.0;
      const auto it = std::lower_bound(recall.begin(), recall.end(), target);
      const auto idx = static_cast<std::size_t>(it - recall.begin());
      table[ti][static_cast<std::size_t>(r)] = idx < precision.size() ? precision[idx] : 0.0;
    }
  }
  return table;
}

struct Mean {
  double sum = 0.0;
  std::int64_t n = 0;
  void add(double v) {
    sum += v;
    ++n;
  }
  std::optional<double> value() const {
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  }
};

void add_thresholds(const PrecisionTable& table, int t_begin, int t_end, Mean& mean) {
  for (int t = t_begin; t < t_end; ++t) {
    for (double p : table[static_cast<std::size_t>(t)]) mean.add(p);
  }
}

nlohmann::ordered_json metric(const std::optional<double>& v) { return v ? *v : -1.0; }

}  // namespace

EvalResult evaluate(std::span<const Detection> dets, const Dataset& gt, const EvalParams& params) {
  if (params.max_dets_per_image < 1) {
    throw Error(ErrorKind::kInvalidArgument, "max_dets_per_image must be >= 1");
  }
  using Key = std::pair<std::int64_t, std::int64_t>;  // (category, image)
  std::map<Key, std::vector<Detection>> dt_groups;
  for (const Detection& d : dets) {
    if (!gt.has_category(d.category_id)) {
      throw Error(ErrorKind::kIntegrity,
                  "detection references unknown category " + std::to_string(d.category_id));
    }
    if (gt.find_image(d.image_id) == nullptr) {
      throw Error(ErrorKind::kIntegrity,
                  "detection references unknown image " + std::to_string(d.image_id));
    }
    dt_groups[{d.category_id, d.image_id}].push_back(d);
  }
  std::map<Key, std::vector<Annotation>> gt_groups;
  for (const Annotation& a : gt.annotations()) gt_groups[{a.category_id, a.image_id}].push_back(a);

  // Per image: score order, then the per-image detection cap.
  for (auto& [key, group] : dt_groups) {
    std::stable_sort(group.begin(), group.end(),
                     [](const Detection& a, const Detection& b) { return a.score > b.score; });
    if (group.size() > static_cast<std::size_t>(params.max_dets_per_image)) {
      group.resize(static_cast<std::size_t>(params.max_dets_per_image));
    }
  }

  constexpr std::array<Bucket, 4> kBuckets{Bucket::kAll, Bucket::kSmall, Bucket::kMedium,
                                           Bucket::kLarge};
  std::array<Mean, 4> bucket_means{};
  Mean ap50;
  Mean ap75;
  EvalResult result;
  const std::vector<Detection> no_dets;
  const std::vector<Annotation> no_gts;

  for (const auto& [category, name] : gt.categories()) {
    std::array<std::optional<PrecisionTable>, 4> tables;
    for (std::size_t b = 0; b < kBuckets.size(); ++b) {
      Accumulator acc;
      for (const ImageRecord& img : gt.images()) {
        const Key key{category, img.id};
        auto dit = dt_groups.find(key);
        auto git = gt_groups.find(key);
        const auto& dts = dit == dt_groups.end() ? no_dets : dit->second;
        const auto& gts = git == gt_groups.end() ? no_gts : git->second;
        if (dts.empty() && gts.empty()) continue;
        match_image(gts, dts, kBuckets[b], acc);
      }
      tables[b] = precision_table(acc);
      if (tables[b]) add_thresholds(*tables[b], 0, kIouThresholdCount, bucket_means[b]);
    }
    CategoryAp cat;
    if (tables[0]) {
      Mean all, c50, c75;
      add_thresholds(*tables[0], 0, kIouThresholdCount, all);
      add_thresholds(*tables[0], 0, 1, c50);
      add_thresholds(*tables[0], 5, 6, c75);
      add_thresholds(*tables[0], 0, 1, ap50);
      add_thresholds(*tables[0], 5, 6, ap75);
      cat = CategoryAp{all.value(), c50.value(), c75.value()};
    }
    result.per_category[category] = cat;
  }
  result.ap = bucket_means[0].value();
  result.ap50 = ap50.value();
  result.ap75 = ap75.value();
  result.ap_small = bucket_means[1].value();
  result.ap_medium = bucket_means[2].value();
  result.ap_large = bucket_means[3].value();
  return result;
}

std::string eval_report_json(const EvalResult& result, const Dataset& gt) {
  nlohmann::ordered_json doc;
  doc["AP"] = metric(result.ap);
  doc["AP50"] = metric(result.ap50);
  doc["AP75"] = metric(result.ap75);
  doc["APs"] = metric(result.ap_small);
  doc["APm"] = metric(result.ap_medium);
  doc["APl"] = metric(result.ap_large);
  nlohmann::ordered_json per_category = nlohmann::ordered_json::object();
  for (const auto& [id, cat] : result.per_category) {
    auto it = gt.categories().find(id);
    per_category[std::to_string(id)] = {
        {"name", it == gt.categories().end() ? std::to_string(id) : it->second},
        {"AP", metric(cat.ap)},
        {"AP50", metric(cat.ap50)},
        {"AP75", metric(cat.ap75)}};
  }
  doc["per_category"] = std::move(per_category);
  return doc.dump();
}

}  // namespace dmcrop
