#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "oracles.hpp"
#include "surgbench/metrics.hpp"
#include "surgbench/rng.hpp"

using namespace surgbench;

TEST_CASE("iou: identical, overlapping, disjoint") {
  const BoundingBox a{0, 0, 2, 2, std::nullopt};
  CHECK(iou(a, a) == doctest::Approx(1.0));
  const BoundingBox b{1, 1, 3, 3, std::nullopt};
  CHECK(iou(a, b) == doctest::Approx(1.0 / 7.0));  // integer-grid cell counting: 1 / (4+4-1)
  CHECK(iou(a, b) == doctest::Approx(iou(b, a)));
  const BoundingBox c{10, 10, 12, 12, std::nullopt};
  CHECK(iou(a, c) == 0.0);
}

TEST_CASE("classification_report: perfect predictions score 100 everywhere") {
  const std::vector<std::string> gt = {"a", "b", "c", "a"};
  std::vector<PredLabel> pred;
  for (const auto& g : gt) pred.emplace_back(g);
  const std::vector<std::string> classes = {"a", "b", "c"};
  const auto r = classification_report(gt, pred, classes);
  CHECK(r.at("accuracy") == 100.0);
  CHECK(r.at("recall") == 100.0);
  CHECK(r.at("precision") == 100.0);
  CHECK(r.at("jaccard") == 100.0);
}

TEST_CASE("classification_report: hand-enumerated confusion matrix") {
  const std::vector<std::string> gt = {"A", "A", "B", "B"};
  const std::vector<PredLabel> pred = {std::string("A"), std::string("B"), std::string("B"),
                                       std::string("B")};
  const std::vector<std::string> classes = {"A", "B"};
  const auto r = classification_report(gt, pred, classes);
  CHECK(r.at("accuracy") == doctest::Approx(75.0));
  CHECK(r.at("recall") == doctest::Approx(75.0));
  CHECK(r.at("precision") == doctest::Approx(250.0 / 3.0).epsilon(1e-9));  // 83.33
  CHECK(r.at("jaccard") == doctest::Approx(175.0 / 3.0).epsilon(1e-9));    // 58.33
}

TEST_CASE("classification_report: ParseFailed scores zero") {
  const std::vector<std::string> gt = {"A"};
  const std::vector<PredLabel> pred = {std::nullopt};
  const std::vector<std::string> classes = {"A"};
  const auto r = classification_report(gt, pred, classes);
  CHECK(r.at("accuracy") == 0.0);
  CHECK(r.at("recall") == 0.0);
  CHECK(r.at("precision") == 0.0);
  CHECK(r.at("jaccard") == 0.0);
  CHECK(r.parse_failures == 1);
}

TEST_CASE("classification_report: matches the brute-force oracle on random instances") {
  Rng rng(2024);
  const std::vector<std::string> classes = {"c0", "c1", "c2", "c3", "c4"};
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.bounded(20);
    const std::size_t k = 2 + rng.bounded(4);  // up to 5 classes
    std::vector<std::string> gt;
    std::vector<PredLabel> pred;
    for (std::size_t i = 0; i < n; ++i) {
      gt.push_back(classes[rng.bounded(k)]);
      const auto roll = rng.bounded(10);
      if (roll == 0) {
        pred.emplace_back(std::nullopt);  // ParseFailed
      } else {
        pred.emplace_back(classes[rng.bounded(k)]);
      }
    }
    const auto got = classification_report(gt, pred, classes);
    const auto want = oracle::brute_force_classification(gt, pred);
    CAPTURE(trial);
    CHECK(got.at("accuracy") == doctest::Approx(want.accuracy).epsilon(1e-12));
    CHECK(got.at("recall") == doctest::Approx(want.recall).epsilon(1e-12));
    CHECK(got.at("precision") == doctest::Approx(want.precision).epsilon(1e-12));
    CHECK(got.at("jaccard") == doctest::Approx(want.jaccard).epsilon(1e-12));
  }
}

TEST_CASE("classification_report: permutation invariance") {
  Rng rng(5);
  const std::vector<std::string> classes = {"x", "y", "z"};
  std::vector<std::string> gt;
  std::vector<PredLabel> pred;
  for (int i = 0; i < 30; ++i) {
    gt.push_back(classes[rng.bounded(3)]);
    pred.emplace_back(classes[rng.bounded(3)]);
  }
  const auto base = classification_report(gt, pred, classes);
  std::vector<std::size_t> perm(gt.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  rng.shuffle(perm);
  std::vector<std::string> gt2;
  std::vector<PredLabel> pred2;
  for (const auto i : perm) {
    gt2.push_back(gt[i]);
    pred2.push_back(pred[i]);
  }
  const auto permuted = classification_report(gt2, pred2, classes);
  for (const auto& [key, value] : base.values) {
    CHECK(permuted.at(key) == doctest::Approx(value).epsilon(1e-12));
  }
}

TEST_CASE("classification_report: length mismatch throws") {
  const std::vector<std::string> gt = {"a"};
  const std::vector<PredLabel> pred = {};
  const std::vector<std::string> classes = {"a"};
  CHECK_THROWS(classification_report(gt, pred, classes));
}

namespace {

DetectionSet single_box_scene(double iou_target) {
  // GT box [0,0,100,100]; prediction shifted right so that IoU == target.
  // For a shift s: IoU = (100-s)*100 / ((100+s)*100).
  const double s = 100.0 * (1.0 - iou_target) / (1.0 + iou_target);
  ImageDetections img;
  BoundingBox gt{0, 0, 100, 100, std::string("tool")};
  img.ground_truth.push_back(gt);
  img.predictions.push_back({BoundingBox{s, 0, 100 + s, 100, std::string("tool")}, "tool", 1.0});
  return {img};
}

}  // namespace

TEST_CASE("detection_map: single prediction at IoU 0.6") {
  const auto data = single_box_scene(0.6);
  const auto r = detection_map(data);
  CHECK(r.at("map50") == doctest::Approx(100.0));
  CHECK(r.at("map75") == doctest::Approx(0.0));
  CHECK(r.at("coco_ap") == doctest::Approx(30.0));  // passes 0.50, 0.55, 0.60 of ten
  CHECK(r.at("miou") == doctest::Approx(60.0).epsilon(1e-6));
}

TEST_CASE("detection_map: perfect predictions") {
  DetectionSet data;
  ImageDetections img;
  img.ground_truth.push_back(BoundingBox{10, 10, 50, 60, std::string("a")});
  img.ground_truth.push_back(BoundingBox{100, 100, 180, 170, std::string("b")});
  for (const auto& g : img.ground_truth) img.predictions.push_back({g, *g.label, 1.0});
  data.push_back(img);
  const auto r = detection_map(data);
  CHECK(r.at("miou") == doctest::Approx(100.0));
  CHECK(r.at("map50") == doctest::Approx(100.0));
  CHECK(r.at("map75") == doctest::Approx(100.0));
  CHECK(r.at("coco_ap") == doctest::Approx(100.0));
}

TEST_CASE("detection_map: no predictions") {
  DetectionSet data;
  ImageDetections img;
  img.ground_truth.push_back(BoundingBox{0, 0, 10, 10, std::string("a")});
  data.push_back(img);
  const auto r = detection_map(data);
  CHECK(r.at("miou") == 0.0);
  CHECK(r.at("map50") == 0.0);
  CHECK(r.at("map75") == 0.0);
  CHECK(r.at("coco_ap") == 0.0);
}

TEST_CASE("detection_map: IoU exactly at the threshold matches (closed bound)") {
  // Half-height prediction over a full box: IoU is exactly 5000/10000 = 0.5
  // in floating point.
  DetectionSet data;
  ImageDetections img;
  img.ground_truth.push_back(BoundingBox{0, 0, 100, 100, std::string("tool")});
  img.predictions.push_back({BoundingBox{0, 0, 100, 50, std::string("tool")}, "tool", 1.0});
  data.push_back(img);
  REQUIRE(iou(img.ground_truth[0], img.predictions[0].box) == 0.5);
  const auto r = detection_map(data);
  CHECK(r.at("map50") == doctest::Approx(100.0));
}

namespace {

DetectionSet random_scenes(Rng& rng, std::size_t n_scenes) {
  static const std::vector<std::string> kClasses = {"a", "b"};
  DetectionSet data;
  for (std::size_t s = 0; s < n_scenes; ++s) {
    ImageDetections img;
    const std::size_t n_gt = rng.bounded(4) + 1;
    for (std::size_t g = 0; g < n_gt; ++g) {
      const double x = static_cast<double>(rng.bounded(200));
      const double y = static_cast<double>(rng.bounded(200));
      const double w = 20.0 + static_cast<double>(rng.bounded(80));
      const double h = 20.0 + static_cast<double>(rng.bounded(80));
      img.ground_truth.push_back(BoundingBox{x, y, x + w, y + h, kClasses[rng.bounded(2)]});
    }
    const std::size_t n_pred = rng.bounded(4);
    for (std::size_t p = 0; p < n_pred; ++p) {
      const auto& base = img.ground_truth[rng.bounded(img.ground_truth.size())];
      const double dx = static_cast<double>(rng.bounded(60)) - 30.0;
      const double dy = static_cast<double>(rng.bounded(60)) - 30.0;
      ScoredBox sb;
      sb.box = BoundingBox{base.x1 + dx, base.y1 + dy, base.x2 + dx, base.y2 + dy, std::nullopt};
      sb.cls = rng.bounded(5) == 0 ? kClasses[rng.bounded(2)] : *base.label;
      sb.confidence = static_cast<double>(rng.bounded(101)) / 100.0;
      img.predictions.push_back(std::move(sb));
    }
    data.push_back(std::move(img));
  }
  return data;
}

}  // namespace

TEST_CASE("detection_map: matches the exhaustive oracle on random scenes") {
  Rng rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    const auto data = random_scenes(rng, 1 + rng.bounded(4));
    const auto got = detection_map(data);
    CHECK(got.at("map50") == doctest::Approx(oracle::detection_map_at(data, 0.50)).epsilon(1e-9));
    CHECK(got.at("map75") == doctest::Approx(oracle::detection_map_at(data, 0.75)).epsilon(1e-9));
    CHECK(got.at("miou") == doctest::Approx(oracle::detection_miou(data)).epsilon(1e-9));
  }
}

TEST_CASE("detection_map: mAP is non-increasing in the IoU threshold") {
  Rng rng(123);
  for (int trial = 0; trial < 20; ++trial) {
    const auto data = random_scenes(rng, 3);
    const auto r = detection_map(data);
    CHECK(r.at("map50") >= r.at("map75") - 1e-12);
    double prev = 1e9;
    for (int t = 0; t < 10; ++t) {
      const double v = oracle::detection_map_at(data, 0.50 + 0.05 * t);
      CHECK(v <= prev + 1e-9);
      prev = v;
    }
  }
}

TEST_CASE("triplet_metrics: all correct / one-component error") {
  const std::vector<Triplet> gt = {{"grasper", "retract", "gallbladder"}};
  {
    const std::vector<PredTriplet> pred = {Triplet{"grasper", "retract", "gallbladder"}};
    const auto r = triplet_metrics(gt, pred);
    CHECK(r.at("instrument_accuracy") == 100.0);
    CHECK(r.at("verb_accuracy") == 100.0);
    CHECK(r.at("target_accuracy") == 100.0);
    CHECK(r.at("triplet_accuracy") == 100.0);
  }
  {
    const std::vector<PredTriplet> pred = {Triplet{"grasper", "grasp", "gallbladder"}};
    const auto r = triplet_metrics(gt, pred);
    CHECK(r.at("instrument_accuracy") == 100.0);
    CHECK(r.at("verb_accuracy") == 0.0);
    CHECK(r.at("target_accuracy") == 100.0);
    CHECK(r.at("triplet_accuracy") == 0.0);
  }
}

TEST_CASE("triplet_metrics: six-frame fixture matches the oracles") {
  const std::vector<Triplet> gt = {
      {"grasper", "retract", "gallbladder"}, {"clipper", "clip", "cystic duct"},
      {"grasper", "grasp", "gallbladder"},   {"scissors", "cut", "cystic artery"},
      {"clipper", "clip", "cystic artery"},  {"grasper", "retract", "liver"},
  };
  const std::vector<PredTriplet> pred = {
      Triplet{"grasper", "retract", "gallbladder"}, Triplet{"clipper", "cut", "cystic duct"},
      std::nullopt,                                 Triplet{"scissors", "cut", "cystic duct"},
      Triplet{"grasper", "clip", "cystic artery"},  Triplet{"grasper", "retract", "liver"},
  };
  const auto got = triplet_metrics(gt, pred);
  const auto acc = oracle::count_triplet_accuracies(gt, pred);
  CHECK(got.at("instrument_accuracy") == doctest::Approx(acc.instrument).epsilon(1e-12));
  CHECK(got.at("verb_accuracy") == doctest::Approx(acc.verb).epsilon(1e-12));
  CHECK(got.at("target_accuracy") == doctest::Approx(acc.target).epsilon(1e-12));
  CHECK(got.at("triplet_accuracy") == doctest::Approx(acc.triplet).epsilon(1e-12));
  const auto inst_map = oracle::triplet_component_map(
      gt, pred, [](const Triplet& t) { return t.instrument; });
  CHECK(got.at("instrument_map") == doctest::Approx(inst_map).epsilon(1e-9));
  const auto verb_map =
      oracle::triplet_component_map(gt, pred, [](const Triplet& t) { return t.verb; });
  CHECK(got.at("verb_map") == doctest::Approx(verb_map).epsilon(1e-9));
}

TEST_CASE("cvs_metrics: averaging reproduces the documented example row") {
  // Published row: criterion accuracies 26.27 / 20.78 / 29.41 average to
  // 25.49 (two-decimal rounding, so agreement within 0.01).
  CHECK(std::abs(cvs_average_accuracy(26.27, 20.78, 29.41) - 25.49) <= 0.01);
}

TEST_CASE("cvs_metrics: constant-true predictor on a balanced criterion") {
  std::vector<CvsVector> gt;
  std::vector<PredCvs> pred;
  for (int i = 0; i < 10; ++i) {
    CvsVector v;
    v.cystic_plate = i < 5;
    v.lower_third = i < 5;
    v.two_structures = i < 5;
    gt.push_back(v);
    pred.push_back(CvsVector{true, true, true});
  }
  const auto r = cvs_metrics(gt, pred);
  CHECK(r.at("accuracy_c1") == doctest::Approx(50.0));
  CHECK(r.at("balanced_accuracy_c1") == doctest::Approx(50.0));
  CHECK(r.at("average_accuracy") == doctest::Approx(50.0));
}

TEST_CASE("cvs_metrics: eight-frame fixture matches the confusion-count oracle") {
  std::vector<CvsVector> gt;
  std::vector<PredCvs> pred;
  for (int i = 0; i < 8; ++i) {
    CvsVector g;
    g.cystic_plate = i & 1;
    g.lower_third = i & 2;
    g.two_structures = i & 4;
    gt.push_back(g);
    CvsVector p;
    p.cystic_plate = (i + 1) & 1;
    p.lower_third = i & 2;
    p.two_structures = (i / 2) & 1;
    pred.push_back(p);
  }
  const auto r = cvs_metrics(gt, pred);
  for (int c = 0; c < 3; ++c) {
    std::vector<bool> g, p;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      g.push_back(gt[i].criterion(c));
      p.push_back((*pred[i]).criterion(c));
    }
    const std::vector<bool>& gv = g;
    const std::vector<bool>& pv = p;
    std::vector<bool> gb(gv.begin(), gv.end()), pb(pv.begin(), pv.end());
    // span<const bool> needs contiguous bools
    std::unique_ptr<bool[]> ga(new bool[gb.size()]), pa(new bool[pb.size()]);
    for (std::size_t i = 0; i < gb.size(); ++i) {
      ga[i] = gb[i];
      pa[i] = pb[i];
    }
    const double want = oracle::cvs_balanced_accuracy(
        std::span<const bool>(ga.get(), gb.size()), std::span<const bool>(pa.get(), pb.size()));
    CHECK(r.at("balanced_accuracy_c" + std::to_string(c + 1)) ==
          doctest::Approx(want).epsilon(1e-12));
  }
  // Average accuracy equals the mean of the three criterion accuracies.
  const double mean = cvs_average_accuracy(r.at("accuracy_c1"), r.at("accuracy_c2"),
                                           r.at("accuracy_c3"));
  CHECK(std::abs(r.at("average_accuracy") - mean) < 1e-9);
}

TEST_CASE("cvs_metrics: ParseFailed counts wrong on all criteria") {
  const std::vector<CvsVector> gt = {CvsVector{true, true, true}};
  const std::vector<PredCvs> pred = {std::nullopt};
  const auto r = cvs_metrics(gt, pred);
  CHECK(r.at("accuracy_c1") == 0.0);
  CHECK(r.at("accuracy_c2") == 0.0);
  CHECK(r.at("accuracy_c3") == 0.0);
  CHECK(r.at("overall_cvs_accuracy") == 0.0);
  CHECK(r.parse_failures == 1);
}

TEST_CASE("all reported metric values lie in [0, 100]") {
  Rng rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const auto data = random_scenes(rng, 2);
    for (const auto& [key, value] : detection_map(data).values) {
      CAPTURE(key);
      CHECK(value >= 0.0);
      CHECK(value <= 100.0);
    }
  }
}

TEST_CASE("metric report JSON round trip") {
  MetricReport r;
  r.values["accuracy"] = 51.25;
  r.sample_count = 10;
  r.parse_failures = 2;
  r.refusals = 1;
  r.notes.push_back("sample note");
  const auto loaded = MetricReport::from_json_string(r.to_json_string());
  CHECK(loaded.values == r.values);
  CHECK(loaded.sample_count == 10);
  CHECK(loaded.parse_failures == 2);
  CHECK(loaded.refusals == 1);
  REQUIRE(loaded.notes.size() == 1);
}
