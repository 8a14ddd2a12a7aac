#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "surgbench/metrics.hpp"
#include "surgbench/rng.hpp"

using namespace surgbench;

namespace {

std::vector<std::string> classes() { return {"c0", "c1", "c2", "c3", "c4", "c5", "c6"}; }

void BM_ClassificationReport(benchmark::State& state) {
  Rng rng(1);
  const auto cls = classes();
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  std::vector<std::string> gt;
  std::vector<PredLabel> pred;
  for (std::size_t i = 0; i < n; ++i) {
    gt.push_back(cls[rng.bounded(cls.size())]);
    pred.emplace_back(cls[rng.bounded(cls.size())]);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(classification_report(gt, pred, cls));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}

void BM_DetectionMap(benchmark::State& state) {
  Rng rng(2);
  DetectionSet data;
  const std::size_t scenes = static_cast<std::size_t>(state.range(0));
  for (std::size_t s = 0; s < scenes; ++s) {
    ImageDetections img;
    for (int g = 0; g < 4; ++g) {
      const double x = static_cast<double>(rng.bounded(400));
      const double y = static_cast<double>(rng.bounded(400));
      img.ground_truth.push_back(
          BoundingBox{x, y, x + 50, y + 60, std::string(1, static_cast<char>('a' + g % 2))});
    }
    for (int p = 0; p < 4; ++p) {
      const auto& base = img.ground_truth[static_cast<std::size_t>(p)];
      ScoredBox sb;
      sb.box = BoundingBox{base.x1 + 10, base.y1 + 10, base.x2 + 10, base.y2 + 10, std::nullopt};
      sb.cls = *base.label;
      sb.confidence = static_cast<double>(rng.bounded(101)) / 100.0;
      img.predictions.push_back(std::move(sb));
    }
    data.push_back(std::move(img));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(detection_map(data));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(scenes));
}

void BM_TextOverlap(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  std::vector<std::string> cand(n, "the grasper retracts the gallbladder during dissection");
  std::vector<std::string> ref(n, "the grasper is retracting the gallbladder tissue carefully");
  for (auto _ : state) {
    benchmark::DoNotOptimize(text_overlap(cand, ref));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}

}  // namespace

BENCHMARK(BM_ClassificationReport)->Arg(1000)->Arg(10000);
BENCHMARK(BM_DetectionMap)->Arg(100)->Arg(1000);
BENCHMARK(BM_TextOverlap)->Arg(100)->Arg(1000);
