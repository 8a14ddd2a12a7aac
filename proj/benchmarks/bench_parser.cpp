#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "surgbench/response_parser.hpp"

using namespace surgbench;

namespace {

const ParseConfig& cfg() {
  static const ParseConfig kCfg = ParseConfig::defaults();
  return kCfg;
}

void BM_MatchKeyword(benchmark::State& state) {
  const std::vector<std::string> keywords = {"calot triangle dissection"};
  const std::string response =
      "Based on the visible instruments and the cleared hepatocystic anatomy, the current "
      "phase of this laparoscopic procedure is calot triangle dissection, during which the "
      "cystic duct and artery are exposed.";
  for (auto _ : state) {
    benchmark::DoNotOptimize(match_keyword(response, keywords, cfg()));
  }
}

void BM_ParseBboxes(benchmark::State& state) {
  const std::string response =
      "grasper at [100, 50, 300, 400], scissors at (420, 80), (520, 200) and another box "
      "[12.5, 30.5, 80.25, 120.75] near the retractor 600 300 700 420";
  for (auto _ : state) {
    benchmark::DoNotOptimize(parse_bboxes(response, cfg()));
  }
}

void BM_ParseTriplet(benchmark::State& state) {
  TripletVocab vocab;
  vocab.instruments = {"grasper", "bipolar forceps", "L-shape hook", "scissors", "clipper",
                       "irrigator", "needle driver", "stapler", "suction device", "retractor",
                       "specimen bag"};
  vocab.verbs = {"grasp", "retract", "dissect", "coagulate", "clip", "cut", "aspirate",
                 "irrigate", "pack", "suture", "ligate", "clamp", "push", "release", "probe"};
  vocab.targets = {"gallbladder", "cystic duct", "cystic artery", "cystic plate", "liver",
                   "omentum", "peritoneum", "blood vessel", "abdominal wall", "adhesion",
                   "fluid", "Cystohepatic Triangle"};
  const std::string response = "The instrument clipper is used to clip the cystic duct.";
  for (auto _ : state) {
    benchmark::DoNotOptimize(parse_triplet(response, vocab, cfg()));
  }
}

void BM_ParseChoice(benchmark::State& state) {
  const std::vector<std::string> options = {"preparation", "calot triangle dissection",
                                            "clipping and cutting", "gallbladder dissection"};
  const std::string response = "The answer is (C) clipping and cutting.";
  for (auto _ : state) {
    benchmark::DoNotOptimize(parse_choice(response, options, cfg()));
  }
}

}  // namespace

BENCHMARK(BM_MatchKeyword);
BENCHMARK(BM_ParseBboxes);
BENCHMARK(BM_ParseTriplet);
BENCHMARK(BM_ParseChoice);
