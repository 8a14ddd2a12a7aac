// arena: aggregates per-dataset metric reports into arena scores and renders
// the leaderboard. The reports directory holds one subdirectory per model,
// each containing <dataset_id>.json reports (the metrics module's schema)
// and an optional meta.json {model, institute, protocol}.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "surgbench/arena.hpp"
#include "surgbench/harness.hpp"
#include "surgbench/metrics.hpp"

using namespace surgbench;
namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"arena score aggregation and leaderboard rendering"};
  std::string reports_dir, out_prefix = "leaderboard";
  app.add_option("--reports", reports_dir, "directory of per-model report folders")->required();
  app.add_option("--out", out_prefix, "output basename (writes <out>.txt and <out>.json)");
  CLI11_PARSE(app, argc, argv);

  const std::map<std::string, std::string> primary = {
      {"cholec80", "accuracy"},          {"sar_rarp", "accuracy"},
      {"cholect50", "triplet_accuracy"}, {"endovis2017", "miou"},
      {"endovis2018_vqa", "accuracy"},   {"endoscape2023_cvs", "average_accuracy"},
  };

  try {
    std::vector<LeaderboardEntry> entries;
    std::vector<fs::path> model_dirs;
    for (const auto& entry : fs::directory_iterator(reports_dir)) {
      if (entry.is_directory()) model_dirs.push_back(entry.path());
    }
    std::sort(model_dirs.begin(), model_dirs.end());
    for (const auto& dir : model_dirs) {
      LeaderboardEntry e;
      e.model = dir.filename().string();
      e.institute = "-";
      const fs::path meta = dir / "meta.json";
      if (fs::exists(meta)) {
        std::ifstream in(meta);
        const auto j = nlohmann::json::parse(in);
        e.model = j.value("model", e.model);
        e.institute = j.value("institute", e.institute);
        const auto proto = protocol_from_string(j.value("protocol", "ov"));
        e.protocol = proto.value_or(Protocol::OV);
      }
      bool complete = true;
      ArenaVector v;
      for (const auto& [dataset, key] : primary) {
        const fs::path report_path = dir / (dataset + ".json");
        if (!fs::exists(report_path)) {
          std::fprintf(stderr, "warning: %s lacks %s.json, skipping model\n",
                       dir.string().c_str(), dataset.c_str());
          complete = false;
          break;
        }
        const auto report = MetricReport::load(report_path.string());
        const double value = report.at(key);
        if (dataset == "cholec80") v.cholec80_phase_accuracy = value;
        else if (dataset == "sar_rarp") v.sar_rarp_action_accuracy = value;
        else if (dataset == "cholect50") v.cholect50_triplet_accuracy = value;
        else if (dataset == "endovis2017") v.endovis2017_miou = value;
        else if (dataset == "endovis2018_vqa") v.endovis2018_vqa_accuracy = value;
        else v.endoscape_cvs_average_accuracy = value;
      }
      if (!complete) continue;
      e.vector = v;
      entries.push_back(std::move(e));
    }
    if (entries.empty()) {
      std::fprintf(stderr, "error: no complete model report folders under %s\n",
                   reports_dir.c_str());
      return 1;
    }
    const auto board = leaderboard(std::move(entries));
    std::ofstream(out_prefix + ".txt", std::ios::binary) << board.text;
    std::ofstream(out_prefix + ".json", std::ios::binary) << board.json << "\n";
    std::printf("%s", board.text.c_str());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
