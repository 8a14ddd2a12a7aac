// metrics: computes evaluation metrics from ground-truth and prediction
// JSONL files. File schemas are documented in the README (one JSON object
// per line, aligned by id).

#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "surgbench/metrics.hpp"
#include "surgbench/response_parser.hpp"

using namespace surgbench;
using nlohmann::json;

namespace {

std::vector<json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    out.push_back(json::parse(line));
  }
  return out;
}

std::map<std::string, json> by_id(const std::vector<json>& rows, const char* key) {
  std::map<std::string, json> out;
  for (const auto& r : rows) out[r.at(key).get<std::string>()] = r;
  return out;
}

BoundingBox box_from(const json& j) {
  BoundingBox b;
  b.x1 = j.at("x1").get<double>();
  b.y1 = j.at("y1").get<double>();
  b.x2 = j.at("x2").get<double>();
  b.y2 = j.at("y2").get<double>();
  if (j.contains("label")) b.label = j.at("label").get<std::string>();
  return b;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"compute evaluation metrics from gt/pred files"};
  app.require_subcommand(1);
  auto* compute = app.add_subcommand("compute", "compute one task's metric report");
  std::string task_name, gt_path, pred_path, out_path, classes_path;
  compute->add_option("--task", task_name,
                      "task kind, or 'text_overlap' for BLEU/METEOR/ROUGE")->required();
  compute->add_option("--gt", gt_path, "ground-truth JSONL")->required();
  compute->add_option("--pred", pred_path, "prediction JSONL")->required();
  compute->add_option("--out", out_path, "report destination")->required();
  compute->add_option("--classes", classes_path,
                      "class vocabulary file (classification tasks; default: classes in gt)");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto gt_rows = read_jsonl(gt_path);
    const auto pred_rows = read_jsonl(pred_path);
    MetricReport report;

    if (task_name == "text_overlap") {
      auto preds = by_id(pred_rows, "id");
      std::vector<std::string> candidates, references;
      for (const auto& g : gt_rows) {
        const std::string id = g.at("id").get<std::string>();
        references.push_back(g.at("text").get<std::string>());
        const auto it = preds.find(id);
        candidates.push_back(it == preds.end() ? "" : it->second.at("text").get<std::string>());
      }
      report = text_overlap(candidates, references);
    } else {
      const auto task = task_kind_from_string(task_name);
      if (!task) throw std::runtime_error("unknown task kind \"" + task_name + "\"");
      switch (*task) {
        case TaskKind::InstrumentLocalizationBox: {
          auto preds = by_id(pred_rows, "image_id");
          DetectionSet set;
          for (const auto& g : gt_rows) {
            ImageDetections img;
            for (const auto& bj : g.at("boxes")) img.ground_truth.push_back(box_from(bj));
            const auto it = preds.find(g.at("image_id").get<std::string>());
            if (it != preds.end()) {
              for (const auto& bj : it->second.at("boxes")) {
                ScoredBox sb;
                sb.box = box_from(bj);
                sb.cls = sb.box.label.value_or("");
                sb.confidence = bj.value("confidence", 1.0);
                img.predictions.push_back(std::move(sb));
              }
            }
            set.push_back(std::move(img));
          }
          report = detection_map(set);
          break;
        }
        case TaskKind::TripletRecognition: {
          auto preds = by_id(pred_rows, "id");
          std::vector<Triplet> gt;
          std::vector<PredTriplet> pred;
          for (const auto& g : gt_rows) {
            gt.push_back({g.at("instrument").get<std::string>(), g.at("verb").get<std::string>(),
                          g.at("target").get<std::string>()});
            const auto it = preds.find(g.at("id").get<std::string>());
            if (it == preds.end() || it->second.value("parse_failed", false)) {
              pred.push_back(std::nullopt);
            } else {
              pred.push_back(Triplet{it->second.at("instrument").get<std::string>(),
                                     it->second.at("verb").get<std::string>(),
                                     it->second.at("target").get<std::string>()});
            }
          }
          report = triplet_metrics(gt, pred);
          break;
        }
        case TaskKind::CvsAssessment: {
          auto preds = by_id(pred_rows, "id");
          std::vector<CvsVector> gt;
          std::vector<PredCvs> pred;
          auto cvs_from = [](const json& j) {
            CvsVector v;
            v.cystic_plate = j.at("c1").get<bool>();
            v.lower_third = j.at("c2").get<bool>();
            v.two_structures = j.at("c3").get<bool>();
            return v;
          };
          for (const auto& g : gt_rows) {
            gt.push_back(cvs_from(g));
            const auto it = preds.find(g.at("id").get<std::string>());
            if (it == preds.end() || it->second.value("parse_failed", false)) {
              pred.push_back(std::nullopt);
            } else {
              pred.push_back(cvs_from(it->second));
            }
          }
          report = cvs_metrics(gt, pred);
          break;
        }
        default: {  // classification tasks
          auto preds = by_id(pred_rows, "id");
          std::vector<std::string> gt;
          std::vector<PredLabel> pred;
          for (const auto& g : gt_rows) {
            gt.push_back(g.at("label").get<std::string>());
            const auto it = preds.find(g.at("id").get<std::string>());
            if (it == preds.end() || it->second.value("parse_failed", false)) {
              pred.push_back(std::nullopt);
            } else {
              pred.push_back(it->second.at("label").get<std::string>());
            }
          }
          std::vector<std::string> classes;
          if (!classes_path.empty()) {
            classes = ParseConfig::load_vocabulary(classes_path);
          } else {
            std::map<std::string, bool> seen;
            for (const auto& g : gt) {
              if (!seen.count(g)) {
                seen[g] = true;
                classes.push_back(g);
              }
            }
          }
          report = classification_report(gt, pred, classes);
          break;
        }
      }
    }

    report.save(out_path);
    std::printf("%s\n", report.to_json_string().c_str());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
