#include "surgbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "surgbench/kahan.hpp"

namespace surgbench {

double MetricReport::at(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end()) throw std::out_of_range("metric report has no key \"" + key + "\"");
  return it->second;
}

std::string MetricReport::to_json_string() const {
  nlohmann::json j;
  j["values"] = values;
  j["sample_count"] = sample_count;
  j["parse_failures"] = parse_failures;
  j["refusals"] = refusals;
  j["notes"] = notes;
  return j.dump(2);
}

MetricReport MetricReport::from_json_string(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  MetricReport r;
  r.values = j.at("values").get<std::map<std::string, double>>();
  r.sample_count = j.value("sample_count", std::size_t{0});
  r.parse_failures = j.value("parse_failures", std::size_t{0});
  r.refusals = j.value("refusals", std::size_t{0});
  r.notes = j.value("notes", std::vector<std::string>{});
  return r;
}

MetricReport MetricReport::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("report: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_string(ss.str());
}

void MetricReport::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("report: cannot open " + path + " for writing");
  out << to_json_string() << "\n";
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix1 = std::max(a.x1, b.x1);
  const double iy1 = std::max(a.y1, b.y1);
  const double ix2 = std::min(a.x2, b.x2);
  const double iy2 = std::min(a.y2, b.y2);
  const double iw = ix2 - ix1;
  const double ih = iy2 - iy1;
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni <= 0.0 ? 0.0 : inter / uni;
}

// --- classification ---------------------------------------------------------

MetricReport classification_report(std::span<const std::string> gt,
                                   std::span<const PredLabel> pred,
                                   std::span<const std::string> class_set) {
  if (gt.size() != pred.size()) {
    throw std::invalid_argument("classification_report: gt/pred length mismatch");
  }
  const std::set<std::string> classes(class_set.begin(), class_set.end());
  for (const auto& g : gt) {
    if (!classes.count(g)) {
      throw std::invalid_argument("classification_report: gt label not in class set: " + g);
    }
  }

  MetricReport report;
  report.sample_count = gt.size();

  std::map<std::string, ConfusionCounts> counts;
  std::size_t matches = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!pred[i]) {
      // ParseFailed: reserved null class, false negative for the true class.
      ++report.parse_failures;
      ++counts[gt[i]].fn;
      continue;
    }
    const std::string& p = *pred[i];
    if (p == gt[i]) {
      ++matches;
      ++counts[gt[i]].tp;
    } else {
      ++counts[gt[i]].fn;
      ++counts[p].fp;
    }
  }

  // Macro averages over classes present in gt only.
  std::set<std::string> gt_classes(gt.begin(), gt.end());
  KahanSum recall_sum, precision_sum, jaccard_sum;
  for (const auto& c : gt_classes) {
    const auto& cc = counts[c];
    const double tp = static_cast<double>(cc.tp);
    const double fp = static_cast<double>(cc.fp);
    const double fn = static_cast<double>(cc.fn);
    recall_sum.add(tp + fn > 0 ? tp / (tp + fn) : 0.0);
    precision_sum.add(tp + fp > 0 ? tp / (tp + fp) : 0.0);
    jaccard_sum.add(tp + fp + fn > 0 ? tp / (tp + fp + fn) : 0.0);
  }
  const double n_classes = gt_classes.empty() ? 1.0 : static_cast<double>(gt_classes.size());
  const double n = gt.empty() ? 1.0 : static_cast<double>(gt.size());
  report.values["accuracy"] = 100.0 * static_cast<double>(matches) / n;
  report.values["recall"] = 100.0 * recall_sum.value() / n_classes;
  report.values["precision"] = 100.0 * precision_sum.value() / n_classes;
  report.values["jaccard"] = 100.0 * jaccard_sum.value() / n_classes;
  return report;
}

// --- detection ---------------------------------------------------------------

namespace {

// 101-point interpolated average precision over a ranked list of hits.
double ap_101(const std::vector<bool>& hits, std::size_t n_gt) {
  if (n_gt == 0) return 0.0;
  std::vector<double> recall(hits.size()), precision(hits.size());
  std::size_t tp = 0;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    if (hits[i]) ++tp;
    recall[i] = static_cast<double>(tp) / static_cast<double>(n_gt);
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  // Precision envelope from the right, then sample the recall grid.
  std::vector<double> envelope(precision);
  for (std::size_t i = envelope.size(); i-- > 1;) {
    envelope[i - 1] = std::max(envelope[i - 1], envelope[i]);
  }
  KahanSum sum;
  for (int g = 0; g <= 100; ++g) {
    const double r = static_cast<double>(g) / 100.0;
    double p = 0.0;
    for (std::size_t i = 0; i < recall.size(); ++i) {
      if (recall[i] + 1e-12 >= r) {
        p = envelope[i];
        break;
      }
    }
    sum.add(p);
  }
  return sum.value() / 101.0;
}

std::string gt_class(const BoundingBox& b) { return b.label.value_or(""); }

struct RankedPrediction {
  std::size_t image;
  std::size_t index;  // within image predictions
  double confidence;
};

}  // namespace

MetricReport detection_map(const DetectionSet& data) {
  MetricReport report;

  std::set<std::string> classes;  // classes with >= 1 ground-truth box
  std::size_t n_predictions = 0;
  for (const auto& img : data) {
    report.sample_count += 1;
    n_predictions += img.predictions.size();
    for (const auto& g : img.ground_truth) classes.insert(gt_class(g));
    for (const auto& p : img.predictions) {
      if (p.confidence < 0.0 || p.confidence > 1.0) {
        throw std::invalid_argument("detection_map: confidence outside [0,1]");
      }
    }
  }
  if (data.empty() || classes.empty()) {
    report.values["miou"] = 0.0;
    report.values["map50"] = 0.0;
    report.values["map75"] = 0.0;
    report.values["coco_ap"] = 0.0;
    return report;
  }

  // mIoU: each prediction's best same-class overlap; unmatched contribute 0.
  {
    KahanSum sum;
    for (const auto& img : data) {
      for (const auto& p : img.predictions) {
        double best = 0.0;
        for (const auto& g : img.ground_truth) {
          if (gt_class(g) == p.cls) best = std::max(best, iou(p.box, g));
        }
        sum.add(best);
      }
    }
    report.values["miou"] =
        n_predictions == 0 ? 0.0 : 100.0 * sum.value() / static_cast<double>(n_predictions);
  }

  const auto map_at = [&](double threshold) {
    KahanSum class_sum;
    for (const auto& cls : classes) {
      // Rank this class's predictions by confidence (stable: input order ties).
      std::vector<RankedPrediction> ranked;
      std::size_t n_gt = 0;
      for (std::size_t im = 0; im < data.size(); ++im) {
        for (const auto& g : data[im].ground_truth) {
          if (gt_class(g) == cls) ++n_gt;
        }
        for (std::size_t pi = 0; pi < data[im].predictions.size(); ++pi) {
          if (data[im].predictions[pi].cls == cls) {
            ranked.push_back({im, pi, data[im].predictions[pi].confidence});
          }
        }
      }
      std::stable_sort(ranked.begin(), ranked.end(),
                       [](const RankedPrediction& a, const RankedPrediction& b) {
                         return a.confidence > b.confidence;
                       });
      std::vector<std::vector<bool>> gt_matched(data.size());
      for (std::size_t im = 0; im < data.size(); ++im) {
        gt_matched[im].assign(data[im].ground_truth.size(), false);
      }
      std::vector<bool> hits;
      hits.reserve(ranked.size());
      for (const auto& rp : ranked) {
        const auto& img = data[rp.image];
        const auto& pb = img.predictions[rp.index].box;
        double best_iou = 0.0;
        std::size_t best_gt = 0;
        bool found = false;
        for (std::size_t gi = 0; gi < img.ground_truth.size(); ++gi) {
          if (gt_class(img.ground_truth[gi]) != cls || gt_matched[rp.image][gi]) continue;
          const double v = iou(pb, img.ground_truth[gi]);
          if (v > best_iou || !found) {
            best_iou = v;
            best_gt = gi;
            found = true;
          }
        }
        // Closed bound: IoU exactly at the threshold matches.
        if (found && best_iou >= threshold) {
          gt_matched[rp.image][best_gt] = true;
          hits.push_back(true);
        } else {
          hits.push_back(false);
        }
      }
      class_sum.add(ap_101(hits, n_gt));
    }
    return 100.0 * class_sum.value() / static_cast<double>(classes.size());
  };

  report.values["map50"] = map_at(0.50);
  report.values["map75"] = map_at(0.75);
  KahanSum coco;
  for (int t = 0; t < 10; ++t) {
    coco.add(map_at(0.50 + 0.05 * t));
  }
  report.values["coco_ap"] = coco.value() / 10.0;
  return report;
}

// --- triplets -----------------------------------------------------------------

namespace {

// Retrieval AP for one class: frames predicted as the class rank first (input
// order), everything else follows (input order).
double retrieval_ap(const std::vector<bool>& predicted, const std::vector<bool>& relevant) {
  std::vector<bool> hits;
  hits.reserve(predicted.size());
  std::size_t n_gt = 0;
  for (const bool r : relevant) {
    if (r) ++n_gt;
  }
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i]) hits.push_back(relevant[i]);
  }
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (!predicted[i]) hits.push_back(relevant[i]);
  }
  return ap_101(hits, n_gt);
}

template <typename Extract>
double component_map(std::span<const Triplet> gt, std::span<const PredTriplet> pred,
                     Extract&& extract) {
  std::set<std::string> classes;
  for (const auto& g : gt) classes.insert(extract(g));
  if (classes.empty()) return 0.0;
  KahanSum sum;
  for (const auto& cls : classes) {
    std::vector<bool> predicted(gt.size()), relevant(gt.size());
    for (std::size_t i = 0; i < gt.size(); ++i) {
      relevant[i] = extract(gt[i]) == cls;
      predicted[i] = pred[i].has_value() && extract(*pred[i]) == cls;
    }
    sum.add(retrieval_ap(predicted, relevant));
  }
  return 100.0 * sum.value() / static_cast<double>(classes.size());
}

std::string triplet_key(const Triplet& t) {
  return t.instrument + "\x1f" + t.verb + "\x1f" + t.target;
}

}  // namespace

MetricReport triplet_metrics(std::span<const Triplet> gt, std::span<const PredTriplet> pred) {
  if (gt.size() != pred.size()) {
    throw std::invalid_argument("triplet_metrics: gt/pred length mismatch");
  }
  MetricReport report;
  report.sample_count = gt.size();

  std::size_t inst = 0, verb = 0, target = 0, full = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!pred[i]) {
      ++report.parse_failures;
      continue;
    }
    const bool iok = pred[i]->instrument == gt[i].instrument;
    const bool vok = pred[i]->verb == gt[i].verb;
    const bool tok = pred[i]->target == gt[i].target;
    inst += iok;
    verb += vok;
    target += tok;
    full += iok && vok && tok;
  }
  const double n = gt.empty() ? 1.0 : static_cast<double>(gt.size());
  report.values["instrument_accuracy"] = 100.0 * static_cast<double>(inst) / n;
  report.values["verb_accuracy"] = 100.0 * static_cast<double>(verb) / n;
  report.values["target_accuracy"] = 100.0 * static_cast<double>(target) / n;
  report.values["triplet_accuracy"] = 100.0 * static_cast<double>(full) / n;

  report.values["instrument_map"] =
      component_map(gt, pred, [](const Triplet& t) { return t.instrument; });
  report.values["verb_map"] = component_map(gt, pred, [](const Triplet& t) { return t.verb; });
  report.values["target_map"] = component_map(gt, pred, [](const Triplet& t) { return t.target; });
  report.values["triplet_map"] = component_map(gt, pred, triplet_key);
  return report;
}

// --- CVS ------------------------------------------------------------------------

double cvs_average_accuracy(double c1, double c2, double c3) { return (c1 + c2 + c3) / 3.0; }

MetricReport cvs_metrics(std::span<const CvsVector> gt, std::span<const PredCvs> pred) {
  if (gt.size() != pred.size()) {
    throw std::invalid_argument("cvs_metrics: gt/pred length mismatch");
  }
  MetricReport report;
  report.sample_count = gt.size();

  const double n = gt.empty() ? 1.0 : static_cast<double>(gt.size());
  std::size_t total_correct_criteria = 0;
  std::size_t overall_correct = 0;

  for (int c = 0; c < 3; ++c) {
    std::size_t correct = 0, tp = 0, tn = 0, fp = 0, fn = 0, pos = 0, neg = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      const bool g = gt[i].criterion(c);
      g ? ++pos : ++neg;
      // ParseFailed counts wrong on every criterion.
      const bool p = pred[i] ? pred[i]->criterion(c) : !g;
      if (p == g) {
        ++correct;
        g ? ++tp : ++tn;
      } else {
        g ? ++fn : ++fp;
      }
    }
    total_correct_criteria += correct;
    const std::string suffix = "_c" + std::to_string(c + 1);
    report.values["accuracy" + suffix] = 100.0 * static_cast<double>(correct) / n;
    double balanced;
    if (pos == 0 || neg == 0) {
      balanced = static_cast<double>(correct) / n;  // single-class sample
      report.notes.push_back("balanced_accuracy" + suffix +
                             ": single-class ground truth, plain accuracy reported");
    } else {
      const double tpr = static_cast<double>(tp) / static_cast<double>(pos);
      const double tnr = static_cast<double>(tn) / static_cast<double>(neg);
      balanced = (tpr + tnr) / 2.0;
    }
    report.values["balanced_accuracy" + suffix] = 100.0 * balanced;
  }

  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!pred[i]) {
      ++report.parse_failures;
      continue;
    }
    if (pred[i]->overall() == gt[i].overall()) ++overall_correct;
  }

  // Single division keeps the average exactly equal to the criterion
  // accuracies when all three agree; it matches their arithmetic mean to
  // within one ulp otherwise.
  report.values["average_accuracy"] =
      100.0 * static_cast<double>(total_correct_criteria) / (3.0 * n);
  report.values["average_balanced_accuracy"] =
      (report.values["balanced_accuracy_c1"] + report.values["balanced_accuracy_c2"] +
       report.values["balanced_accuracy_c3"]) /
      3.0;
  report.values["overall_cvs_accuracy"] = 100.0 * static_cast<double>(overall_correct) / n;
  return report;
}

}  // namespace surgbench
