#pragma once
// Evaluation metrics: classification accuracy/recall/precision/jaccard,
// box detection (mIoU, mAP@50/75, COCO AP), text overlap (BLEU-4, METEOR,
// ROUGE-1), triplet accuracies/mAP, and CVS accuracy/balanced accuracy.
// Every reported value is on the 0-100 percentage scale.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "surgbench/datamodel.hpp"

namespace surgbench {

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, fn = 0;
};

struct MetricReport {
  std::map<std::string, double> values;  // fixed key names, 0-100 scale
  std::size_t sample_count = 0;
  std::size_t parse_failures = 0;
  std::size_t refusals = 0;
  std::vector<std::string> notes;

  double at(const std::string& key) const;  // throws on missing key
  std::string to_json_string() const;
  static MetricReport from_json_string(const std::string& text);
  static MetricReport load(const std::string& path);
  void save(const std::string& path) const;
};

// Intersection-over-union with the half-open pixel-area convention
// area = (x2-x1)*(y2-y1). Symmetric; 0 for disjoint boxes.
double iou(const BoundingBox& a, const BoundingBox& b);

// nullopt = ParseFailed: counts as a wrong prediction of a reserved null
// class (a false negative for the true class, no false positive anywhere).
using PredLabel = std::optional<std::string>;

// Keys: accuracy, recall, precision, jaccard. Recall/precision/jaccard are
// computed per class and macro-averaged over classes present in gt.
MetricReport classification_report(std::span<const std::string> gt,
                                   std::span<const PredLabel> pred,
                                   std::span<const std::string> class_set);

struct ScoredBox {
  BoundingBox box;
  std::string cls;
  double confidence = 1.0;  // in [0, 1]
};

struct ImageDetections {
  std::vector<ScoredBox> predictions;
  std::vector<BoundingBox> ground_truth;  // class carried in BoundingBox::label
};

using DetectionSet = std::vector<ImageDetections>;

// Keys: miou, map50, map75, coco_ap. Greedy confidence matching per class per
// image, IoU >= threshold (closed bound), AP via 101-point interpolation,
// mAP over classes with at least one ground-truth box. mIoU averages each
// prediction's best same-class overlap; unmatched predictions contribute 0.
MetricReport detection_map(const DetectionSet& data);

struct TextOverlapScores {
  double bleu4 = 0, meteor = 0, rouge1 = 0;  // per-pair, in [0, 1]
};
TextOverlapScores text_overlap_pair(const std::string& candidate, const std::string& reference);

// Keys: bleu4, meteor, rouge1 (corpus = mean of per-pair scores, x100).
MetricReport text_overlap(std::span<const std::string> candidates,
                          std::span<const std::string> references);

using PredTriplet = std::optional<Triplet>;  // nullopt = ParseFailed

// Keys: instrument_accuracy, verb_accuracy, target_accuracy, triplet_accuracy,
// instrument_map, verb_map, target_map, triplet_map.
MetricReport triplet_metrics(std::span<const Triplet> gt, std::span<const PredTriplet> pred);

using PredCvs = std::optional<CvsVector>;  // nullopt = ParseFailed, wrong on all criteria

// Keys: accuracy_c1..c3, average_accuracy, balanced_accuracy_c1..c3,
// average_balanced_accuracy, overall_cvs_accuracy. Balanced accuracy falls
// back to plain accuracy (flagged in notes) when a criterion is single-class
// in the sample.
MetricReport cvs_metrics(std::span<const CvsVector> gt, std::span<const PredCvs> pred);

// The averaging convention for the CVS "average accuracy" column: arithmetic
// mean of the three per-criterion accuracies.
double cvs_average_accuracy(double c1, double c2, double c3);

}  // namespace surgbench
