#include "oracles.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <map>
#include <set>

namespace surgbench::oracle {

ClassificationScores brute_force_classification(std::span<const std::string> gt,
                                                std::span<const PredLabel> pred) {
  std::set<std::string> gt_classes(gt.begin(), gt.end());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (pred[i] && *pred[i] == gt[i]) ++hits;
  }
  double recall_sum = 0, precision_sum = 0, jaccard_sum = 0;
  for (const auto& c : gt_classes) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      const bool is_gt = gt[i] == c;
      const bool is_pred = pred[i].has_value() && *pred[i] == c;
      if (is_gt && is_pred) ++tp;
      if (!is_gt && is_pred) ++fp;
      if (is_gt && !is_pred) ++fn;
    }
    recall_sum += tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    precision_sum += tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    jaccard_sum +=
        tp + fp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp + fn) : 0.0;
  }
  const double k = gt_classes.empty() ? 1.0 : static_cast<double>(gt_classes.size());
  const double n = gt.empty() ? 1.0 : static_cast<double>(gt.size());
  ClassificationScores out;
  out.accuracy = 100.0 * static_cast<double>(hits) / n;
  out.recall = 100.0 * recall_sum / k;
  out.precision = 100.0 * precision_sum / k;
  out.jaccard = 100.0 * jaccard_sum / k;
  return out;
}

namespace {

double box_iou(const BoundingBox& a, const BoundingBox& b) {
  const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (w <= 0 || h <= 0) return 0;
  const double inter = w * h;
  return inter / ((a.x2 - a.x1) * (a.y2 - a.y1) + (b.x2 - b.x1) * (b.y2 - b.y1) - inter);
}

double ap_from_points(const std::vector<std::pair<double, double>>& recall_precision,
                      std::size_t n_gt) {
  if (n_gt == 0) return 0;
  double sum = 0;
  for (int g = 0; g <= 100; ++g) {
    const double r = g / 100.0;
    double best = 0;
    for (const auto& [rec, prec] : recall_precision) {
      if (rec + 1e-12 >= r) best = std::max(best, prec);
    }
    sum += best;
  }
  return sum / 101.0;
}

}  // namespace

double detection_map_at(const DetectionSet& scenes, double threshold) {
  std::set<std::string> classes;
  for (const auto& s : scenes) {
    for (const auto& g : s.ground_truth) classes.insert(g.label.value_or(""));
  }
  if (classes.empty()) return 0;

  double total = 0;
  for (const auto& cls : classes) {
    struct Entry {
      double confidence;
      std::size_t scene, index, order;
    };
    std::vector<Entry> entries;
    std::size_t n_gt = 0, order = 0;
    for (std::size_t s = 0; s < scenes.size(); ++s) {
      for (const auto& g : scenes[s].ground_truth) {
        if (g.label.value_or("") == cls) ++n_gt;
      }
      for (std::size_t p = 0; p < scenes[s].predictions.size(); ++p) {
        if (scenes[s].predictions[p].cls == cls) entries.push_back({
            scenes[s].predictions[p].confidence, s, p, order++});
      }
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      if (a.confidence != b.confidence) return a.confidence > b.confidence;
      return a.order < b.order;
    });
    std::map<std::pair<std::size_t, std::size_t>, bool> used;
    std::vector<std::pair<double, double>> points;
    std::size_t tp = 0;
    for (std::size_t rank = 0; rank < entries.size(); ++rank) {
      const auto& e = entries[rank];
      double best = -1;
      std::size_t best_g = 0;
      for (std::size_t g = 0; g < scenes[e.scene].ground_truth.size(); ++g) {
        const auto& gt = scenes[e.scene].ground_truth[g];
        if (gt.label.value_or("") != cls || used[{e.scene, g}]) continue;
        const double v = box_iou(scenes[e.scene].predictions[e.index].box, gt);
        if (v > best) {
          best = v;
          best_g = g;
        }
      }
      if (best >= threshold && best >= 0) {
        used[{e.scene, best_g}] = true;
        ++tp;
      }
      points.emplace_back(static_cast<double>(tp) / static_cast<double>(n_gt),
                          static_cast<double>(tp) / static_cast<double>(rank + 1));
    }
    total += ap_from_points(points, n_gt);
  }
  return 100.0 * total / static_cast<double>(classes.size());
}

double detection_miou(const DetectionSet& scenes) {
  double sum = 0;
  std::size_t count = 0;
  for (const auto& s : scenes) {
    for (const auto& p : s.predictions) {
      double best = 0;
      for (const auto& g : s.ground_truth) {
        if (g.label.value_or("") == p.cls) best = std::max(best, box_iou(p.box, g));
      }
      sum += best;
      ++count;
    }
  }
  return count == 0 ? 0.0 : 100.0 * sum / static_cast<double>(count);
}

double triplet_component_map(std::span<const Triplet> gt, std::span<const PredTriplet> pred,
                             const std::function<std::string(const Triplet&)>& extract) {
  std::set<std::string> classes;
  for (const auto& g : gt) classes.insert(extract(g));
  double total = 0;
  for (const auto& cls : classes) {
    std::vector<std::size_t> ranking;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      if (pred[i] && extract(*pred[i]) == cls) ranking.push_back(i);
    }
    for (std::size_t i = 0; i < gt.size(); ++i) {
      if (!(pred[i] && extract(*pred[i]) == cls)) ranking.push_back(i);
    }
    std::size_t n_gt = 0;
    for (const auto& g : gt) {
      if (extract(g) == cls) ++n_gt;
    }
    std::vector<std::pair<double, double>> points;
    std::size_t tp = 0;
    for (std::size_t rank = 0; rank < ranking.size(); ++rank) {
      if (extract(gt[ranking[rank]]) == cls) ++tp;
      points.emplace_back(static_cast<double>(tp) / static_cast<double>(n_gt),
                          static_cast<double>(tp) / static_cast<double>(rank + 1));
    }
    total += ap_from_points(points, n_gt);
  }
  return classes.empty() ? 0.0 : 100.0 * total / static_cast<double>(classes.size());
}

TripletAccuracies count_triplet_accuracies(std::span<const Triplet> gt,
                                           std::span<const PredTriplet> pred) {
  TripletAccuracies out;
  std::size_t i = 0, v = 0, t = 0, full = 0;
  for (std::size_t k = 0; k < gt.size(); ++k) {
    if (!pred[k]) continue;
    const bool iok = pred[k]->instrument == gt[k].instrument;
    const bool vok = pred[k]->verb == gt[k].verb;
    const bool tok = pred[k]->target == gt[k].target;
    i += iok;
    v += vok;
    t += tok;
    full += iok && vok && tok;
  }
  const double n = gt.empty() ? 1.0 : static_cast<double>(gt.size());
  out.instrument = 100.0 * static_cast<double>(i) / n;
  out.verb = 100.0 * static_cast<double>(v) / n;
  out.target = 100.0 * static_cast<double>(t) / n;
  out.triplet = 100.0 * static_cast<double>(full) / n;
  return out;
}

double rouge1_recall(const std::string& candidate, const std::string& reference) {
  auto tokens = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (const char c : s) {
      if (std::isalnum(static_cast<unsigned char>(c))) {
        cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      } else if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
  };
  const auto cand = tokens(candidate);
  const auto ref = tokens(reference);
  if (ref.empty()) return 0;
  std::map<std::string, int> cand_counts;
  for (const auto& w : cand) ++cand_counts[w];
  std::map<std::string, int> ref_counts;
  for (const auto& w : ref) ++ref_counts[w];
  int overlap = 0;
  for (const auto& [w, c] : ref_counts) {
    const auto it = cand_counts.find(w);
    if (it != cand_counts.end()) overlap += std::min(c, it->second);
  }
  return static_cast<double>(overlap) / static_cast<double>(ref.size());
}

std::vector<double> rope_1d_complex(std::span<const double> x, double position, double base) {
  std::vector<double> out(x.size());
  for (std::size_t j = 0; 2 * j + 1 < x.size(); ++j) {
    const double theta = std::pow(base, -2.0 * static_cast<double>(j) / static_cast<double>(x.size()));
    const std::complex<double> rot = std::polar(1.0, position * theta);
    const std::complex<double> v(x[2 * j], x[2 * j + 1]);
    const std::complex<double> r = v * rot;
    out[2 * j] = r.real();
    out[2 * j + 1] = r.imag();
  }
  return out;
}

std::size_t window_pair_count(int rows, int cols, int window) {
  std::size_t count = 0;
  for (int r1 = 0; r1 < rows; ++r1) {
    for (int c1 = 0; c1 < cols; ++c1) {
      for (int r2 = 0; r2 < rows; ++r2) {
        for (int c2 = 0; c2 < cols; ++c2) {
          if (r1 / window == r2 / window && c1 / window == c2 / window) ++count;
        }
      }
    }
  }
  return count;
}

OverlapBound sample_overlap_bound(std::size_t n, std::size_t k) {
  const double N = static_cast<double>(n);
  const double K = static_cast<double>(k);
  OverlapBound out;
  out.mean = K * K / N;
  out.stddev = std::sqrt(K * (K / N) * (1.0 - K / N) * ((N - K) / (N - 1.0)));
  return out;
}

double cvs_balanced_accuracy(std::span<const bool> gt, std::span<const bool> pred) {
  std::size_t tp = 0, tn = 0, pos = 0, neg = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i]) {
      ++pos;
      if (pred[i]) ++tp;
    } else {
      ++neg;
      if (!pred[i]) ++tn;
    }
  }
  if (pos == 0 || neg == 0) {
    const double correct = static_cast<double>(tp + tn);
    return gt.empty() ? 0.0 : 100.0 * correct / static_cast<double>(gt.size());
  }
  const double tpr = static_cast<double>(tp) / static_cast<double>(pos);
  const double tnr = static_cast<double>(tn) / static_cast<double>(neg);
  return 100.0 * (tpr + tnr) / 2.0;
}

}  // namespace surgbench::oracle
