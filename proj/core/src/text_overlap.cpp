#include <cmath>
#include <map>
#include <stdexcept>

#include "surgbench/kahan.hpp"
#include "surgbench/metrics.hpp"
#include "surgbench/stemmer.hpp"
#include "surgbench/strings.hpp"

namespace surgbench {

namespace {

constexpr double kBleuEpsilon = 1e-9;  // numerator floor so near-misses stay > 0

std::map<std::vector<std::string>, int> ngram_counts(const std::vector<std::string>& tokens,
                                                     std::size_t n) {
  std::map<std::vector<std::string>, int> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    counts[std::vector<std::string>(tokens.begin() + static_cast<long>(i),
                                    tokens.begin() + static_cast<long>(i + n))]++;
  }
  return counts;
}

double bleu4(const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
  if (cand.empty()) return 0.0;
  const std::size_t n_max = std::min<std::size_t>(4, cand.size());
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= n_max; ++n) {
    const auto cc = ngram_counts(cand, n);
    const auto rc = ngram_counts(ref, n);
    std::size_t total = 0;
    double clipped = 0.0;
    for (const auto& [gram, count] : cc) {
      total += static_cast<std::size_t>(count);
      const auto it = rc.find(gram);
      if (it != rc.end()) clipped += std::min(count, it->second);
    }
    if (total == 0) return 0.0;
    const double p = std::max(clipped, kBleuEpsilon) / static_cast<double>(total);
    log_sum += std::log(p);
  }
  const double geo = std::exp(log_sum / static_cast<double>(n_max));
  const double c = static_cast<double>(cand.size());
  const double r = static_cast<double>(ref.size());
  const double bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
  return bp * geo;
}

struct MatchPair {
  std::size_t cand, ref;
};

// Exact matches first, stemmed matches on the leftovers, each token used at
// most once, in-order greedy assignment.
std::vector<MatchPair> align(const std::vector<std::string>& cand,
                             const std::vector<std::string>& ref) {
  std::vector<MatchPair> pairs;
  std::vector<bool> cand_used(cand.size(), false), ref_used(ref.size(), false);
  for (std::size_t i = 0; i < cand.size(); ++i) {
    for (std::size_t j = 0; j < ref.size(); ++j) {
      if (!ref_used[j] && cand[i] == ref[j]) {
        pairs.push_back({i, j});
        cand_used[i] = true;
        ref_used[j] = true;
        break;
      }
    }
  }
  for (std::size_t i = 0; i < cand.size(); ++i) {
    if (cand_used[i]) continue;
    const std::string cs = porter_stem(cand[i]);
    for (std::size_t j = 0; j < ref.size(); ++j) {
      if (!ref_used[j] && cs == porter_stem(ref[j])) {
        pairs.push_back({i, j});
        cand_used[i] = true;
        ref_used[j] = true;
        break;
      }
    }
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const MatchPair& a, const MatchPair& b) { return a.cand < b.cand; });
  return pairs;
}

// Harmonic-mean F with alpha = 0.9 plus the fragmentation penalty
// 0.5*(chunks/matches)^3. A single contiguous chunk carries no penalty, so
// candidate == reference scores exactly 1. Synonym matching is intentionally
// not implemented; only exact and stemmed matches count.
double meteor(const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
  if (cand.empty() || ref.empty()) return 0.0;
  const auto pairs = align(cand, ref);
  const double m = static_cast<double>(pairs.size());
  if (m == 0) return 0.0;
  const double precision = m / static_cast<double>(cand.size());
  const double recall = m / static_cast<double>(ref.size());
  const double alpha = 0.9;
  const double fmean =
      (precision * recall) / (alpha * precision + (1.0 - alpha) * recall);
  std::size_t chunks = 1;
  for (std::size_t k = 1; k < pairs.size(); ++k) {
    if (pairs[k].cand != pairs[k - 1].cand + 1 || pairs[k].ref != pairs[k - 1].ref + 1) {
      ++chunks;
    }
  }
  const double penalty =
      chunks <= 1 ? 0.0 : 0.5 * std::pow(static_cast<double>(chunks) / m, 3.0);
  return fmean * (1.0 - penalty);
}

double rouge1(const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
  if (ref.empty()) return 0.0;
  const auto cc = ngram_counts(cand, 1);
  const auto rc = ngram_counts(ref, 1);
  double overlap = 0.0;
  for (const auto& [gram, count] : rc) {
    const auto it = cc.find(gram);
    if (it != cc.end()) overlap += std::min(count, it->second);
  }
  return overlap / static_cast<double>(ref.size());
}

}  // namespace

TextOverlapScores text_overlap_pair(const std::string& candidate, const std::string& reference) {
  const auto ref = word_tokens(reference);
  if (ref.empty()) throw std::invalid_argument("text_overlap: empty reference");
  const auto cand = word_tokens(candidate);
  TextOverlapScores s;
  s.bleu4 = bleu4(cand, ref);
  s.meteor = meteor(cand, ref);
  s.rouge1 = rouge1(cand, ref);
  return s;
}

MetricReport text_overlap(std::span<const std::string> candidates,
                          std::span<const std::string> references) {
  if (candidates.size() != references.size()) {
    throw std::invalid_argument("text_overlap: candidate/reference length mismatch");
  }
  MetricReport report;
  report.sample_count = candidates.size();
  KahanSum b, m, r;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto s = text_overlap_pair(candidates[i], references[i]);
    b.add(s.bleu4);
    m.add(s.meteor);
    r.add(s.rouge1);
  }
  const double n = candidates.empty() ? 1.0 : static_cast<double>(candidates.size());
  report.values["bleu4"] = 100.0 * b.value() / n;
  report.values["meteor"] = 100.0 * m.value() / n;
  report.values["rouge1"] = 100.0 * r.value() / n;
  return report;
}

}  // namespace surgbench
