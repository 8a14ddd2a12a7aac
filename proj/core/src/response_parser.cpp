#include "surgbench/response_parser.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include "surgbench/lexicon.hpp"
#include "surgbench/strings.hpp"

namespace surgbench {

namespace {

std::string normalize(std::string_view s, const ParseConfig& cfg) {
  std::string out(s);
  if (cfg.collapse_whitespace) out = collapse_whitespace(out);
  if (cfg.fold_case) out = fold_case(out);
  return out;
}

const std::vector<std::string>& default_refusal_patterns() {
  static const std::vector<std::string> kPatterns = {
      "i cannot assist",     "cannot assist with",    "i can't assist",
      "i cannot help",       "can't help with",       "i'm unable to",
      "i am unable to",      "unable to provide",     "i must decline",
      "i can't provide",     "i cannot provide",      "cannot fulfill this request",
      "can't fulfill this",  "security check",        "security checking",
      "safety policy",       "content policy",        "against my guidelines",
      "i won't assist",      "i will not assist",     "refuse to answer",
  };
  return kPatterns;
}

}  // namespace

ParseConfig ParseConfig::defaults() {
  ParseConfig cfg;
  cfg.refusal_patterns = default_refusal_patterns();
  return cfg;
}

std::vector<std::string> ParseConfig::load_patterns(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("patterns: cannot open " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    out.push_back(t);
  }
  return out;
}

std::vector<std::string> ParseConfig::load_vocabulary(const std::string& path) {
  return load_patterns(path);
}

bool is_refusal(std::string_view response, const ParseConfig& config) {
  const std::string folded = fold_case(collapse_whitespace(response));
  for (const auto& p : config.refusal_patterns) {
    if (contains(folded, fold_case(collapse_whitespace(p)))) return true;
  }
  return false;
}

KeywordVerdict match_keyword(std::string_view response, std::span<const std::string> keywords,
                             const ParseConfig& config) {
  if (keywords.empty()) throw std::invalid_argument("match_keyword: keywords must be non-empty");
  if (is_refusal(response, config)) return KeywordVerdict::Refused;
  const std::string resp = normalize(response, config);
  for (const auto& kw : keywords) {
    const std::string k = normalize(kw, config);
    if (!k.empty() && contains(resp, k)) return KeywordVerdict::Correct;
  }
  return KeywordVerdict::Incorrect;
}

// --- parse_choice ----------------------------------------------------------

namespace {

bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_alnum_c(char c) { return is_alpha(c) || (c >= '0' && c <= '9'); }

// Reads a standalone option letter at `pos` in folded text; returns its index
// or -1. `strict_boundary` requires the letter to be followed by
// punctuation/end, which keeps the article "a" from matching at the start of
// a sentence like "a grasper is visible".
int read_option_letter(std::string_view text, std::size_t pos, std::size_t n_options,
                       bool strict_boundary) {
  bool wrapped = false;
  while (pos < text.size() && (text[pos] == ' ' || text[pos] == '(' || text[pos] == '[' ||
                               text[pos] == '*' || text[pos] == '"' || text[pos] == '\'' ||
                               text[pos] == ':')) {
    if (text[pos] == '(' || text[pos] == '[') wrapped = true;
    ++pos;
  }
  if (pos >= text.size() || !is_alpha(text[pos])) return -1;
  const int idx = text[pos] - 'a';
  if (idx < 0 || static_cast<std::size_t>(idx) >= n_options) return -1;
  const std::size_t after = pos + 1;
  if (after < text.size() && is_alnum_c(text[after])) return -1;  // part of a word
  if (after >= text.size()) return idx;
  const char c = text[after];
  if (c == '.' || c == ')' || c == ']' || c == ':' || c == ',' || c == ';' || c == '*' ||
      c == '"' || c == '\'') {
    return idx;
  }
  if (c == ' ') {
    if (wrapped || !strict_boundary) {
      // "a" followed by a word is almost always the article, not option A.
      if (!wrapped && idx == 0 && after + 1 < text.size() && is_alpha(text[after + 1])) {
        return -1;
      }
      return idx;
    }
  }
  return -1;
}

const std::set<std::string>& option_stopwords() {
  static const std::set<std::string> kStop = {"the", "a",  "an", "of", "is", "in",  "on",
                                              "and", "or", "to", "at", "it", "this", "that",
                                              "are", "was"};
  return kStop;
}

}  // namespace

ChoiceResult parse_choice(std::string_view response, std::span<const std::string> options,
                          const ParseConfig& config) {
  if (options.size() < 2) throw std::invalid_argument("parse_choice: need at least 2 options");
  ChoiceResult result;
  if (is_refusal(response, config)) {
    result.refused = true;
    return result;
  }
  const std::string resp = normalize(response, config);

  // Rule 1a: standalone letter at the response start.
  {
    std::size_t pos = 0;
    if (starts_with_ci(resp, "option")) pos = 6;
    const int idx = read_option_letter(resp, pos, options.size(), pos == 0);
    if (idx >= 0) {
      result.index = idx;
      return result;
    }
  }
  // Rule 1b: letter after the last "answer is" (also "answer:").
  for (const std::string_view anchor : {std::string_view("answer is"), std::string_view("answer:")}) {
    const std::size_t hit = resp.rfind(anchor);
    if (hit == std::string::npos) continue;
    std::size_t pos = hit + anchor.size();
    if (pos < resp.size() && starts_with_ci(std::string_view(resp).substr(pos), " option")) {
      pos += 7;
    }
    const int idx = read_option_letter(resp, pos, options.size(), false);
    if (idx >= 0) {
      result.index = idx;
      return result;
    }
  }

  // Rule 2: unique full-option-text occurrence (word-bounded).
  std::vector<int> full_matches;
  for (std::size_t i = 0; i < options.size(); ++i) {
    const std::string opt = normalize(options[i], config);
    if (opt.empty()) continue;
    std::size_t from = 0;
    while (true) {
      const std::size_t at = resp.find(opt, from);
      if (at == std::string::npos) break;
      if (word_bounded(resp, at, opt.size())) {
        full_matches.push_back(static_cast<int>(i));
        break;
      }
      from = at + 1;
    }
  }
  if (full_matches.size() == 1) {
    result.index = full_matches[0];
    return result;
  }
  if (full_matches.size() > 1) {
    return result;  // ambiguous -> ParseFailed
  }

  // Rule 3: unique option-keyword match - every content token of exactly one
  // option appears in the response.
  const auto resp_tokens = word_tokens(resp);
  const std::set<std::string> token_set(resp_tokens.begin(), resp_tokens.end());
  std::vector<int> kw_matches;
  for (std::size_t i = 0; i < options.size(); ++i) {
    std::vector<std::string> content;
    for (auto& t : word_tokens(options[i])) {
      if (!option_stopwords().count(t)) content.push_back(std::move(t));
    }
    if (content.empty()) continue;
    const bool all = std::all_of(content.begin(), content.end(),
                                 [&](const std::string& t) { return token_set.count(t) > 0; });
    if (all) kw_matches.push_back(static_cast<int>(i));
  }
  if (kw_matches.size() == 1) result.index = kw_matches[0];
  return result;
}

// --- parse_bboxes ----------------------------------------------------------

namespace {

struct NumberToken {
  double value;
  std::size_t begin, end;
};

std::vector<NumberToken> scan_numbers(std::string_view s) {
  std::vector<NumberToken> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    const bool digit = c >= '0' && c <= '9';
    const bool signed_start = (c == '-' || c == '+') && i + 1 < s.size() && s[i + 1] >= '0' &&
                              s[i + 1] <= '9';
    const bool dot_start = c == '.' && i + 1 < s.size() && s[i + 1] >= '0' && s[i + 1] <= '9';
    if (digit || signed_start || dot_start) {
      const std::size_t begin = i;
      if (c == '-' || c == '+') ++i;
      while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
      if (i < s.size() && s[i] == '.') {
        ++i;
        while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
      }
      out.push_back({std::stod(std::string(s.substr(begin, i - begin))), begin, i});
    } else {
      ++i;
    }
  }
  return out;
}

bool gap_is_separator(std::string_view s, std::size_t from, std::size_t to) {
  for (std::size_t i = from; i < to; ++i) {
    const char c = s[i];
    if (c == ' ' || c == '\t' || c == ',' || c == '(' || c == ')' || c == '[' || c == ']') {
      continue;
    }
    return false;
  }
  return true;
}

double round_half_up(double v) { return std::floor(v + 0.5); }

const std::set<std::string>& label_fillers() {
  static const std::set<std::string> kFill = {
      "at",  "is",   "are",     "was",   "were",    "located", "positioned", "found",
      "the", "a",    "an",      "in",    "on",      "of",      "and",        "with",
      "box", "bbox", "bounding", "boxes", "coordinates", "coordinate", "region",
      "position", "to", "near", "appears", "visible", "detected", "its", "it"};
  return kFill;
}

// Noun phrase immediately before `pos`: up to three content words, stopping at
// sentence punctuation or a digit.
std::optional<std::string> preceding_label(std::string_view s, std::size_t pos) {
  std::vector<std::string> words;
  std::string cur;
  std::size_t i = pos;
  auto flush = [&]() {
    if (cur.empty()) return true;
    std::reverse(cur.begin(), cur.end());
    if (!label_fillers().count(fold_case(cur))) {
      words.push_back(cur);
      if (words.size() >= 3) {
        cur.clear();
        return false;
      }
    }
    cur.clear();
    return true;
  };
  while (i > 0) {
    const char c = s[--i];
    if (is_alpha(c) || c == '-' || c == '_') {
      cur.push_back(c);
    } else if (c >= '0' && c <= '9') {
      break;  // ran into a previous coordinate group
    } else if (c == '.' || c == ';' || c == '!' || c == '?' || c == '\n') {
      break;
    } else {
      if (!words.empty() && cur.empty()) break;  // phrase ended
      if (!flush()) break;
    }
  }
  flush();
  if (words.empty()) return std::nullopt;
  std::reverse(words.begin(), words.end());
  std::string out;
  for (std::size_t k = 0; k < words.size(); ++k) {
    if (k) out += ' ';
    out += words[k];
  }
  return out;
}

}  // namespace

BboxParse parse_bboxes(std::string_view response, const ParseConfig& config) {
  BboxParse out;
  if (is_refusal(response, config)) {
    out.refused = true;
    return out;
  }
  const auto numbers = scan_numbers(response);

  // Group consecutive numbers separated only by space/comma/bracket characters.
  std::vector<std::pair<std::size_t, std::size_t>> runs;  // [first, last] indices
  std::size_t run_start = 0;
  for (std::size_t i = 1; i <= numbers.size(); ++i) {
    const bool chain = i < numbers.size() &&
                       gap_is_separator(response, numbers[i - 1].end, numbers[i].begin);
    if (!chain) {
      runs.emplace_back(run_start, i - 1);
      run_start = i;
    }
  }

  for (const auto& [first, last] : runs) {
    const std::size_t count = last - first + 1;
    std::size_t quads = count / 4;
    if (count % 4 != 0) {
      out.diagnostics.push_back("dropped " + std::to_string(count % 4) +
                                " trailing coordinate(s) in a group of " + std::to_string(count));
    }
    for (std::size_t q = 0; q < quads; ++q) {
      const std::size_t base = first + q * 4;
      const std::string_view chunk(response.data() + numbers[base].begin,
                                   numbers[base + 3].end - numbers[base].begin);
      const bool bare = chunk.find('[') == std::string_view::npos &&
                        chunk.find('(') == std::string_view::npos &&
                        chunk.find(',') == std::string_view::npos;
      const auto label = preceding_label(response, numbers[base].begin);
      if (bare && !label) {
        out.diagnostics.push_back("ignored bare quadruple without a preceding label word");
        continue;
      }
      BoundingBox b;
      b.x1 = round_half_up(numbers[base].value);
      b.y1 = round_half_up(numbers[base + 1].value);
      b.x2 = round_half_up(numbers[base + 2].value);
      b.y2 = round_half_up(numbers[base + 3].value);
      if (q == 0 && label) b.label = *label;
      if (!b.valid()) {
        out.diagnostics.push_back("dropped invalid quadruple [" + std::to_string(b.x1) + ", " +
                                  std::to_string(b.y1) + ", " + std::to_string(b.x2) + ", " +
                                  std::to_string(b.y2) + "]");
        continue;
      }
      out.boxes.push_back(std::move(b));
    }
  }
  return out;
}

// --- vocabulary scans -------------------------------------------------------

namespace {

struct VocabMatch {
  std::size_t pos;
  std::size_t len;
  std::size_t member;  // index into vocabulary
};

// All word-bounded occurrences of any surface form of any vocabulary member,
// resolved longest-match-first so "cystic duct" wins over "duct".
std::vector<VocabMatch> scan_vocab(const std::string& resp,
                                   std::span<const std::string> vocabulary,
                                   const Lexicon* lexicon) {
  std::vector<VocabMatch> candidates;
  for (std::size_t m = 0; m < vocabulary.size(); ++m) {
    std::vector<std::string> forms;
    forms.push_back(vocabulary[m]);
    if (lexicon) {
      for (auto& f : lexicon->surface_forms(vocabulary[m])) forms.push_back(std::move(f));
    }
    for (const auto& form : forms) {
      const std::string f = fold_case(collapse_whitespace(form));
      if (f.empty()) continue;
      std::size_t from = 0;
      while (true) {
        const std::size_t at = resp.find(f, from);
        if (at == std::string::npos) break;
        if (word_bounded(resp, at, f.size())) candidates.push_back({at, f.size(), m});
        from = at + 1;
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const VocabMatch& a, const VocabMatch& b) {
    if (a.pos != b.pos) return a.pos < b.pos;
    return a.len > b.len;
  });
  std::vector<VocabMatch> accepted;
  std::size_t cursor = 0;
  for (const auto& c : candidates) {
    if (c.pos < cursor) continue;
    accepted.push_back(c);
    cursor = c.pos + c.len;
  }
  return accepted;
}

std::optional<std::size_t> unique_member(const std::vector<VocabMatch>& matches) {
  std::set<std::size_t> members;
  for (const auto& m : matches) members.insert(m.member);
  if (members.size() == 1) return *members.begin();
  return std::nullopt;
}

}  // namespace

std::optional<std::string> match_vocab(std::string_view response,
                                       std::span<const std::string> vocabulary,
                                       const ParseConfig& config) {
  const std::string resp = normalize(response, config);
  const auto matches = scan_vocab(resp, vocabulary, config.lexicon);
  const auto m = unique_member(matches);
  if (!m) return std::nullopt;
  return vocabulary[*m];
}

std::optional<GridCell> parse_grid_cell(std::string_view response, const ParseConfig& config) {
  static const std::vector<std::string> kCells = {"left", "right", "top", "bottom", "center"};
  const auto hit = match_vocab(response, kCells, config);
  if (!hit) return std::nullopt;
  return grid_cell_from_string(*hit);
}

TripletParse parse_triplet(std::string_view response, const TripletVocab& vocab,
                           const ParseConfig& config) {
  TripletParse out;
  if (is_refusal(response, config)) {
    out.refused = true;
    return out;
  }
  const std::string resp = normalize(response, config);
  const auto inst = unique_member(scan_vocab(resp, vocab.instruments, config.lexicon));
  const auto verb = unique_member(scan_vocab(resp, vocab.verbs, config.lexicon));
  const auto target = unique_member(scan_vocab(resp, vocab.targets, config.lexicon));
  if (!inst || !verb || !target) return out;
  out.triplet = Triplet{vocab.instruments[*inst], vocab.verbs[*verb], vocab.targets[*target]};
  return out;
}

// --- parse_cvs ---------------------------------------------------------------

namespace {

const std::vector<std::string>& cvs_positive_words() {
  static const std::vector<std::string> kPos = {
      "yes",     "achieved", "met",      "satisfied", "fulfilled", "present", "true",
      "exposed", "cleared",  "identified", "complete", "visible",  "confirmed"};
  return kPos;
}

const std::vector<std::string>& cvs_negative_words() {
  static const std::vector<std::string> kNeg = {
      "no",     "not",    "unmet",     "unsatisfied", "absent",    "false",  "fails",
      "failed", "missing", "incomplete", "unachieved", "unfulfilled", "none", "cannot"};
  return kNeg;
}

// -1 negative, +1 positive, 0 no polarity. Negation wins inside a segment so
// "not achieved" reads negative.
int segment_polarity(const std::vector<std::string>& tokens) {
  for (const auto& t : tokens) {
    for (const auto& n : cvs_negative_words()) {
      if (t == n) return -1;
    }
  }
  for (const auto& t : tokens) {
    for (const auto& p : cvs_positive_words()) {
      if (t == p) return 1;
    }
  }
  return 0;
}

const std::vector<std::string>& criterion_aliases(int i) {
  static const std::vector<std::string> kC1 = {"criterion 1", "criterion one", "first criterion",
                                               "c1", "cystic plate"};
  static const std::vector<std::string> kC2 = {"criterion 2",    "criterion two",
                                               "second criterion", "c2", "lower third",
                                               "lower one third"};
  static const std::vector<std::string> kC3 = {"criterion 3", "criterion three",
                                               "third criterion", "c3", "two structures",
                                               "2 structures"};
  switch (i) {
    case 0: return kC1;
    case 1: return kC2;
    default: return kC3;
  }
}

}  // namespace

CvsParse parse_cvs(std::string_view response, const ParseConfig& config) {
  CvsParse out;
  if (is_refusal(response, config)) {
    out.refused = true;
    return out;
  }
  const std::string resp = fold_case(collapse_whitespace(response));

  // Segment at sentence-ish punctuation.
  std::vector<std::string> segments;
  {
    std::string cur;
    for (const char c : resp) {
      if (c == '.' || c == ';' || c == '!' || c == '?') {
        if (!trim(cur).empty()) segments.push_back(trim(cur));
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    if (!trim(cur).empty()) segments.push_back(trim(cur));
  }

  std::array<std::optional<bool>, 3> criteria;

  // Anchored mentions first.
  for (const auto& seg : segments) {
    const auto tokens = word_tokens(seg);
    const int polarity = segment_polarity(tokens);
    if (polarity == 0) continue;
    for (int i = 0; i < 3; ++i) {
      for (const auto& alias : criterion_aliases(i)) {
        std::size_t from = 0;
        bool found = false;
        while (!found) {
          const std::size_t at = seg.find(alias, from);
          if (at == std::string::npos) break;
          if (word_bounded(seg, at, alias.size())) found = true;
          from = at + 1;
        }
        if (found) {
          criteria[static_cast<std::size_t>(i)] = polarity > 0;
          break;
        }
      }
    }
  }

  // "All three criteria ..." fills whatever is still unset.
  for (const auto& seg : segments) {
    if (!contains(seg, "criteria") && !contains(seg, "criterions")) continue;
    if (!contains(seg, "all") && !contains(seg, "three") && !contains(seg, "every") &&
        !contains(seg, "none")) {
      continue;
    }
    int polarity = segment_polarity(word_tokens(seg));
    if (contains(seg, "none")) polarity = -1;
    if (polarity == 0) continue;
    for (auto& c : criteria) {
      if (!c) c = polarity > 0;
    }
  }

  // Positional list ("yes, no, yes") only when nothing was anchored.
  const bool any_set = criteria[0] || criteria[1] || criteria[2];
  if (!any_set) {
    const auto tokens = word_tokens(resp);
    std::vector<bool> flags;
    for (const auto& t : tokens) {
      if (t == "yes") {
        flags.push_back(true);
      } else if (t == "no") {
        flags.push_back(false);
      } else if (t == "and" || t == "then") {
        continue;
      } else if (!flags.empty() && flags.size() < 3) {
        flags.clear();
      }
      if (flags.size() == 3) break;
    }
    if (flags.size() == 3) {
      for (int i = 0; i < 3; ++i) criteria[static_cast<std::size_t>(i)] = flags[static_cast<std::size_t>(i)];
    }
  }

  if (criteria[0] && criteria[1] && criteria[2]) {
    CvsVector v;
    v.cystic_plate = *criteria[0];
    v.lower_third = *criteria[1];
    v.two_structures = *criteria[2];
    out.cvs = v;
  }
  return out;
}

}  // namespace surgbench
