#pragma once
// Converts raw model response text into structured answers under the OV and
// MCQ protocols. Matching is strict: case-insensitive substring after
// whitespace collapsing, no stemming and no synonym expansion in the scoring
// path. Refusal detection runs before every other rule.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "surgbench/datamodel.hpp"

namespace surgbench {

class Lexicon;

struct ParseConfig {
  bool fold_case = true;
  bool collapse_whitespace = true;
  std::vector<std::string> refusal_patterns;  // non-empty in the default config
  std::map<TaskKind, std::vector<std::string>> vocabularies;
  const Lexicon* lexicon = nullptr;  // canonicalization before vocabulary matching

  static ParseConfig defaults();
  // Line-delimited pattern file; '#' comments allowed.
  static std::vector<std::string> load_patterns(const std::string& path);
  static std::vector<std::string> load_vocabulary(const std::string& path);
};

bool is_refusal(std::string_view response, const ParseConfig& config);

// --- keyword matching (OV protocol) --------------------------------------

enum class KeywordVerdict { Correct, Incorrect, Refused };

// Correct iff at least one keyword occurs as a contiguous substring of the
// response after the configured normalization. Punctuation inside keywords
// must match exactly.
KeywordVerdict match_keyword(std::string_view response, std::span<const std::string> keywords,
                             const ParseConfig& config);

// --- option selection (MCQ protocol) --------------------------------------

struct ChoiceResult {
  int index = -1;  // -1 = ParseFailed (scores as incorrect downstream)
  bool refused = false;
  bool ok() const { return index >= 0; }
};

// Resolution order: (1) standalone option letter at the response start or
// after "answer is"; (2) unique full-option-text substring; (3) unique
// option-keyword match.
ChoiceResult parse_choice(std::string_view response, std::span<const std::string> options,
                          const ParseConfig& config);

// --- structured answers ----------------------------------------------------

struct BboxParse {
  std::vector<BoundingBox> boxes;
  bool refused = false;
  std::vector<std::string> diagnostics;  // dropped invalid quadruples
};

// Accepts "[x1, y1, x2, y2]", "(x1,y1),(x2,y2)", and "x1 y1 x2 y2" after a
// label word; coordinates are parsed as reals and rounded half-up.
BboxParse parse_bboxes(std::string_view response, const ParseConfig& config);

struct TripletParse {
  std::optional<Triplet> triplet;  // nullopt = ParseFailed
  bool refused = false;
};

// One vocabulary member per component by longest-match scan on word
// boundaries; ambiguity (two distinct members of one component) fails.
TripletParse parse_triplet(std::string_view response, const TripletVocab& vocab,
                           const ParseConfig& config);

struct CvsParse {
  std::optional<CvsVector> cvs;  // nullopt = ParseFailed
  bool refused = false;
};

// Per criterion, affirmative/negative assertions near criterion mentions, a
// positional answer list ("yes, no, yes"), or an all-three statement. All
// three criteria required.
CvsParse parse_cvs(std::string_view response, const ParseConfig& config);

// Unique vocabulary member contained in the response (longest-match scan with
// lexicon canonicalization); nullopt when none or ambiguous. This is the OV
// classification parse used by the harness.
std::optional<std::string> match_vocab(std::string_view response,
                                       std::span<const std::string> vocabulary,
                                       const ParseConfig& config);

std::optional<GridCell> parse_grid_cell(std::string_view response, const ParseConfig& config);

}  // namespace surgbench
