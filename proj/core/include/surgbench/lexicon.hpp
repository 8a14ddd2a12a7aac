#pragma once
// Terminology lexicon: raw label -> canonical term mappings plus replacement
// sentences for ambiguous labels ("other" and friends). Loaded from a TSV
// data file so clinical terminology can be revised without rebuilds.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace surgbench {

struct LexiconEntry {
  enum class Kind { Mapping, Sentence } kind = Kind::Mapping;
  std::string raw;
  std::string replacement;
  std::string provenance;
};

class Lexicon {
 public:
  Lexicon() = default;

  // TSV columns: kind(map|sentence) <TAB> raw <TAB> replacement [<TAB> provenance]
  // '#' lines are comments. Throws std::runtime_error on malformed rows or
  // invariant violations (duplicate raw keys, empty canonical terms, canonical
  // terms that map away from themselves).
  static Lexicon load(const std::string& path);
  static Lexicon from_entries(std::vector<LexiconEntry> entries);

  // Canonical form of a raw label. Mapping entries return the canonical term,
  // sentence entries the full replacement sentence, unknown labels the input.
  // Lookup folds case and collapses whitespace.
  std::string canonicalize(std::string_view raw) const;

  // Same, but reports what happened.
  enum class Outcome { Unchanged, Mapped, SentenceReplaced };
  std::pair<std::string, Outcome> canonicalize_with_outcome(std::string_view raw) const;

  bool is_ambiguous(std::string_view raw) const;
  const LexiconEntry* find(std::string_view raw) const;
  std::size_t size() const { return entries_.size(); }
  const std::vector<LexiconEntry>& entries() const { return entries_; }

  // Surface forms that canonicalize to `canonical` (including itself).
  // Used by the triplet parser to accept raw variants before matching.
  std::vector<std::string> surface_forms(std::string_view canonical) const;

 private:
  void index();
  std::vector<LexiconEntry> entries_;
  std::map<std::string, std::size_t> by_folded_raw_;
};

}  // namespace surgbench
