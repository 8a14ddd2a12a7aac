#include "surgbench/lexicon.hpp"

#include <fstream>
#include <stdexcept>

#include "surgbench/strings.hpp"

namespace surgbench {

namespace {
std::string fold_key(std::string_view s) { return fold_case(collapse_whitespace(s)); }
}  // namespace

Lexicon Lexicon::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("lexicon: cannot open " + path);
  std::vector<LexiconEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto cols = split(line, '\t');
    if (cols.size() < 3) {
      throw std::runtime_error("lexicon: " + path + ":" + std::to_string(line_no) +
                               ": expected kind<TAB>raw<TAB>replacement");
    }
    LexiconEntry e;
    const std::string kind = trim(cols[0]);
    if (kind == "map") {
      e.kind = LexiconEntry::Kind::Mapping;
    } else if (kind == "sentence") {
      e.kind = LexiconEntry::Kind::Sentence;
    } else {
      throw std::runtime_error("lexicon: " + path + ":" + std::to_string(line_no) +
                               ": unknown kind \"" + kind + "\"");
    }
    e.raw = trim(cols[1]);
    e.replacement = trim(cols[2]);
    if (cols.size() > 3) e.provenance = trim(cols[3]);
    entries.push_back(std::move(e));
  }
  return from_entries(std::move(entries));
}

Lexicon Lexicon::from_entries(std::vector<LexiconEntry> entries) {
  Lexicon lex;
  lex.entries_ = std::move(entries);
  lex.index();
  return lex;
}

void Lexicon::index() {
  by_folded_raw_.clear();
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.raw.empty()) throw std::runtime_error("lexicon: empty raw label");
    if (e.replacement.empty()) throw std::runtime_error("lexicon: empty replacement for \"" + e.raw + "\"");
    const auto [it, inserted] = by_folded_raw_.emplace(fold_key(e.raw), i);
    if (!inserted) {
      throw std::runtime_error("lexicon: duplicate raw label \"" + e.raw +
                               "\" (mapping must be functional)");
    }
  }
  // Canonical terms must be fixed points: if a canonical term appears as a raw
  // key it has to map to itself, otherwise chains/cycles would creep in.
  for (const auto& e : entries_) {
    if (e.kind != LexiconEntry::Kind::Mapping) continue;
    const auto it = by_folded_raw_.find(fold_key(e.replacement));
    if (it != by_folded_raw_.end()) {
      const auto& target = entries_[it->second];
      if (fold_key(target.replacement) != fold_key(e.replacement)) {
        throw std::runtime_error("lexicon: canonical term \"" + e.replacement +
                                 "\" maps onward to \"" + target.replacement + "\"");
      }
    }
  }
}

const LexiconEntry* Lexicon::find(std::string_view raw) const {
  const auto it = by_folded_raw_.find(fold_key(raw));
  return it == by_folded_raw_.end() ? nullptr : &entries_[it->second];
}

std::string Lexicon::canonicalize(std::string_view raw) const {
  return canonicalize_with_outcome(raw).first;
}

std::pair<std::string, Lexicon::Outcome> Lexicon::canonicalize_with_outcome(
    std::string_view raw) const {
  const LexiconEntry* e = find(raw);
  if (!e) return {std::string(raw), Outcome::Unchanged};
  if (e->kind == LexiconEntry::Kind::Sentence) return {e->replacement, Outcome::SentenceReplaced};
  if (fold_key(e->replacement) == fold_key(raw)) return {e->replacement, Outcome::Unchanged};
  return {e->replacement, Outcome::Mapped};
}

bool Lexicon::is_ambiguous(std::string_view raw) const {
  const LexiconEntry* e = find(raw);
  return e && e->kind == LexiconEntry::Kind::Sentence;
}

std::vector<std::string> Lexicon::surface_forms(std::string_view canonical) const {
  std::vector<std::string> out;
  out.emplace_back(canonical);
  const std::string canon = fold_key(canonical);
  for (const auto& e : entries_) {
    if (e.kind != LexiconEntry::Kind::Mapping) continue;
    if (fold_key(e.replacement) == canon && fold_key(e.raw) != canon) {
      out.push_back(e.raw);
    }
  }
  return out;
}

}  // namespace surgbench
