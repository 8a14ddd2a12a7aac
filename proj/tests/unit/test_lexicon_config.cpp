#include <doctest.h>

#include "fixtures.hpp"
#include "surgbench/config.hpp"
#include "surgbench/lexicon.hpp"

using namespace surgbench;

TEST_CASE("shipped lexicon loads and canonicalizes the documented pairs") {
  const auto lexicon = Lexicon::load((testsupport::data_dir() / "lexicon.tsv").string());
  CHECK(lexicon.canonicalize("Calot's triangle") == "Cystohepatic Triangle");
  CHECK(lexicon.canonicalize("Hepatocystic triangle") == "Cystohepatic Triangle");
  CHECK(lexicon.canonicalize("other") ==
        "The frame does not contain the defined phases, steps, or instruments.");
  CHECK(lexicon.is_ambiguous("other"));
  CHECK(lexicon.canonicalize("retracting") == "retract");
  // Lookup folds case and whitespace.
  CHECK(lexicon.canonicalize("  CALOT'S   TRIANGLE ") == "Cystohepatic Triangle");
  // Unknown labels pass through.
  CHECK(lexicon.canonicalize("gallbladder dissection") == "gallbladder dissection");
}

TEST_CASE("lexicon rejects duplicate raw labels") {
  std::vector<LexiconEntry> entries = {
      {LexiconEntry::Kind::Mapping, "a", "b", ""},
      {LexiconEntry::Kind::Mapping, "A", "c", ""},  // duplicate after folding
  };
  CHECK_THROWS(Lexicon::from_entries(std::move(entries)));
}

TEST_CASE("lexicon rejects canonical terms that map onward") {
  std::vector<LexiconEntry> entries = {
      {LexiconEntry::Kind::Mapping, "a", "b", ""},
      {LexiconEntry::Kind::Mapping, "b", "c", ""},  // chain a -> b -> c
  };
  CHECK_THROWS(Lexicon::from_entries(std::move(entries)));
}

TEST_CASE("lexicon accepts self-mapping canonical terms") {
  std::vector<LexiconEntry> entries = {
      {LexiconEntry::Kind::Mapping, "a", "b", ""},
      {LexiconEntry::Kind::Mapping, "b", "b", ""},
  };
  const auto lexicon = Lexicon::from_entries(std::move(entries));
  CHECK(lexicon.canonicalize("a") == "b");
  const auto [value, outcome] = lexicon.canonicalize_with_outcome("b");
  CHECK(value == "b");
  CHECK(outcome == Lexicon::Outcome::Unchanged);
}

TEST_CASE("surface forms collect raw variants of a canonical term") {
  const auto lexicon = Lexicon::load((testsupport::data_dir() / "lexicon.tsv").string());
  const auto forms = lexicon.surface_forms("retract");
  CHECK(forms.size() >= 3);  // retract itself plus retracting/retracts/retracted
}

TEST_CASE("key/value config parses sections, comments, and quoted strings") {
  const auto cfg = KeyValueConfig::parse(
      "# comment\n"
      "top = 1\n"
      "[suite]\n"
      "budget = 50  # inline comment\n"
      "name = \"with # hash\"\n"
      "flag = true\n"
      "[dataset.cholec80]\n"
      "corpus = \"x.jsonl\"\n");
  CHECK(cfg.get_int("top") == 1);
  CHECK(cfg.get_int("suite.budget") == 50);
  CHECK(cfg.get("suite.name") == "with # hash");
  CHECK(cfg.get_bool("suite.flag") == true);
  CHECK(cfg.require("dataset.cholec80.corpus") == "x.jsonl");
  CHECK(cfg.has_section("dataset.cholec80"));
  CHECK(!cfg.get("missing").has_value());
  CHECK_THROWS(cfg.require("missing"));
}
