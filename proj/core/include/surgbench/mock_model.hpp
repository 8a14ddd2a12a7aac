#pragma once
// Deterministic mock model used as the harness test double: an oracle that
// answers from the ground truth, a planted-accuracy variant that is correct
// on a seeded p-fraction of turns, and a refuser. Responses depend only on
// (conversation id, turn index, seed).

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "surgbench/datamodel.hpp"
#include "surgbench/pipeline.hpp"

namespace surgbench {

struct MockBehavior {
  enum class Kind { Oracle, Planted, Refuser } kind = Kind::Oracle;
  double p = 1.0;  // planted correctness probability, or refusal rate
  std::uint64_t seed = 0;

  static MockBehavior oracle() { return {}; }
  static MockBehavior planted(double p, std::uint64_t seed) {
    return {Kind::Planted, p, seed};
  }
  static MockBehavior refuser(double rate, std::uint64_t seed) {
    return {Kind::Refuser, rate, seed};
  }
  // "oracle" | "planted:<p>[:seed]" | "refuser:<rate>[:seed]"
  static std::optional<MockBehavior> parse(std::string_view text);
  std::string to_string() const;
};

class MockModel {
 public:
  explicit MockModel(MockBehavior behavior, VocabTables vocab = {});

  std::string generate(const Conversation& conversation, int turn_index) const;

  // The seeded correctness draw for a planted turn, exposed so tests can
  // replay the exact realized fraction. Oracle always true, refuser follows
  // its refusal draw.
  bool draw_correct(const Conversation& conversation, int turn_index) const;

  const MockBehavior& behavior() const { return behavior_; }

 private:
  std::string correct_answer(const Turn& turn) const;
  std::string wrong_answer(const Conversation& conversation, const Turn& turn,
                           int turn_index) const;

  MockBehavior behavior_;
  VocabTables vocab_;
};

// Free-function form mirroring the module operation.
std::string mock_generate(const Conversation& conversation, int turn_index,
                          const MockBehavior& behavior, const VocabTables& vocab = {});

}  // namespace surgbench
