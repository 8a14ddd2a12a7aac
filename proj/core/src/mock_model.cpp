#include "surgbench/mock_model.hpp"

#include <cmath>

#include "surgbench/response_parser.hpp"
#include "surgbench/rng.hpp"
#include "surgbench/strings.hpp"

namespace surgbench {

namespace {

constexpr std::string_view kRefusalText =
    "I cannot assist with that request due to safety policy restrictions.";

Rng turn_rng(std::uint64_t seed, const Conversation& c, int turn_index) {
  return derive_rng(seed, c.conversation_id, "turn", std::to_string(turn_index));
}

std::string fold_key(std::string_view s) { return fold_case(collapse_whitespace(s)); }

}  // namespace

std::optional<MockBehavior> MockBehavior::parse(std::string_view text) {
  const auto parts = split(text, ':');
  if (parts.empty()) return std::nullopt;
  if (parts[0] == "oracle") return oracle();
  if (parts[0] != "planted" && parts[0] != "refuser") return std::nullopt;
  if (parts.size() < 2) return std::nullopt;
  double p = 0;
  std::uint64_t seed = 0;
  try {
    p = std::stod(parts[1]);
    if (parts.size() > 2) seed = std::stoull(parts[2]);
  } catch (...) {
    return std::nullopt;
  }
  if (p < 0.0 || p > 1.0) return std::nullopt;
  return parts[0] == "planted" ? planted(p, seed) : refuser(p, seed);
}

std::string MockBehavior::to_string() const {
  switch (kind) {
    case Kind::Oracle: return "oracle";
    case Kind::Planted: return "planted:" + std::to_string(p) + ":" + std::to_string(seed);
    case Kind::Refuser: return "refuser:" + std::to_string(p) + ":" + std::to_string(seed);
  }
  return "oracle";
}

MockModel::MockModel(MockBehavior behavior, VocabTables vocab)
    : behavior_(behavior), vocab_(std::move(vocab)) {}

bool MockModel::draw_correct(const Conversation& conversation, int turn_index) const {
  switch (behavior_.kind) {
    case MockBehavior::Kind::Oracle: return true;
    case MockBehavior::Kind::Planted: {
      Rng rng = turn_rng(behavior_.seed, conversation, turn_index);
      return rng.coin(behavior_.p);
    }
    case MockBehavior::Kind::Refuser: {
      Rng rng = turn_rng(behavior_.seed, conversation, turn_index);
      return !rng.coin(behavior_.p);  // refusals score as incorrect
    }
  }
  return true;
}

std::string MockModel::correct_answer(const Turn& turn) const {
  if (!turn.options.empty() && turn.correct_option >= 0) {
    // MCQ: the correct option letter.
    return std::string(1, static_cast<char>('A' + turn.correct_option));
  }
  return turn.answer;
}

std::string MockModel::wrong_answer(const Conversation& conversation, const Turn& turn,
                                    int turn_index) const {
  Rng rng = derive_rng(behavior_.seed, conversation.conversation_id, "wrong",
                       std::to_string(turn_index));

  if (!turn.options.empty() && turn.options.size() >= 2 && turn.correct_option >= 0) {
    // MCQ: any other option letter.
    const std::size_t offset = 1 + rng.bounded(turn.options.size() - 1);
    const std::size_t pick =
        (static_cast<std::size_t>(turn.correct_option) + offset) % turn.options.size();
    return std::string(1, static_cast<char>('A' + pick));
  }

  const ParseConfig parse_cfg = ParseConfig::defaults();
  switch (turn.task) {
    case TaskKind::InstrumentLocalizationBox: {
      // Shift every ground-truth box far enough to kill the overlap.
      const auto parsed = parse_bboxes(turn.answer, parse_cfg);
      std::string out = "The instruments are at ";
      bool first = true;
      for (auto b : parsed.boxes) {
        const double w = b.x2 - b.x1;
        const double h = b.y2 - b.y1;
        b.x1 += 2 * w + 1000;
        b.x2 += 2 * w + 1000;
        b.y1 += 2 * h + 1000;
        b.y2 += 2 * h + 1000;
        b.label.reset();
        if (!first) out += " and ";
        out += render_box(b);
        first = false;
      }
      if (parsed.boxes.empty()) out += "[1000, 1000, 1001, 1001]";
      return out;
    }
    case TaskKind::InstrumentLocalizationGrid: {
      static const GridCell kCells[] = {GridCell::Left, GridCell::Right, GridCell::Top,
                                        GridCell::Bottom, GridCell::Center};
      for (const GridCell c : kCells) {
        if (!contains(fold_key(turn.answer), to_string(c))) {
          (void)rng.next_u64();
          return std::string(to_string(c));
        }
      }
      return "left";
    }
    case TaskKind::TripletRecognition: {
      if (vocab_.triplet) {
        const auto& v = *vocab_.triplet;
        const auto truth = parse_triplet(turn.answer, v, parse_cfg);
        auto rotate = [&](const std::vector<std::string>& vocab, const std::string& avoid) {
          std::vector<std::string> pool;
          for (const auto& m : vocab) {
            if (fold_key(m) != fold_key(avoid)) pool.push_back(m);
          }
          if (pool.empty()) return avoid;
          return pool[rng.bounded(pool.size())];
        };
        const Triplet gt = truth.triplet.value_or(Triplet{"", "", ""});
        Triplet wrong;
        wrong.instrument = rotate(v.instruments, gt.instrument);
        wrong.verb = rotate(v.verbs, gt.verb);
        wrong.target = rotate(v.targets, gt.target);
        return render_label(Label{wrong});
      }
      return "no discernible interaction";
    }
    case TaskKind::CvsAssessment: {
      const auto truth = parse_cvs(turn.answer, parse_cfg);
      CvsVector wrong;
      if (truth.cvs) {
        wrong.cystic_plate = !truth.cvs->cystic_plate;
        wrong.lower_third = !truth.cvs->lower_third;
        wrong.two_structures = !truth.cvs->two_structures;
      }
      return render_label(Label{wrong});
    }
    default: {
      // Classification tasks: a different vocabulary member when one exists,
      // otherwise a parse-failing placeholder (still scored wrong).
      const auto it = vocab_.classes.find(turn.task);
      if (it != vocab_.classes.end()) {
        std::vector<std::string> pool;
        for (const auto& m : it->second) {
          // A wrong answer must not contain the keyword (or vice versa), or
          // it would score correct under substring matching.
          bool hits_keyword = false;
          for (const auto& kw : turn.keywords) {
            if (contains(fold_key(m), fold_key(kw)) || contains(fold_key(kw), fold_key(m))) {
              hits_keyword = true;
            }
          }
          if (!hits_keyword) pool.push_back(m);
        }
        if (!pool.empty()) {
          return "It appears to be " + pool[rng.bounded(pool.size())] + ".";
        }
      }
      return "No definitive finding can be identified here.";
    }
  }
}

std::string MockModel::generate(const Conversation& conversation, int turn_index) const {
  const auto& turn = conversation.turns.at(static_cast<std::size_t>(turn_index));
  switch (behavior_.kind) {
    case MockBehavior::Kind::Oracle:
      return correct_answer(turn);
    case MockBehavior::Kind::Planted:
      return draw_correct(conversation, turn_index)
                 ? correct_answer(turn)
                 : wrong_answer(conversation, turn, turn_index);
    case MockBehavior::Kind::Refuser:
      return draw_correct(conversation, turn_index) ? correct_answer(turn)
                                                    : std::string(kRefusalText);
  }
  return correct_answer(turn);
}

std::string mock_generate(const Conversation& conversation, int turn_index,
                          const MockBehavior& behavior, const VocabTables& vocab) {
  return MockModel(behavior, vocab).generate(conversation, turn_index);
}

}  // namespace surgbench
