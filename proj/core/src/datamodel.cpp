#include "surgbench/datamodel.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "surgbench/lexicon.hpp"
#include "surgbench/strings.hpp"

namespace surgbench {

namespace {

struct TaskInfo {
  TaskKind kind;
  std::string_view name;
  Tier tier;
};

constexpr TaskInfo kTasks[] = {
    {TaskKind::InstrumentRecognition, "instrument_recognition", Tier::Perception},
    {TaskKind::InstrumentLocalizationBox, "instrument_localization_box", Tier::Perception},
    {TaskKind::InstrumentLocalizationGrid, "instrument_localization_grid", Tier::Perception},
    {TaskKind::TissueRecognition, "tissue_recognition", Tier::Perception},
    {TaskKind::TissueLocalization, "tissue_localization", Tier::Perception},
    {TaskKind::PhaseRecognition, "phase_recognition", Tier::Temporal},
    {TaskKind::StepRecognition, "step_recognition", Tier::Temporal},
    {TaskKind::ActionRecognition, "action_recognition", Tier::Temporal},
    {TaskKind::TripletRecognition, "triplet_recognition", Tier::Temporal},
    {TaskKind::CvsAssessment, "cvs_assessment", Tier::Reasoning},
};

constexpr TaskKind kAllTasks[] = {
    TaskKind::InstrumentRecognition,    TaskKind::InstrumentLocalizationBox,
    TaskKind::InstrumentLocalizationGrid, TaskKind::TissueRecognition,
    TaskKind::TissueLocalization,       TaskKind::PhaseRecognition,
    TaskKind::StepRecognition,          TaskKind::ActionRecognition,
    TaskKind::TripletRecognition,       TaskKind::CvsAssessment,
};

const TaskInfo& info(TaskKind k) { return kTasks[static_cast<int>(k)]; }

std::string format_coord(double v) {
  // Integral coordinates render without a trailing ".0" so parsed and
  // re-rendered boxes stay byte-stable.
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    return std::to_string(static_cast<long long>(v));
  }
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

Tier tier_of(TaskKind k) { return info(k).tier; }
std::string_view to_string(TaskKind k) { return info(k).name; }

std::string_view to_string(Tier t) {
  switch (t) {
    case Tier::Perception: return "perception";
    case Tier::Temporal: return "temporal";
    case Tier::Reasoning: return "reasoning";
  }
  return "perception";
}

std::optional<TaskKind> task_kind_from_string(std::string_view s) {
  for (const auto& t : kTasks) {
    if (t.name == s) return t.kind;
  }
  return std::nullopt;
}

std::span<const TaskKind> all_task_kinds() { return kAllTasks; }

bool CvsVector::criterion(int i) const {
  switch (i) {
    case 0: return cystic_plate;
    case 1: return lower_third;
    default: return two_structures;
  }
}

void CvsVector::set_criterion(int i, bool v) {
  switch (i) {
    case 0: cystic_plate = v; break;
    case 1: lower_third = v; break;
    default: two_structures = v; break;
  }
}

std::string_view to_string(GridCell c) {
  switch (c) {
    case GridCell::Left: return "left";
    case GridCell::Right: return "right";
    case GridCell::Top: return "top";
    case GridCell::Bottom: return "bottom";
    case GridCell::Center: return "center";
  }
  return "center";
}

std::optional<GridCell> grid_cell_from_string(std::string_view s) {
  if (s == "left") return GridCell::Left;
  if (s == "right") return GridCell::Right;
  if (s == "top") return GridCell::Top;
  if (s == "bottom") return GridCell::Bottom;
  if (s == "center") return GridCell::Center;
  return std::nullopt;
}

std::string_view to_string(Protocol p) { return p == Protocol::OV ? "ov" : "mcq"; }

std::optional<Protocol> protocol_from_string(std::string_view s) {
  if (s == "ov") return Protocol::OV;
  if (s == "mcq") return Protocol::MCQ;
  return std::nullopt;
}

std::string_view to_string(ParseStatus s) {
  switch (s) {
    case ParseStatus::Parsed: return "parsed";
    case ParseStatus::ParseFailed: return "parse_failed";
    case ParseStatus::Refused: return "refused";
    case ParseStatus::TransportError: return "transport_error";
  }
  return "parse_failed";
}

std::optional<ParseStatus> parse_status_from_string(std::string_view s) {
  if (s == "parsed") return ParseStatus::Parsed;
  if (s == "parse_failed") return ParseStatus::ParseFailed;
  if (s == "refused") return ParseStatus::Refused;
  if (s == "transport_error") return ParseStatus::TransportError;
  return std::nullopt;
}

std::string render_box(const BoundingBox& b) {
  std::string out;
  if (b.label && !b.label->empty()) {
    out += *b.label;
    out += " at ";
  }
  out += "[" + format_coord(b.x1) + ", " + format_coord(b.y1) + ", " +
         format_coord(b.x2) + ", " + format_coord(b.y2) + "]";
  return out;
}

std::string render_label(const Label& label) {
  struct Renderer {
    std::string operator()(const ClassLabel& c) const { return c.value; }
    std::string operator()(const BoxSet& s) const {
      std::string out;
      for (std::size_t i = 0; i < s.boxes.size(); ++i) {
        if (i) out += " and ";
        out += render_box(s.boxes[i]);
      }
      return out;
    }
    std::string operator()(GridCell c) const { return std::string(to_string(c)); }
    std::string operator()(const Triplet& t) const {
      return t.instrument + ", " + t.verb + ", " + t.target;
    }
    std::string operator()(const CvsVector& v) const {
      auto word = [](bool b) { return b ? "yes" : "no"; };
      return std::string(word(v.cystic_plate)) + ", " + word(v.lower_third) + ", " +
             word(v.two_structures);
    }
  };
  return std::visit(Renderer{}, label);
}

std::string_view label_type_name(const Label& label) {
  switch (label.index()) {
    case 0: return "class";
    case 1: return "boxes";
    case 2: return "grid";
    case 3: return "triplet";
    default: return "cvs";
  }
}

namespace {

void check_vocab_member(const std::string& field, const std::string& value,
                        const std::vector<std::string>& vocab, const Lexicon* lexicon,
                        ValidationResult& out) {
  const std::string folded = fold_case(collapse_whitespace(value));
  for (const auto& v : vocab) {
    if (fold_case(collapse_whitespace(v)) == folded) return;
  }
  if (lexicon) {
    const auto [canon, outcome] = lexicon->canonicalize_with_outcome(value);
    if (outcome != Lexicon::Outcome::Unchanged) {
      const std::string canon_folded = fold_case(collapse_whitespace(canon));
      for (const auto& v : vocab) {
        if (fold_case(collapse_whitespace(v)) == canon_folded) {
          out.normalized.push_back(field + ": \"" + value + "\" -> \"" + canon + "\"");
          return;
        }
      }
    }
  }
  out.violations.push_back({field, "not in vocabulary: \"" + value + "\""});
}

}  // namespace

ValidationResult validate_record(const SampleRecord& record, const ValidationContext& ctx) {
  ValidationResult out;

  if (record.sample_id.empty()) {
    out.violations.push_back({"sample_id", "empty"});
  }
  if (record.surgery_type.empty()) {
    out.violations.push_back({"surgery_type", "empty"});
  }
  if (record.labels.empty()) {
    out.violations.push_back({"labels", "at least one label required"});
  }

  for (const auto& [kind, ann] : record.labels) {
    const std::string base = "labels." + std::string(to_string(kind));

    if (const auto* boxes = std::get_if<BoxSet>(&ann.label)) {
      for (std::size_t i = 0; i < boxes->boxes.size(); ++i) {
        const auto& b = boxes->boxes[i];
        const std::string path = base + ".boxes[" + std::to_string(i) + "]";
        if (b.x1 >= b.x2 || b.y1 >= b.y2) {
          out.violations.push_back({path, "box ordering: requires x1 < x2 and y1 < y2"});
        }
        if (b.x1 < 0 || b.y1 < 0) {
          out.violations.push_back({path, "negative coordinates"});
        }
        if (record.image_extent) {
          const auto [w, h] = *record.image_extent;
          if (b.x2 > w || b.y2 > h) {
            out.violations.push_back({path, "box exceeds image extent"});
          }
        }
      }
    } else if (const auto* triplet = std::get_if<Triplet>(&ann.label)) {
      if (triplet->instrument.empty() || triplet->verb.empty() || triplet->target.empty()) {
        out.violations.push_back({base, "triplet components must be non-empty"});
      } else if (ctx.triplet_vocab) {
        check_vocab_member(base + ".instrument", triplet->instrument,
                           ctx.triplet_vocab->instruments, ctx.lexicon, out);
        check_vocab_member(base + ".verb", triplet->verb, ctx.triplet_vocab->verbs,
                           ctx.lexicon, out);
        check_vocab_member(base + ".target", triplet->target, ctx.triplet_vocab->targets,
                           ctx.lexicon, out);
      }
    } else if (const auto* cls = std::get_if<ClassLabel>(&ann.label)) {
      if (cls->value.empty()) {
        out.violations.push_back({base, "empty class label"});
      }
    }

    if (!ann.keyword.empty() && !ann.answer_text.empty() &&
        !contains(ann.answer_text, ann.keyword)) {
      out.violations.push_back({base + ".keyword", "keyword not a substring of answer_text"});
    }
  }

  // Vocabulary checks with lexicon-aware canonicalization.
  for (const auto& [kind, vocab] : ctx.vocabularies) {
    const auto it = record.labels.find(kind);
    if (it == record.labels.end()) continue;
    const std::string base = "labels." + std::string(to_string(kind));
    if (const auto* cls = std::get_if<ClassLabel>(&it->second.label)) {
      if (!cls->value.empty()) {
        check_vocab_member(base, cls->value, vocab, ctx.lexicon, out);
      }
    }
  }

  return out;
}

}  // namespace surgbench
