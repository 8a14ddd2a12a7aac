#pragma once
// Shared record schemas and the label vocabulary used across the toolkit:
// ten-task hierarchy, label variants, sample records, conversations, and
// model prediction records.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace surgbench {

class Lexicon;

enum class Tier { Perception, Temporal, Reasoning };

enum class TaskKind {
  InstrumentRecognition,
  InstrumentLocalizationBox,
  InstrumentLocalizationGrid,
  TissueRecognition,
  TissueLocalization,
  PhaseRecognition,
  StepRecognition,
  ActionRecognition,
  TripletRecognition,
  CvsAssessment,
};

inline constexpr int kTaskKindCount = 10;

Tier tier_of(TaskKind k);
std::string_view to_string(TaskKind k);
std::string_view to_string(Tier t);
std::optional<TaskKind> task_kind_from_string(std::string_view s);
std::span<const TaskKind> all_task_kinds();

struct BoundingBox {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;  // pixels, origin top-left
  std::optional<std::string> label;

  // Half-open pixel convention: a box covering one pixel has area 1.
  double area() const { return (x2 - x1) * (y2 - y1); }
  bool valid() const { return x1 >= 0 && y1 >= 0 && x1 < x2 && y1 < y2; }
  bool operator==(const BoundingBox& o) const {
    return x1 == o.x1 && y1 == o.y1 && x2 == o.x2 && y2 == o.y2 && label == o.label;
  }
};

struct Triplet {
  std::string instrument, verb, target;
  bool operator==(const Triplet&) const = default;
};

struct CvsVector {
  bool cystic_plate = false;     // criterion 1
  bool lower_third = false;      // criterion 2
  bool two_structures = false;   // criterion 3
  bool overall() const { return cystic_plate && lower_third && two_structures; }
  bool criterion(int i) const;
  void set_criterion(int i, bool v);
  bool operator==(const CvsVector&) const = default;
};

enum class GridCell { Left, Right, Top, Bottom, Center };
std::string_view to_string(GridCell c);
std::optional<GridCell> grid_cell_from_string(std::string_view s);

struct ClassLabel {
  std::string value;
  bool operator==(const ClassLabel&) const = default;
};

// Localization ground truth is a set of boxes: a frame can contain several
// instruments.
struct BoxSet {
  std::vector<BoundingBox> boxes;
  bool operator==(const BoxSet&) const = default;
};

using Label = std::variant<ClassLabel, BoxSet, GridCell, Triplet, CvsVector>;

// Canonical textual form of a label. parse_* on the rendering reproduces the
// structured value (idempotence contract of the response parser).
std::string render_label(const Label& label);
std::string render_box(const BoundingBox& box);
std::string_view label_type_name(const Label& label);

// Per-task annotation: the structured label, its textual answer (grown by the
// pipeline stages), and the ground-truth keyword that must stay a verbatim
// substring of the answer.
struct TaskAnnotation {
  Label label;
  std::string answer_text;
  std::string keyword;
  bool operator==(const TaskAnnotation&) const = default;
};

// A combined-statement annotation produced by correlation enrichment; `a` and
// `b` are the task pair the statement was derived from.
struct CombinedStatement {
  TaskKind a = TaskKind::InstrumentRecognition;
  TaskKind b = TaskKind::InstrumentRecognition;
  std::string text;
  bool operator==(const CombinedStatement&) const = default;
};

struct SampleRecord {
  std::string sample_id;
  std::string image_ref;
  std::string surgery_type;
  std::string dataset_id;
  std::optional<std::array<int, 2>> image_extent;  // {width, height}
  std::map<TaskKind, TaskAnnotation> labels;
  std::vector<CombinedStatement> statements;
  bool operator==(const SampleRecord&) const = default;
};

enum class Protocol { OV, MCQ };
std::string_view to_string(Protocol p);
std::optional<Protocol> protocol_from_string(std::string_view s);

struct Turn {
  std::string prompt;
  std::string answer;                  // ground-truth answer text
  std::vector<std::string> keywords;   // ground-truth keywords (OV scoring)
  TaskKind task = TaskKind::InstrumentRecognition;
  std::vector<std::string> options;    // MCQ options; empty under OV
  int correct_option = -1;             // index into options, -1 under OV
  bool operator==(const Turn&) const = default;
};

struct Conversation {
  std::string conversation_id;
  std::string sample_id;
  Protocol protocol = Protocol::OV;
  std::vector<Turn> turns;
  bool operator==(const Conversation&) const = default;
};

enum class ParseStatus { Parsed, ParseFailed, Refused, TransportError };
std::string_view to_string(ParseStatus s);
std::optional<ParseStatus> parse_status_from_string(std::string_view s);

struct PredictionRecord {
  std::string conversation_id;
  int turn_index = 0;
  std::string response;
  ParseStatus status = ParseStatus::ParseFailed;
  std::optional<Label> parsed;
  int retries = 0;
};

// --- validation ---------------------------------------------------------

struct Violation {
  std::string field_path;
  std::string message;
};

struct ValidationResult {
  std::vector<Violation> violations;
  // Labels that were accepted only after lexicon canonicalization.
  std::vector<std::string> normalized;
  bool ok() const { return violations.empty(); }
};

// Component vocabularies for triplet labels (instrument / verb / target).
struct TripletVocab {
  std::vector<std::string> instruments, verbs, targets;
};

struct ValidationContext {
  const Lexicon* lexicon = nullptr;
  std::map<TaskKind, std::vector<std::string>> vocabularies;
  std::optional<TripletVocab> triplet_vocab;
};

// Reports every violated invariant with a field path; never mutates.
// Violations are data, not failures.
ValidationResult validate_record(const SampleRecord& record,
                                 const ValidationContext& ctx = {});

// --- corpus files --------------------------------------------------------

inline constexpr int kSchemaMajor = 1;
inline constexpr int kSchemaMinor = 0;

struct CorpusMetadata {
  std::string schema_version = "1.0";
  std::string dataset_id;
  std::string created_at = "1970-01-01T00:00:00Z";  // fixed default: corpora are reproducible builds
};

struct CorpusReadResult {
  CorpusMetadata meta;
  std::vector<SampleRecord> records;
  std::vector<std::string> diagnostics;  // line-numbered messages for malformed lines
};

struct CorpusError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// JSON Lines, UTF-8, first line metadata. Throws CorpusError on unreadable
// files or unknown schema major version; malformed record lines become
// diagnostics instead.
CorpusReadResult read_corpus(const std::string& path);
std::size_t write_corpus(std::span<const SampleRecord> records, const std::string& path,
                         const CorpusMetadata& meta = {});

struct ConversationReadResult {
  CorpusMetadata meta;
  std::vector<Conversation> conversations;
  std::vector<std::string> diagnostics;
};

ConversationReadResult read_conversations(const std::string& path);
std::size_t write_conversations(std::span<const Conversation> conversations,
                                const std::string& path, const CorpusMetadata& meta = {});

std::vector<PredictionRecord> read_predictions(const std::string& path);
std::size_t write_predictions(std::span<const PredictionRecord> predictions,
                              const std::string& path);

}  // namespace surgbench
