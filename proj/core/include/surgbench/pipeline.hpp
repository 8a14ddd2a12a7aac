#pragma once
// Four-stage corpus construction pipeline: label refinement, cross-task
// correlation enrichment, explainable answer generation, and conversational
// diversity expansion. Stages are pure functions over record sequences and
// every stage is deterministic for a fixed (input, config, seed).

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "surgbench/datamodel.hpp"
#include "surgbench/lexicon.hpp"

namespace surgbench {

// --- stage configuration types ----------------------------------------------

struct CorrelationRule {
  TaskKind a = TaskKind::PhaseRecognition;
  TaskKind b = TaskKind::StepRecognition;
  std::string statement_template;  // references {a} and {b} exactly once each

  // TSV columns: task_a <TAB> task_b <TAB> template
  static std::vector<CorrelationRule> load(const std::string& path);
};

struct ExplanationTemplate {
  TaskKind task = TaskKind::PhaseRecognition;
  std::string label_value;  // "*" matches any label of the task
  std::string clause;       // appended to the answer; may reference {label}

  // TSV columns: task <TAB> label|* <TAB> clause
  static std::vector<ExplanationTemplate> load(const std::string& path);
};

struct PromptTemplateSet {
  // Question templates may reference {surgery}; answer templates must embed
  // the ground-truth slot {answer} verbatim.
  std::map<TaskKind, std::vector<std::string>> questions;
  std::map<TaskKind, std::vector<std::string>> answers;
  std::uint64_t seed = 0;

  // TSV columns: task <TAB> q|a <TAB> template
  static PromptTemplateSet load(const std::string& path);
  // Throws unless every present task has >= 1 question and >= 1 answer
  // template and every answer template embeds {answer}. When
  // `enforce_count_bounds` is set the shipped-set contract (100-200 question
  // templates per task kind) is checked too.
  void validate(bool enforce_count_bounds = false) const;
};

struct VocabTables {
  std::map<TaskKind, std::vector<std::string>> classes;
  std::optional<TripletVocab> triplet;

  // Reads <dir>/<task>.txt per task kind plus <dir>/triplet_{instruments,
  // verbs,targets}.txt when present.
  static VocabTables load_dir(const std::string& dir);
};

// --- stage reports -------------------------------------------------------------

struct Substitution {
  std::string from, to;
  std::string kind;  // "map" | "sentence" | "unmapped"
  std::size_t count = 0;
};

struct RefinementReport {
  std::vector<Substitution> substitutions;
  std::size_t records = 0;
  std::size_t labels_touched = 0;
};

struct EnrichmentReport {
  std::size_t records = 0;
  std::size_t statements_added = 0;
};

struct ExplanationReport {
  std::size_t records = 0;
  std::size_t explanations_added = 0;
  std::size_t answers_unchanged = 0;
};

// --- stages ------------------------------------------------------------------

// Module 1: every raw label replaced by its canonical form; ambiguous labels
// replaced by their full-sentence descriptions. Record count unchanged.
// Unknown labels are reported as "unmapped", never dropped.
std::pair<std::vector<SampleRecord>, RefinementReport> refine_labels(
    std::vector<SampleRecord> records, const Lexicon& lexicon);

// Module 2: attaches a combined statement for every rule whose two labels are
// both present; original labels untouched.
std::pair<std::vector<SampleRecord>, EnrichmentReport> enrich_correlations(
    std::vector<SampleRecord> records, std::span<const CorrelationRule> rules);

// Module 3: extends answer texts with matching explanation clauses; the
// ground-truth keyword stays a verbatim substring.
std::pair<std::vector<SampleRecord>, ExplanationReport> generate_explanations(
    std::vector<SampleRecord> records, std::span<const ExplanationTemplate> templates);

// Module 4 ------------------------------------------------------------------

enum class ExpandMode { SingleTurn, MultiTurn, Mixed };
std::optional<ExpandMode> expand_mode_from_string(std::string_view s);

struct ExpandOptions {
  Protocol protocol = Protocol::OV;
  double multi_turn_ratio = 0.5;  // Mixed mode: fraction of records multi-turn
  int interleave_k = 8;           // max run of one task kind in the output
  int mcq_option_count = 4;
  int max_turns = 6;              // longer label sets split into conversations
  VocabTables vocab;              // distractor source for MCQ
};

// Deterministic for fixed (records, set, seed): conversations derive their
// RNG streams from (seed, sample id, task), so records can be processed in
// any order. Throws when a labeled task has zero question templates.
std::vector<Conversation> expand_conversations(std::span<const SampleRecord> records,
                                               const PromptTemplateSet& set, ExpandMode mode,
                                               std::uint64_t seed,
                                               const ExpandOptions& options = {});

// --- whole pipeline --------------------------------------------------------------

struct StageReport {
  std::string stage;
  std::size_t records_in = 0;
  std::size_t records_out = 0;
  std::map<std::string, std::size_t> counters;
};

struct BuildReport {
  std::vector<StageReport> stages;
  std::size_t conversations = 0;
  std::string to_json_string() const;
};

struct BuildConfig {
  std::vector<std::string> inputs;  // record corpora, processed in order
  std::string lexicon_path;
  std::string rules_path;
  std::string explanations_path;
  std::string templates_path;
  std::string vocab_dir;
  std::uint64_t seed = 0;
  ExpandMode mode = ExpandMode::Mixed;
  Protocol protocol = Protocol::OV;
  double multi_turn_ratio = 0.5;
  int interleave_k = 8;
  int mcq_option_count = 4;
  std::string output;           // conversations corpus path
  std::string report_path;      // optional build-report destination
  std::string stage_dir;        // optional: materialize per-stage corpora
  std::string dataset_id = "surgbench-db";

  // Reads the documented key/value config file.
  static BuildConfig load(const std::string& path);
};

// Runs stages 1 -> 2 -> 3 -> 4 and writes the conversation corpus; any stage
// hard error aborts with the stage name in the exception message.
BuildReport build_dataset(const BuildConfig& config);

}  // namespace surgbench
