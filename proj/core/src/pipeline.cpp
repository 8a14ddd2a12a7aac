#include "surgbench/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

#include "surgbench/config.hpp"
#include "surgbench/rng.hpp"
#include "surgbench/strings.hpp"

namespace surgbench {

namespace {

std::string fold_key(std::string_view s) { return fold_case(collapse_whitespace(s)); }

// Canonical terms are the lexicon's replacement values plus raw keys that map
// to themselves; anything else without an entry is "unmapped".
std::set<std::string> canonical_terms(const Lexicon& lexicon) {
  std::set<std::string> out;
  for (const auto& e : lexicon.entries()) {
    if (e.kind == LexiconEntry::Kind::Mapping) out.insert(fold_key(e.replacement));
  }
  return out;
}

class SubstitutionTally {
 public:
  void record(const std::string& from, const std::string& to, const std::string& kind) {
    ++counts_[{from, to, kind}];
  }
  std::vector<Substitution> flatten() const {
    std::vector<Substitution> out;
    for (const auto& [key, count] : counts_) {
      out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), count});
    }
    return out;
  }

 private:
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> counts_;
};

// Canonicalizes one text label, tallying the substitution.
std::string refine_text(const std::string& raw, const Lexicon& lexicon,
                        const std::set<std::string>& canon, SubstitutionTally& tally,
                        std::size_t& touched) {
  const auto [replacement, outcome] = lexicon.canonicalize_with_outcome(raw);
  switch (outcome) {
    case Lexicon::Outcome::Mapped:
      tally.record(raw, replacement, "map");
      ++touched;
      return replacement;
    case Lexicon::Outcome::SentenceReplaced:
      tally.record(raw, replacement, "sentence");
      ++touched;
      return replacement;
    case Lexicon::Outcome::Unchanged:
      if (!canon.count(fold_key(raw)) && !lexicon.find(raw)) {
        tally.record(raw, raw, "unmapped");
      }
      return raw;
  }
  return raw;
}

}  // namespace

std::pair<std::vector<SampleRecord>, RefinementReport> refine_labels(
    std::vector<SampleRecord> records, const Lexicon& lexicon) {
  RefinementReport report;
  report.records = records.size();
  SubstitutionTally tally;
  const auto canon = canonical_terms(lexicon);

  for (auto& record : records) {
    for (auto& [task, ann] : record.labels) {
      (void)task;
      struct Visitor {
        const Lexicon& lexicon;
        const std::set<std::string>& canon;
        SubstitutionTally& tally;
        std::size_t& touched;
        void operator()(ClassLabel& c) const {
          c.value = refine_text(c.value, lexicon, canon, tally, touched);
        }
        void operator()(BoxSet& s) const {
          for (auto& b : s.boxes) {
            if (b.label) b.label = refine_text(*b.label, lexicon, canon, tally, touched);
          }
        }
        void operator()(GridCell&) const {}
        void operator()(Triplet& t) const {
          t.instrument = refine_text(t.instrument, lexicon, canon, tally, touched);
          t.verb = refine_text(t.verb, lexicon, canon, tally, touched);
          t.target = refine_text(t.target, lexicon, canon, tally, touched);
        }
        void operator()(CvsVector&) const {}
      };
      std::visit(Visitor{lexicon, canon, tally, report.labels_touched}, ann.label);
      // Refinement re-baselines the textual answer to the canonical rendering.
      ann.answer_text = render_label(ann.label);
      ann.keyword = ann.answer_text;
    }
  }
  report.substitutions = tally.flatten();
  return {std::move(records), std::move(report)};
}

std::pair<std::vector<SampleRecord>, EnrichmentReport> enrich_correlations(
    std::vector<SampleRecord> records, std::span<const CorrelationRule> rules) {
  EnrichmentReport report;
  report.records = records.size();
  for (auto& record : records) {
    record.statements.clear();  // this stage owns the field
    for (const auto& rule : rules) {
      const auto ia = record.labels.find(rule.a);
      const auto ib = record.labels.find(rule.b);
      if (ia == record.labels.end() || ib == record.labels.end()) continue;
      if (ia->second.keyword.empty() || ib->second.keyword.empty()) continue;
      std::string text = replace_all(rule.statement_template, "{a}", ia->second.keyword);
      text = replace_all(text, "{b}", ib->second.keyword);
      record.statements.push_back({rule.a, rule.b, std::move(text)});
      ++report.statements_added;
    }
  }
  return {std::move(records), std::move(report)};
}

std::pair<std::vector<SampleRecord>, ExplanationReport> generate_explanations(
    std::vector<SampleRecord> records, std::span<const ExplanationTemplate> templates) {
  ExplanationReport report;
  report.records = records.size();
  for (auto& record : records) {
    for (auto& [task, ann] : record.labels) {
      const ExplanationTemplate* exact = nullptr;
      const ExplanationTemplate* wildcard = nullptr;
      for (const auto& t : templates) {
        if (t.task != task) continue;
        if (t.label_value == "*") {
          if (!wildcard) wildcard = &t;
        } else if (fold_key(t.label_value) == fold_key(ann.keyword)) {
          if (!exact) exact = &t;
        }
      }
      const ExplanationTemplate* chosen = exact ? exact : wildcard;
      if (!chosen) {
        ++report.answers_unchanged;
        continue;
      }
      const std::string clause = replace_all(chosen->clause, "{label}", ann.keyword);
      ann.answer_text += ", " + clause;
      ++report.explanations_added;
    }
  }
  return {std::move(records), std::move(report)};
}

// --- Module 4: conversational diversity expansion ------------------------------

std::optional<ExpandMode> expand_mode_from_string(std::string_view s) {
  if (s == "single_turn") return ExpandMode::SingleTurn;
  if (s == "multi_turn") return ExpandMode::MultiTurn;
  if (s == "mixed") return ExpandMode::Mixed;
  return std::nullopt;
}

namespace {

std::string option_letter(int i) { return std::string(1, static_cast<char>('A' + i)); }

std::string fill_question(const std::string& tpl, const SampleRecord& record) {
  return replace_all(tpl, "{surgery}", record.surgery_type);
}

std::vector<std::string> class_distractors(const std::vector<std::string>& vocab,
                                           const std::string& answer, std::size_t want,
                                           Rng& rng) {
  std::vector<std::string> pool;
  const std::string folded = fold_key(answer);
  for (const auto& v : vocab) {
    if (fold_key(v) != folded) pool.push_back(v);
  }
  rng.shuffle(pool);
  if (pool.size() > want) pool.resize(want);
  return pool;
}

std::vector<std::string> box_distractors(const BoxSet& gt, std::size_t want, Rng& rng) {
  std::vector<std::string> out;
  for (std::size_t d = 0; d < want; ++d) {
    BoxSet jittered = gt;
    for (auto& b : jittered.boxes) {
      const double w = b.x2 - b.x1;
      const double h = b.y2 - b.y1;
      const double dx = (0.3 + 0.5 * rng.unit()) * w * (rng.bounded(2) ? 1.0 : -1.0);
      const double dy = (0.3 + 0.5 * rng.unit()) * h * (rng.bounded(2) ? 1.0 : -1.0);
      b.x1 = std::max(0.0, std::floor(b.x1 + dx));
      b.y1 = std::max(0.0, std::floor(b.y1 + dy));
      b.x2 = b.x1 + std::max(1.0, std::floor(w * (0.7 + 0.6 * rng.unit())));
      b.y2 = b.y1 + std::max(1.0, std::floor(h * (0.7 + 0.6 * rng.unit())));
    }
    out.push_back(render_label(Label{jittered}));
  }
  return out;
}

std::vector<std::string> triplet_distractors(const Triplet& gt, const TripletVocab& vocab,
                                             std::size_t want, Rng& rng) {
  std::vector<std::string> out;
  std::set<std::string> seen{fold_key(render_label(Label{gt}))};
  int guard = 0;
  while (out.size() < want && guard++ < 200) {
    Triplet t;
    t.instrument = vocab.instruments[rng.bounded(vocab.instruments.size())];
    t.verb = vocab.verbs[rng.bounded(vocab.verbs.size())];
    t.target = vocab.targets[rng.bounded(vocab.targets.size())];
    const std::string rendered = render_label(Label{t});
    if (seen.insert(fold_key(rendered)).second) out.push_back(rendered);
  }
  return out;
}

std::vector<std::string> cvs_distractors(const CvsVector& gt, std::size_t want, Rng& rng) {
  std::vector<std::string> pool;
  for (int mask = 0; mask < 8; ++mask) {
    CvsVector v;
    v.cystic_plate = mask & 1;
    v.lower_third = mask & 2;
    v.two_structures = mask & 4;
    if (v == gt) continue;
    pool.push_back(render_label(Label{v}));
  }
  rng.shuffle(pool);
  if (pool.size() > want) pool.resize(want);
  return pool;
}

std::vector<std::string> grid_distractors(GridCell gt, std::size_t want, Rng& rng) {
  std::vector<std::string> pool;
  for (const GridCell c : {GridCell::Left, GridCell::Right, GridCell::Top, GridCell::Bottom,
                           GridCell::Center}) {
    if (c != gt) pool.push_back(std::string(to_string(c)));
  }
  rng.shuffle(pool);
  if (pool.size() > want) pool.resize(want);
  return pool;
}

Turn make_turn(const SampleRecord& record, TaskKind task, const TaskAnnotation& ann,
               const PromptTemplateSet& set, Protocol protocol, const ExpandOptions& options,
               Rng& rng) {
  const auto qit = set.questions.find(task);
  if (qit == set.questions.end() || qit->second.empty()) {
    throw std::runtime_error(std::string("expand_conversations: no question templates for task ") +
                             std::string(to_string(task)));
  }
  const auto ait = set.answers.find(task);
  if (ait == set.answers.end() || ait->second.empty()) {
    throw std::runtime_error(std::string("expand_conversations: no answer templates for task ") +
                             std::string(to_string(task)));
  }
  Turn turn;
  turn.task = task;
  turn.prompt = fill_question(qit->second[rng.bounded(qit->second.size())], record);
  turn.answer = replace_all(ait->second[rng.bounded(ait->second.size())], "{answer}",
                            ann.answer_text);
  turn.keywords = {ann.keyword.empty() ? ann.answer_text : ann.keyword};

  if (protocol == Protocol::MCQ) {
    const std::size_t want = static_cast<std::size_t>(std::max(1, options.mcq_option_count - 1));
    const std::string correct = ann.keyword.empty() ? ann.answer_text : ann.keyword;
    std::vector<std::string> distractors;
    struct DistractorVisitor {
      const ExpandOptions& options;
      TaskKind task;
      const std::string& correct;
      std::size_t want;
      Rng& rng;
      std::vector<std::string> operator()(const ClassLabel&) const {
        const auto it = options.vocab.classes.find(task);
        if (it == options.vocab.classes.end() || it->second.size() < 2) {
          throw std::runtime_error(std::string("expand_conversations: MCQ needs a vocabulary for ") +
                                   std::string(to_string(task)));
        }
        return class_distractors(it->second, correct, want, rng);
      }
      std::vector<std::string> operator()(const BoxSet& s) const {
        return box_distractors(s, want, rng);
      }
      std::vector<std::string> operator()(GridCell c) const {
        return grid_distractors(c, want, rng);
      }
      std::vector<std::string> operator()(const Triplet& t) const {
        if (!options.vocab.triplet) {
          throw std::runtime_error(
              "expand_conversations: MCQ triplet turns need triplet vocabularies");
        }
        return triplet_distractors(t, *options.vocab.triplet, want, rng);
      }
      std::vector<std::string> operator()(const CvsVector& v) const {
        return cvs_distractors(v, want, rng);
      }
    };
    distractors = std::visit(DistractorVisitor{options, task, correct, want, rng}, ann.label);
    // Options must be pairwise distinct after normalization.
    std::set<std::string> seen{fold_key(correct)};
    std::vector<std::string> opts;
    for (auto& d : distractors) {
      if (seen.insert(fold_key(d)).second) opts.push_back(std::move(d));
    }
    if (opts.empty()) {
      throw std::runtime_error("expand_conversations: could not build MCQ distractors for " +
                               std::string(to_string(task)));
    }
    opts.push_back(correct);
    rng.shuffle(opts);
    turn.options = opts;
    for (std::size_t i = 0; i < opts.size(); ++i) {
      if (opts[i] == correct) turn.correct_option = static_cast<int>(i);
    }
    std::string menu = "\nOptions:\n";
    for (std::size_t i = 0; i < opts.size(); ++i) {
      menu += option_letter(static_cast<int>(i)) + ". " + opts[i] + "\n";
    }
    menu += "Answer with the option letter.";
    turn.prompt += menu;
  }
  return turn;
}

void append_pair_statements(Conversation& conv, const SampleRecord& record) {
  for (const auto& st : record.statements) {
    int last = -1;
    bool has_a = false, has_b = false;
    for (std::size_t i = 0; i < conv.turns.size(); ++i) {
      if (conv.turns[i].task == st.a) has_a = true;
      if (conv.turns[i].task == st.b) has_b = true;
      if (conv.turns[i].task == st.a || conv.turns[i].task == st.b) {
        last = static_cast<int>(i);
      }
    }
    if (has_a && has_b && last >= 0) {
      conv.turns[static_cast<std::size_t>(last)].answer += " " + st.text;
    }
  }
}

}  // namespace

std::vector<Conversation> expand_conversations(std::span<const SampleRecord> records,
                                               const PromptTemplateSet& set, ExpandMode mode,
                                               std::uint64_t seed,
                                               const ExpandOptions& options) {
  std::vector<Conversation> out;

  for (const auto& record : records) {
    bool multi = mode == ExpandMode::MultiTurn;
    if (mode == ExpandMode::Mixed) {
      Rng mode_rng = derive_rng(seed, record.sample_id, "mode");
      multi = mode_rng.coin(options.multi_turn_ratio);
    }

    if (!multi) {
      for (const auto& [task, ann] : record.labels) {
        Rng rng = derive_rng(seed, record.sample_id, "single", to_string(task));
        Conversation conv;
        conv.sample_id = record.sample_id;
        conv.protocol = options.protocol;
        conv.conversation_id = record.sample_id + "#" + std::string(to_string(task));
        conv.turns.push_back(make_turn(record, task, ann, set, options.protocol, options, rng));
        out.push_back(std::move(conv));
      }
      continue;
    }

    // Multi-turn: map iteration order is the task enum order, which is the
    // Perception -> Temporal -> Reasoning tier order. Long label sets split
    // into chunks of max_turns.
    std::vector<std::pair<TaskKind, const TaskAnnotation*>> tasks;
    for (const auto& [task, ann] : record.labels) tasks.emplace_back(task, &ann);
    const std::size_t max_turns = static_cast<std::size_t>(std::max(1, options.max_turns));
    for (std::size_t chunk = 0; chunk * max_turns < tasks.size(); ++chunk) {
      Rng rng = derive_rng(seed, record.sample_id, "multi", std::to_string(chunk));
      Conversation conv;
      conv.sample_id = record.sample_id;
      conv.protocol = options.protocol;
      conv.conversation_id = record.sample_id + "#mt" + std::to_string(chunk);
      const std::size_t begin = chunk * max_turns;
      const std::size_t end = std::min(tasks.size(), begin + max_turns);
      for (std::size_t i = begin; i < end; ++i) {
        conv.turns.push_back(make_turn(record, tasks[i].first, *tasks[i].second, set,
                                       options.protocol, options, rng));
      }
      append_pair_statements(conv, record);
      out.push_back(std::move(conv));
    }
  }

  // Interleave task kinds: proportional positions give an even mix without a
  // run longer than any kind's fair share. interleave_k <= 0 keeps the
  // record-major order.
  if (options.interleave_k <= 0) return out;
  struct Keyed {
    double position;
    int kind;
    std::size_t index;
  };
  std::map<TaskKind, std::size_t> totals, seen;
  for (const auto& c : out) {
    if (!c.turns.empty()) ++totals[c.turns.front().task];
  }
  std::vector<Keyed> keys(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const TaskKind kind = out[i].turns.empty() ? TaskKind::InstrumentRecognition
                                               : out[i].turns.front().task;
    const double n = static_cast<double>(totals[kind]);
    keys[i] = {(static_cast<double>(seen[kind]) + 0.5) / n, static_cast<int>(kind), i};
    ++seen[kind];
  }
  std::sort(keys.begin(), keys.end(), [](const Keyed& a, const Keyed& b) {
    if (a.position != b.position) return a.position < b.position;
    if (a.kind != b.kind) return a.kind < b.kind;
    return a.index < b.index;
  });
  std::vector<Conversation> interleaved;
  interleaved.reserve(out.size());
  for (const auto& k : keys) interleaved.push_back(std::move(out[k.index]));
  return interleaved;
}

// --- build_dataset ---------------------------------------------------------------

BuildConfig BuildConfig::load(const std::string& path) {
  const auto cfg = KeyValueConfig::load(path);
  BuildConfig out;
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  const auto resolve = [&](const std::string& p) {
    if (p.empty() || std::filesystem::path(p).is_absolute()) return p;
    return (base / p).lexically_normal().string();
  };
  for (const auto& p : split(cfg.require("inputs"), ',')) {
    const std::string t = trim(p);
    if (!t.empty()) out.inputs.push_back(resolve(t));
  }
  out.lexicon_path = resolve(cfg.require("lexicon_path"));
  out.rules_path = resolve(cfg.require("rules_path"));
  out.explanations_path = resolve(cfg.get_or("explanations_path", ""));
  out.templates_path = resolve(cfg.require("templates_path"));
  out.vocab_dir = resolve(cfg.get_or("vocab_dir", ""));
  out.seed = static_cast<std::uint64_t>(cfg.get_int("seed").value_or(0));
  const std::string mode = cfg.get_or("mode", "mixed");
  const auto m = expand_mode_from_string(mode);
  if (!m) throw std::runtime_error("config: unknown mode \"" + mode + "\"");
  out.mode = *m;
  const std::string proto = cfg.get_or("protocol", "ov");
  const auto p = protocol_from_string(proto);
  if (!p) throw std::runtime_error("config: unknown protocol \"" + proto + "\"");
  out.protocol = *p;
  out.multi_turn_ratio = cfg.get_double("multi_turn_ratio").value_or(0.5);
  out.interleave_k = static_cast<int>(cfg.get_int("interleave_k").value_or(8));
  out.mcq_option_count = static_cast<int>(cfg.get_int("mcq_options").value_or(4));
  out.output = resolve(cfg.require("output"));
  out.report_path = resolve(cfg.get_or("report", ""));
  out.stage_dir = resolve(cfg.get_or("stage_dir", ""));
  out.dataset_id = cfg.get_or("dataset_id", "surgbench-db");
  return out;
}

std::string BuildReport::to_json_string() const {
  nlohmann::json j;
  nlohmann::json stages_json = nlohmann::json::array();
  for (const auto& s : stages) {
    nlohmann::json sj;
    sj["stage"] = s.stage;
    sj["records_in"] = s.records_in;
    sj["records_out"] = s.records_out;
    sj["counters"] = s.counters;
    stages_json.push_back(std::move(sj));
  }
  j["stages"] = std::move(stages_json);
  j["conversations"] = conversations;
  return j.dump(2);
}

namespace {

void maybe_dump(const std::string& stage_dir, const std::string& name,
                std::span<const SampleRecord> records, const std::string& dataset_id) {
  if (stage_dir.empty()) return;
  std::filesystem::create_directories(stage_dir);
  CorpusMetadata meta;
  meta.dataset_id = dataset_id;
  write_corpus(records, (std::filesystem::path(stage_dir) / (name + ".jsonl")).string(), meta);
}

template <typename F>
auto run_stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("pipeline stage ") + name + ": " + e.what());
  }
}

}  // namespace

BuildReport build_dataset(const BuildConfig& config) {
  BuildReport report;

  std::vector<SampleRecord> records;
  for (const auto& input : config.inputs) {
    auto loaded = run_stage("ingest", [&] { return read_corpus(input); });
    for (auto& r : loaded.records) records.push_back(std::move(r));
  }
  const std::size_t n_in = records.size();

  const Lexicon lexicon = run_stage("refine_labels", [&] { return Lexicon::load(config.lexicon_path); });
  const auto rules =
      run_stage("enrich_correlations", [&] { return CorrelationRule::load(config.rules_path); });
  std::vector<ExplanationTemplate> explanations;
  if (!config.explanations_path.empty()) {
    explanations = run_stage("generate_explanations",
                             [&] { return ExplanationTemplate::load(config.explanations_path); });
  }
  const auto templates =
      run_stage("expand_conversations", [&] { return PromptTemplateSet::load(config.templates_path); });

  ExpandOptions options;
  options.protocol = config.protocol;
  options.multi_turn_ratio = config.multi_turn_ratio;
  options.interleave_k = config.interleave_k;
  options.mcq_option_count = config.mcq_option_count;
  if (!config.vocab_dir.empty()) options.vocab = VocabTables::load_dir(config.vocab_dir);

  auto [refined, refine_report] =
      run_stage("refine_labels", [&] { return refine_labels(std::move(records), lexicon); });
  maybe_dump(config.stage_dir, "stage1_refined", refined, config.dataset_id);
  {
    StageReport s{"refine_labels", n_in, refined.size(), {}};
    s.counters["labels_touched"] = refine_report.labels_touched;
    std::size_t unmapped = 0;
    for (const auto& sub : refine_report.substitutions) {
      if (sub.kind == "unmapped") unmapped += sub.count;
    }
    s.counters["unmapped"] = unmapped;
    s.counters["distinct_substitutions"] = refine_report.substitutions.size();
    report.stages.push_back(std::move(s));
  }

  auto [enriched, enrich_report] =
      run_stage("enrich_correlations", [&] { return enrich_correlations(std::move(refined), rules); });
  maybe_dump(config.stage_dir, "stage2_enriched", enriched, config.dataset_id);
  {
    StageReport s{"enrich_correlations", n_in, enriched.size(), {}};
    s.counters["statements_added"] = enrich_report.statements_added;
    report.stages.push_back(std::move(s));
  }

  auto [explained, explain_report] = run_stage("generate_explanations", [&] {
    return generate_explanations(std::move(enriched), explanations);
  });
  maybe_dump(config.stage_dir, "stage3_explained", explained, config.dataset_id);
  {
    StageReport s{"generate_explanations", n_in, explained.size(), {}};
    s.counters["explanations_added"] = explain_report.explanations_added;
    s.counters["answers_unchanged"] = explain_report.answers_unchanged;
    report.stages.push_back(std::move(s));
  }

  const auto conversations = run_stage("expand_conversations", [&] {
    return expand_conversations(explained, templates, config.mode, config.seed, options);
  });
  {
    StageReport s{"expand_conversations", n_in, explained.size(), {}};
    s.counters["conversations"] = conversations.size();
    report.stages.push_back(std::move(s));
  }
  report.conversations = conversations.size();

  CorpusMetadata meta;
  meta.dataset_id = config.dataset_id;
  run_stage("write_output", [&] {
    const auto parent = std::filesystem::path(config.output).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    return write_conversations(conversations, config.output, meta);
  });

  if (!config.report_path.empty()) {
    std::ofstream out(config.report_path, std::ios::binary);
    if (!out) throw std::runtime_error("pipeline: cannot write report to " + config.report_path);
    out << report.to_json_string() << "\n";
  }
  return report;
}

}  // namespace surgbench
