#include "surgbench/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "surgbench/config.hpp"
#include "surgbench/hash.hpp"
#include "surgbench/rng.hpp"
#include "surgbench/strings.hpp"

namespace surgbench {

namespace fs = std::filesystem;

// --- suite ------------------------------------------------------------------

namespace {

constexpr std::string_view kDatasetIds[] = {
    "endovis2017", "endovis2018_vqa", "cholec80", "sar_rarp", "cholect50", "endoscape2023_cvs",
};

const std::map<std::string, std::string>& primary_metric_by_id() {
  static const std::map<std::string, std::string> kMap = {
      {"cholec80", "accuracy"},
      {"sar_rarp", "accuracy"},
      {"cholect50", "triplet_accuracy"},
      {"endovis2017", "miou"},
      {"endovis2018_vqa", "accuracy"},
      {"endoscape2023_cvs", "average_accuracy"},
  };
  return kMap;
}

enum class ScoringFamily { Classification, Detection, Triplet, Cvs, KeywordVqa };

ScoringFamily family_for(const std::string& dataset_id) {
  if (dataset_id == "endovis2017") return ScoringFamily::Detection;
  if (dataset_id == "cholect50") return ScoringFamily::Triplet;
  if (dataset_id == "endoscape2023_cvs") return ScoringFamily::Cvs;
  if (dataset_id == "endovis2018_vqa") return ScoringFamily::KeywordVqa;
  return ScoringFamily::Classification;
}

std::string now_utc(bool deterministic) {
  if (deterministic) return "1970-01-01T00:00:00Z";
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::span<const std::string_view> benchmark_dataset_ids() { return kDatasetIds; }

void BenchmarkSuite::validate() const {
  std::set<std::string> ids;
  for (const auto& d : datasets) ids.insert(d.id);
  std::set<std::string> expected;
  for (const auto& id : kDatasetIds) expected.emplace(id);
  if (ids != expected) {
    std::string msg = "suite: dataset ids must be exactly {";
    bool first = true;
    for (const auto& id : expected) {
      if (!first) msg += ", ";
      msg += id;
      first = false;
    }
    msg += "}";
    throw std::runtime_error(msg);
  }
  for (const auto& d : datasets) {
    const auto expected_metric = primary_metric_by_id().at(d.id);
    if (d.primary_metric != expected_metric) {
      throw std::runtime_error("suite: dataset " + d.id + " primary metric must be " +
                               expected_metric + ", got " + d.primary_metric);
    }
    if (d.tasks.empty()) throw std::runtime_error("suite: dataset " + d.id + " needs a task");
    if (d.corpus.empty()) throw std::runtime_error("suite: dataset " + d.id + " needs a corpus");
  }
}

BenchmarkSuite BenchmarkSuite::load(const std::string& path) {
  const auto cfg = KeyValueConfig::load(path);
  BenchmarkSuite suite;
  suite.sample_budget = static_cast<std::size_t>(cfg.get_int("suite.budget").value_or(1000));
  suite.seed = static_cast<std::uint64_t>(cfg.get_int("suite.seed").value_or(0));
  suite.refusal_patterns_path = cfg.get_or("suite.refusal_patterns", "");
  const std::string default_vocab = cfg.get_or("suite.vocab_dir", "");

  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    if (p.empty() || fs::path(p).is_absolute()) return p;
    return (base / p).lexically_normal().string();
  };

  for (const auto& section : cfg.sections()) {
    if (section.rfind("dataset.", 0) != 0) continue;
    DatasetSpec spec;
    spec.id = section.substr(8);
    spec.corpus = resolve(cfg.require(section + ".corpus"));
    for (const auto& t : split(cfg.require(section + ".task"), ',')) {
      const auto kind = task_kind_from_string(trim(t));
      if (!kind) throw std::runtime_error("suite: unknown task \"" + t + "\" in " + section);
      spec.tasks.push_back(*kind);
    }
    spec.primary_metric = cfg.get_or(section + ".primary_metric",
                                     primary_metric_by_id().count(spec.id)
                                         ? primary_metric_by_id().at(spec.id)
                                         : "");
    for (const auto& p : split(cfg.get_or(section + ".protocols", "ov,mcq"), ',')) {
      const auto proto = protocol_from_string(trim(p));
      if (!proto) throw std::runtime_error("suite: unknown protocol in " + section);
      spec.protocols.push_back(*proto);
    }
    spec.vocab_dir = resolve(cfg.get_or(section + ".vocab_dir", default_vocab));
    suite.datasets.push_back(std::move(spec));
  }
  suite.refusal_patterns_path = resolve(suite.refusal_patterns_path);
  suite.validate();
  return suite;
}

std::string BenchmarkSuite::canonical_digest() const {
  std::string digest = "budget=" + std::to_string(sample_budget) + ";seed=" + std::to_string(seed);
  std::vector<std::string> parts;
  for (const auto& d : datasets) {
    std::string p = d.id + ":" + d.corpus + ":" + d.primary_metric + ":";
    for (const auto& t : d.tasks) p += std::string(to_string(t)) + "+";
    parts.push_back(std::move(p));
  }
  std::sort(parts.begin(), parts.end());
  for (const auto& p : parts) digest += ";" + p;
  return digest;
}

// --- sampling -----------------------------------------------------------------

std::vector<std::string> sample_frames(std::span<const std::string> ids, std::size_t budget,
                                       std::uint64_t seed) {
  if (ids.empty()) throw std::runtime_error("sample_frames: empty corpus");
  if (ids.size() <= budget) {
    return {ids.begin(), ids.end()};
  }
  Rng rng = derive_rng(seed, "sample_frames");
  const auto indices = rng.sample_indices(ids.size(), budget);
  std::vector<std::string> out;
  out.reserve(indices.size());
  for (const auto i : indices) out.push_back(ids[i]);
  return out;
}

// --- eval conversations ----------------------------------------------------------

namespace {

const PromptTemplateSet& eval_templates() {
  static const PromptTemplateSet kSet = [] {
    PromptTemplateSet set;
    const std::pair<TaskKind, const char*> prompts[] = {
        {TaskKind::InstrumentRecognition, "Which surgical instrument is visible in this frame?"},
        {TaskKind::InstrumentLocalizationBox,
         "Report each instrument in this frame with its bounding box as [x1, y1, x2, y2]."},
        {TaskKind::InstrumentLocalizationGrid,
         "Which of the five positions (left, right, top, bottom, center) holds the instrument?"},
        {TaskKind::TissueRecognition,
         "Which tissue or anatomical structure is shown in this frame?"},
        {TaskKind::TissueLocalization, "Where is the named tissue located in this frame?"},
        {TaskKind::PhaseRecognition, "What is the current surgical phase in this frame?"},
        {TaskKind::StepRecognition, "What is the current surgical step in this frame?"},
        {TaskKind::ActionRecognition, "What action is the surgeon performing in this frame?"},
        {TaskKind::TripletRecognition,
         "State the instrument, verb, and target for the tool-tissue interaction in this frame."},
        {TaskKind::CvsAssessment,
         "Assess the three critical view of safety criteria (cystic plate exposure, lower-third "
         "clearance, two structures) as yes or no, in order."},
    };
    for (const auto& [task, prompt] : prompts) {
      set.questions[task] = {prompt};
      set.answers[task] = {"{answer}"};
    }
    return set;
  }();
  return kSet;
}

}  // namespace

Conversation build_eval_conversation(const SampleRecord& record, TaskKind task,
                                     Protocol protocol, std::uint64_t seed,
                                     const VocabTables& vocab) {
  SampleRecord only = record;
  only.statements.clear();
  std::map<TaskKind, TaskAnnotation> kept;
  const auto it = record.labels.find(task);
  if (it == record.labels.end()) {
    throw std::runtime_error("build_eval_conversation: record " + record.sample_id +
                             " lacks task " + std::string(to_string(task)));
  }
  kept.emplace(task, it->second);
  only.labels = std::move(kept);

  ExpandOptions options;
  options.protocol = protocol;
  options.vocab = vocab;
  const auto conversations = expand_conversations(std::span<const SampleRecord>(&only, 1),
                                                  eval_templates(), ExpandMode::SingleTurn, seed,
                                                  options);
  return conversations.front();
}

// --- response sources --------------------------------------------------------------

MockSource::MockSource(MockBehavior behavior, VocabTables vocab, ParseConfig parse_config)
    : model_(behavior, std::move(vocab)), parse_config_(std::move(parse_config)) {}

PredictionRecord MockSource::respond(const Conversation& conversation, int turn_index) {
  PredictionRecord rec;
  rec.conversation_id = conversation.conversation_id;
  rec.turn_index = turn_index;
  rec.response = model_.generate(conversation, turn_index);
  rec.status = is_refusal(rec.response, parse_config_) ? ParseStatus::Refused
                                                       : ParseStatus::ParseFailed;
  return rec;
}

std::string MockSource::model_name() const { return "mock:" + model_.behavior().to_string(); }

CannedSource::CannedSource(std::string dir, ParseConfig parse_config, std::string name)
    : dir_(std::move(dir)), name_(std::move(name)), parse_config_(std::move(parse_config)) {}

void CannedSource::begin_dataset(const std::string& dataset_id) {
  responses_.clear();
  const fs::path file = fs::path(dir_) / dataset_id / "predictions.jsonl";
  if (!fs::exists(file)) {
    throw std::runtime_error("canned predictions missing for dataset " + dataset_id + ": " +
                             file.string());
  }
  for (const auto& p : read_predictions(file.string())) {
    responses_[{p.conversation_id, p.turn_index}] = p.response;
  }
}

void CannedSource::prepare(const std::vector<Conversation>& conversations) {
  std::vector<std::string> missing;
  for (const auto& c : conversations) {
    for (std::size_t t = 0; t < c.turns.size(); ++t) {
      if (!responses_.count({c.conversation_id, static_cast<int>(t)})) {
        missing.push_back(c.conversation_id + "#turn" + std::to_string(t));
      }
    }
  }
  if (!missing.empty()) {
    std::string msg = "canned predictions missing for " + std::to_string(missing.size()) +
                      " sampled id(s):";
    for (const auto& m : missing) msg += " " + m;
    throw std::runtime_error(msg);
  }
}

PredictionRecord CannedSource::respond(const Conversation& conversation, int turn_index) {
  const auto it = responses_.find({conversation.conversation_id, turn_index});
  if (it == responses_.end()) {
    throw std::runtime_error("canned predictions missing response for " +
                             conversation.conversation_id + " turn " +
                             std::to_string(turn_index));
  }
  PredictionRecord rec;
  rec.conversation_id = conversation.conversation_id;
  rec.turn_index = turn_index;
  rec.response = it->second;
  rec.status = is_refusal(rec.response, parse_config_) ? ParseStatus::Refused
                                                       : ParseStatus::ParseFailed;
  return rec;
}

EndpointSource::EndpointSource(ModelEndpoint endpoint, std::unique_ptr<Transport> transport,
                               ImageProvider images, ParseConfig parse_config)
    : endpoint_(std::move(endpoint)),
      transport_(std::move(transport)),
      images_(std::move(images)),
      parse_config_(std::move(parse_config)) {}

PredictionRecord EndpointSource::respond(const Conversation& conversation, int turn_index) {
  return query_model(endpoint_, *transport_, conversation, turn_index, {}, images_,
                     parse_config_);
}

std::string EndpointSource::model_name() const {
  return endpoint_.model_id.empty() ? endpoint_.name : endpoint_.model_id;
}

// --- manifest ------------------------------------------------------------------------

std::string RunManifest::to_json_string() const {
  nlohmann::json j;
  j["run_id"] = run_id;
  j["suite_hash"] = suite_hash;
  j["model"] = model;
  j["protocol"] = protocol;
  j["budget"] = budget;
  j["seed"] = seed;
  j["sampled_ids"] = sampled_ids;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  j["outcomes"] = {{"queries", queries},
                   {"parsed", parsed},
                   {"parse_failed", parse_failed},
                   {"refused", refused},
                   {"transport_errors", transport_errors},
                   {"retries", retries}};
  return j.dump(2);
}

// --- scoring -------------------------------------------------------------------------

namespace {

struct EvalItem {
  const SampleRecord* record = nullptr;
  TaskKind task = TaskKind::InstrumentRecognition;
  Conversation conversation;
  PredictionRecord prediction;
};

std::string fold_key(std::string_view s) { return fold_case(collapse_whitespace(s)); }

// Updates item.prediction.{status,parsed} from the raw response.
void parse_item(EvalItem& item, ScoringFamily family, Protocol protocol,
                const VocabTables& vocab, const ParseConfig& parse_cfg) {
  const TaskKind task = item.task;
  auto& pred = item.prediction;
  if (pred.status == ParseStatus::Refused || pred.status == ParseStatus::TransportError) {
    return;  // refusal detection already ran; transport errors stay as-is
  }
  const auto& turn = item.conversation.turns.at(static_cast<std::size_t>(pred.turn_index));

  // MCQ: resolve the chosen option first; structured parsing then runs on the
  // option text. OV never consults parse_choice.
  std::string text = pred.response;
  if (protocol == Protocol::MCQ) {
    const auto choice = parse_choice(pred.response, turn.options, parse_cfg);
    if (choice.refused) {
      pred.status = ParseStatus::Refused;
      return;
    }
    if (!choice.ok()) {
      pred.status = ParseStatus::ParseFailed;
      return;
    }
    text = turn.options[static_cast<std::size_t>(choice.index)];
  }

  switch (family) {
    case ScoringFamily::Classification: {
      const auto it = vocab.classes.find(task);
      if (it == vocab.classes.end() || it->second.empty()) {
        throw std::runtime_error("run_eval: classification scoring needs a vocabulary for " +
                                 std::string(to_string(task)));
      }
      const auto member = match_vocab(text, it->second, parse_cfg);
      if (member) {
        pred.status = ParseStatus::Parsed;
        pred.parsed = ClassLabel{*member};
      } else {
        pred.status = ParseStatus::ParseFailed;
      }
      break;
    }
    case ScoringFamily::Detection: {
      const auto boxes = parse_bboxes(text, parse_cfg);
      if (boxes.refused) {
        pred.status = ParseStatus::Refused;
      } else if (boxes.boxes.empty()) {
        pred.status = ParseStatus::ParseFailed;
      } else {
        pred.status = ParseStatus::Parsed;
        pred.parsed = BoxSet{boxes.boxes};
      }
      break;
    }
    case ScoringFamily::Triplet: {
      if (!vocab.triplet) {
        throw std::runtime_error("run_eval: triplet scoring needs triplet vocabularies");
      }
      const auto t = parse_triplet(text, *vocab.triplet, parse_cfg);
      if (t.refused) {
        pred.status = ParseStatus::Refused;
      } else if (t.triplet) {
        pred.status = ParseStatus::Parsed;
        pred.parsed = *t.triplet;
      } else {
        pred.status = ParseStatus::ParseFailed;
      }
      break;
    }
    case ScoringFamily::Cvs: {
      const auto v = parse_cvs(text, parse_cfg);
      if (v.refused) {
        pred.status = ParseStatus::Refused;
      } else if (v.cvs) {
        pred.status = ParseStatus::Parsed;
        pred.parsed = *v.cvs;
      } else {
        pred.status = ParseStatus::ParseFailed;
      }
      break;
    }
    case ScoringFamily::KeywordVqa: {
      // Free-text VQA: the structured answer is the text itself; correctness
      // is decided at scoring time by keyword containment (OV) or the chosen
      // option (MCQ).
      pred.status = ParseStatus::Parsed;
      pred.parsed = ClassLabel{collapse_whitespace(text)};
      break;
    }
  }
}

MetricReport score_dataset(std::vector<EvalItem>& items, ScoringFamily family,
                           Protocol protocol, const VocabTables& vocab,
                           const ParseConfig& parse_cfg) {
  MetricReport report;
  if (items.empty()) return report;
  switch (family) {
    case ScoringFamily::Classification: {
      std::vector<std::string> gt;
      std::vector<PredLabel> pred;
      for (const auto& item : items) {
        const auto& turn = item.conversation.turns.front();
        gt.push_back(turn.keywords.front());
        if (item.prediction.status == ParseStatus::Parsed && item.prediction.parsed) {
          pred.push_back(std::get<ClassLabel>(*item.prediction.parsed).value);
        } else {
          pred.push_back(std::nullopt);
        }
      }
      report = classification_report(gt, pred, vocab.classes.at(items.front().task));
      break;
    }
    case ScoringFamily::Detection: {
      DetectionSet set;
      for (const auto& item : items) {
        ImageDetections img;
        const auto& ann = item.record->labels.at(item.task);
        img.ground_truth = std::get<BoxSet>(ann.label).boxes;
        for (auto& g : img.ground_truth) {
          if (g.label) g.label = fold_key(*g.label);
        }
        if (item.prediction.status == ParseStatus::Parsed && item.prediction.parsed) {
          for (const auto& b : std::get<BoxSet>(*item.prediction.parsed).boxes) {
            ScoredBox sb;
            sb.box = b;
            sb.cls = b.label ? fold_key(*b.label) : "";
            sb.confidence = 1.0;  // free-text responses carry no confidence
            img.predictions.push_back(std::move(sb));
          }
        }
        set.push_back(std::move(img));
      }
      report = detection_map(set);
      break;
    }
    case ScoringFamily::Triplet: {
      std::vector<Triplet> gt;
      std::vector<PredTriplet> pred;
      for (const auto& item : items) {
        gt.push_back(std::get<Triplet>(item.record->labels.at(item.task).label));
        if (item.prediction.status == ParseStatus::Parsed && item.prediction.parsed) {
          pred.push_back(std::get<Triplet>(*item.prediction.parsed));
        } else {
          pred.push_back(std::nullopt);
        }
      }
      report = triplet_metrics(gt, pred);
      break;
    }
    case ScoringFamily::Cvs: {
      std::vector<CvsVector> gt;
      std::vector<PredCvs> pred;
      for (const auto& item : items) {
        gt.push_back(std::get<CvsVector>(item.record->labels.at(item.task).label));
        if (item.prediction.status == ParseStatus::Parsed && item.prediction.parsed) {
          pred.push_back(std::get<CvsVector>(*item.prediction.parsed));
        } else {
          pred.push_back(std::nullopt);
        }
      }
      report = cvs_metrics(gt, pred);
      break;
    }
    case ScoringFamily::KeywordVqa: {
      std::size_t correct = 0;
      std::vector<std::string> candidates, references;
      for (auto& item : items) {
        const auto& turn = item.conversation.turns.front();
        candidates.push_back(item.prediction.response);
        references.push_back(turn.answer);
        if (protocol == Protocol::MCQ) {
          if (item.prediction.status != ParseStatus::Parsed || !item.prediction.parsed) continue;
          const auto& chosen = std::get<ClassLabel>(*item.prediction.parsed).value;
          if (turn.correct_option >= 0 &&
              fold_key(chosen) ==
                  fold_key(turn.options[static_cast<std::size_t>(turn.correct_option)])) {
            ++correct;
          }
        } else {
          if (item.prediction.status == ParseStatus::Refused ||
              item.prediction.status == ParseStatus::TransportError) {
            continue;
          }
          const auto verdict = match_keyword(item.prediction.response, turn.keywords, parse_cfg);
          if (verdict == KeywordVerdict::Correct) ++correct;
        }
      }
      report = text_overlap(candidates, references);
      const double n = items.empty() ? 1.0 : static_cast<double>(items.size());
      report.values["accuracy"] = 100.0 * static_cast<double>(correct) / n;
      report.sample_count = items.size();
      break;
    }
  }

  // Status-based outcome counts override what the metric functions inferred.
  report.parse_failures = 0;
  report.refusals = 0;
  for (const auto& item : items) {
    switch (item.prediction.status) {
      case ParseStatus::ParseFailed:
      case ParseStatus::TransportError: ++report.parse_failures; break;
      case ParseStatus::Refused: ++report.refusals; break;
      case ParseStatus::Parsed: break;
    }
  }
  return report;
}

double& arena_field(ArenaVector& v, const std::string& dataset_id) {
  if (dataset_id == "cholec80") return v.cholec80_phase_accuracy;
  if (dataset_id == "sar_rarp") return v.sar_rarp_action_accuracy;
  if (dataset_id == "cholect50") return v.cholect50_triplet_accuracy;
  if (dataset_id == "endovis2017") return v.endovis2017_miou;
  if (dataset_id == "endovis2018_vqa") return v.endovis2018_vqa_accuracy;
  return v.endoscape_cvs_average_accuracy;
}

}  // namespace

RunResult run_eval(const BenchmarkSuite& suite, ResponseSource& source,
                   const RunOptions& options) {
  suite.validate();

  ParseConfig parse_cfg = ParseConfig::defaults();
  if (!suite.refusal_patterns_path.empty()) {
    parse_cfg.refusal_patterns = ParseConfig::load_patterns(suite.refusal_patterns_path);
  }

  const std::size_t budget = options.budget_override.value_or(suite.sample_budget);

  RunResult result;
  auto& manifest = result.manifest;
  manifest.suite_hash =
      hex64(fnv1a64(suite.canonical_digest() +
                    ";protocol=" + std::string(to_string(options.protocol)) +
                    ";budget=" + std::to_string(budget)));
  manifest.run_id = options.run_id.empty() ? "run-" + manifest.suite_hash : options.run_id;
  manifest.model = source.model_name();
  manifest.protocol = std::string(to_string(options.protocol));
  manifest.budget = budget;
  manifest.seed = suite.seed;
  manifest.started_at = now_utc(options.deterministic_clock);

  fs::path run_dir;
  if (!options.out_dir.empty()) {
    run_dir = fs::path(options.out_dir) / manifest.run_id;
    fs::create_directories(run_dir);
    result.run_dir = run_dir.string();
  }

  for (const auto& spec : suite.datasets) {
    if (std::find(spec.protocols.begin(), spec.protocols.end(), options.protocol) ==
        spec.protocols.end()) {
      throw std::runtime_error("run_eval: dataset " + spec.id + " does not support protocol " +
                               std::string(to_string(options.protocol)));
    }
    source.begin_dataset(spec.id);

    const auto corpus = read_corpus(spec.corpus);
    VocabTables vocab;
    if (!spec.vocab_dir.empty()) vocab = VocabTables::load_dir(spec.vocab_dir);

    // A record is eligible when it carries one of the dataset's tasks; the
    // first listed task that is present gets scored.
    std::map<std::string, const SampleRecord*> by_id;
    std::map<std::string, TaskKind> task_of;
    std::vector<std::string> ids;
    for (const auto& r : corpus.records) {
      for (const TaskKind t : spec.tasks) {
        if (!r.labels.count(t)) continue;
        ids.push_back(r.sample_id);
        by_id[r.sample_id] = &r;
        task_of[r.sample_id] = t;
        break;
      }
    }
    const auto sampled =
        sample_frames(ids, budget, fnv1a64(spec.id, fnv1a64_mix(suite.seed, kFnvOffset)));
    manifest.sampled_ids[spec.id] = sampled;

    std::vector<EvalItem> items(sampled.size());
    for (std::size_t i = 0; i < sampled.size(); ++i) {
      items[i].record = by_id.at(sampled[i]);
      items[i].task = task_of.at(sampled[i]);
      items[i].conversation = build_eval_conversation(*items[i].record, items[i].task,
                                                      options.protocol, suite.seed, vocab);
    }

    // Query (or replay) each conversation; results land in a pre-sized slot
    // array, so aggregation is order-independent across workers.
    {
      std::vector<Conversation> conversations;
      conversations.reserve(items.size());
      for (const auto& item : items) conversations.push_back(item.conversation);
      // Canned sources fail fast here, listing every missing id at once.
      source.prepare(conversations);

      const int workers = std::max(1, options.workers);
      if (workers == 1) {
        for (auto& item : items) {
          item.prediction = source.respond(item.conversation, 0);
        }
      } else {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> cursor{0};
        for (int w = 0; w < workers; ++w) {
          pool.emplace_back([&] {
            for (;;) {
              const std::size_t i = cursor.fetch_add(1);
              if (i >= items.size()) return;
              items[i].prediction = source.respond(items[i].conversation, 0);
            }
          });
        }
        for (auto& t : pool) t.join();
      }
    }

    for (auto& item : items) {
      parse_item(item, family_for(spec.id), options.protocol, vocab, parse_cfg);
      manifest.queries += 1;
      manifest.retries += static_cast<std::size_t>(item.prediction.retries);
      switch (item.prediction.status) {
        case ParseStatus::Parsed: ++manifest.parsed; break;
        case ParseStatus::ParseFailed: ++manifest.parse_failed; break;
        case ParseStatus::Refused: ++manifest.refused; break;
        case ParseStatus::TransportError: ++manifest.transport_errors; break;
      }
    }

    MetricReport report =
        score_dataset(items, family_for(spec.id), options.protocol, vocab, parse_cfg);
    arena_field(result.arena, spec.id) = report.at(spec.primary_metric);

    if (!run_dir.empty()) {
      const fs::path ds_dir = run_dir / spec.id;
      fs::create_directories(ds_dir);
      std::vector<PredictionRecord> raw, parsed;
      for (const auto& item : items) {
        PredictionRecord r = item.prediction;
        r.parsed.reset();  // raw file: outcome and text, no structured answer
        raw.push_back(std::move(r));
        parsed.push_back(item.prediction);
      }
      write_predictions(raw, (ds_dir / "predictions.jsonl").string());
      write_predictions(parsed, (ds_dir / "parsed.jsonl").string());
      report.save((ds_dir / "report.json").string());
    }
    result.reports[spec.id] = std::move(report);
  }

  result.arena_total = arena_score(result.arena);
  manifest.finished_at = now_utc(options.deterministic_clock);

  if (!run_dir.empty()) {
    {
      std::ofstream out(run_dir / "manifest.json", std::ios::binary);
      out << manifest.to_json_string() << "\n";
    }
    {
      std::ofstream out(run_dir / "arena.json", std::ios::binary);
      out << arena_vector_to_json(result.arena) << "\n";
    }
    LeaderboardEntry entry;
    entry.model = manifest.model;
    entry.institute = "local";
    entry.protocol = options.protocol;
    entry.vector = result.arena;
    const auto board = leaderboard({entry});
    std::ofstream(run_dir / "leaderboard.txt", std::ios::binary) << board.text;
    std::ofstream(run_dir / "leaderboard.json", std::ios::binary) << board.json << "\n";
  }
  return result;
}

}  // namespace surgbench
