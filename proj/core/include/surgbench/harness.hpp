#pragma once
// End-to-end evaluation: load a benchmark corpus, sample frames, query a
// model endpoint (or replay canned predictions, or drive the in-process mock
// model), parse responses, score, and persist a run directory.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "surgbench/arena.hpp"
#include "surgbench/datamodel.hpp"
#include "surgbench/metrics.hpp"
#include "surgbench/mock_model.hpp"
#include "surgbench/pipeline.hpp"
#include "surgbench/response_parser.hpp"

namespace surgbench {

// --- suite -----------------------------------------------------------------

struct DatasetSpec {
  std::string id;
  std::vector<TaskKind> tasks;  // scored task first
  std::string corpus;
  std::string primary_metric;  // metric report key feeding the arena vector
  std::vector<Protocol> protocols;
  std::string vocab_dir;  // distractor/parse vocabularies for this dataset
};

struct BenchmarkSuite {
  std::vector<DatasetSpec> datasets;
  std::size_t sample_budget = 1000;
  std::uint64_t seed = 0;
  std::string refusal_patterns_path;

  // Throws unless the six dataset ids are exactly the benchmark set and each
  // primary metric matches its arena-vector field.
  void validate() const;
  static BenchmarkSuite load(const std::string& path);
  std::string canonical_digest() const;  // deterministic config hash input
};

// The six benchmark dataset ids.
std::span<const std::string_view> benchmark_dataset_ids();

// --- endpoints and transports -------------------------------------------------

struct ModelEndpoint {
  std::string name;
  std::string base_uri;
  std::string model_id;
  std::string token_env;   // environment variable holding the API token
  double timeout_s = 60;   // > 0
  int max_retries = 3;     // >= 0
  int max_inflight = 4;    // >= 1
  int retry_base_ms = 250;
  Protocol protocol = Protocol::OV;
  double temperature = 0.0;
  double top_p = 1.0;
  int top_k = 0;
  int max_tokens = 512;

  void validate() const;
};

struct TransportReply {
  int status = 0;       // HTTP status; 0 = transport failure
  std::string body;
  std::string error;
  bool ok() const { return status == 200; }
  // 429 and 5xx are transient; so are connection failures.
  bool transient() const { return status == 0 || status == 429 || status >= 500; }
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual TransportReply post(const std::string& path, const std::string& body,
                              const std::vector<std::pair<std::string, std::string>>& headers,
                              double timeout_s) = 0;
};

// cpp-httplib backed transport for a single host.
std::unique_ptr<Transport> make_http_transport(const std::string& base_uri);

// Scripted transport for tests: replies are served in order, then the last
// one repeats.
class ScriptedTransport : public Transport {
 public:
  explicit ScriptedTransport(std::vector<TransportReply> replies)
      : replies_(std::move(replies)) {}
  TransportReply post(const std::string& path, const std::string& body,
                      const std::vector<std::pair<std::string, std::string>>& headers,
                      double timeout_s) override;
  const std::vector<std::string>& request_bodies() const { return bodies_; }
  const std::vector<std::vector<std::pair<std::string, std::string>>>& request_headers() const {
    return headers_;
  }

 private:
  std::vector<TransportReply> replies_;
  std::vector<std::string> bodies_;
  std::vector<std::vector<std::pair<std::string, std::string>>> headers_;
  std::size_t next_ = 0;
};

// In-process endpoint implementing the wire contract over the mock model:
// post() parses the wire request, looks the conversation up by id, and
// returns {"text": ...}. Lets query_model run a full round trip with no
// network.
class MockWireTransport : public Transport {
 public:
  explicit MockWireTransport(MockModel model) : model_(std::move(model)) {}
  void register_conversation(const Conversation& conversation);
  TransportReply post(const std::string& path, const std::string& body,
                      const std::vector<std::pair<std::string, std::string>>& headers,
                      double timeout_s) override;

 private:
  MockModel model_;
  std::map<std::string, Conversation> conversations_;
};

// Returns base64 image bytes for an image reference, or nullopt in dry-run
// text-only mode.
using ImageProvider = std::function<std::optional<std::string>(const std::string&)>;

// Wire shape: POST /v1/generate with model id, optional conversation
// metadata, a message list of text/image segments, and decoding parameters;
// the response carries generated text. Prior turns are sent as context in
// order.
std::string build_wire_request(const ModelEndpoint& endpoint, const Conversation& conversation,
                               int turn_index, std::span<const std::string> prior_responses,
                               const ImageProvider& images);

// Sends one turn with retry/backoff; refusals are detected on the response
// text; exhausted retries yield a transport-error record (scored incorrect,
// counted separately).
PredictionRecord query_model(const ModelEndpoint& endpoint, Transport& transport,
                             const Conversation& conversation, int turn_index,
                             std::span<const std::string> prior_responses,
                             const ImageProvider& images, const ParseConfig& parse_config);

// --- response sources --------------------------------------------------------

class ResponseSource {
 public:
  virtual ~ResponseSource() = default;
  virtual PredictionRecord respond(const Conversation& conversation, int turn_index) = 0;
  virtual std::string model_name() const = 0;
  // Called once per dataset before querying; canned sources use it to load
  // the right predictions file.
  virtual void begin_dataset(const std::string& dataset_id) { (void)dataset_id; }
  // Called with the full conversation list before any respond(); sources that
  // replay stored predictions verify coverage here and throw with the
  // complete list of missing ids.
  virtual void prepare(const std::vector<Conversation>& conversations) { (void)conversations; }
};

class MockSource : public ResponseSource {
 public:
  MockSource(MockBehavior behavior, VocabTables vocab, ParseConfig parse_config);
  PredictionRecord respond(const Conversation& conversation, int turn_index) override;
  std::string model_name() const override;
  const MockModel& model() const { return model_; }

 private:
  MockModel model_;
  ParseConfig parse_config_;
};

class CannedSource : public ResponseSource {
 public:
  CannedSource(std::string dir, ParseConfig parse_config, std::string name = "canned");
  void begin_dataset(const std::string& dataset_id) override;
  void prepare(const std::vector<Conversation>& conversations) override;
  PredictionRecord respond(const Conversation& conversation, int turn_index) override;
  std::string model_name() const override { return name_; }

 private:
  std::string dir_, name_;
  ParseConfig parse_config_;
  std::map<std::pair<std::string, int>, std::string> responses_;
};

class EndpointSource : public ResponseSource {
 public:
  EndpointSource(ModelEndpoint endpoint, std::unique_ptr<Transport> transport,
                 ImageProvider images, ParseConfig parse_config);
  PredictionRecord respond(const Conversation& conversation, int turn_index) override;
  std::string model_name() const override;

 private:
  ModelEndpoint endpoint_;
  std::unique_ptr<Transport> transport_;
  ImageProvider images_;
  ParseConfig parse_config_;
};

// --- sampling -----------------------------------------------------------------

// Uniform without replacement, deterministic for a fixed seed; corpora
// smaller than the budget are taken whole (in corpus order). Throws on an
// empty id list.
std::vector<std::string> sample_frames(std::span<const std::string> ids, std::size_t budget,
                                       std::uint64_t seed);

// --- run orchestration ----------------------------------------------------------

struct RunManifest {
  std::string run_id;
  std::string suite_hash;
  std::string model;
  std::string protocol;
  std::size_t budget = 0;
  std::uint64_t seed = 0;
  std::map<std::string, std::vector<std::string>> sampled_ids;  // per dataset
  std::string started_at, finished_at;
  std::size_t queries = 0, parsed = 0, parse_failed = 0, refused = 0, transport_errors = 0,
              retries = 0;
  std::string to_json_string() const;
};

struct RunOptions {
  Protocol protocol = Protocol::OV;
  std::string out_dir;  // run directory parent; empty = no persistence
  std::string run_id;   // default: derived from the suite hash
  bool deterministic_clock = false;
  int workers = 1;
  std::optional<std::size_t> budget_override;
};

struct RunResult {
  std::map<std::string, MetricReport> reports;
  ArenaVector arena;
  double arena_total = 0;
  RunManifest manifest;
  std::string run_dir;  // empty when persistence was off
};

// Per dataset: sample, query/load, parse, score; assembles the arena vector
// from the primary metrics and persists everything under the run directory.
RunResult run_eval(const BenchmarkSuite& suite, ResponseSource& source,
                   const RunOptions& options);

// Builds the single-turn evaluation conversation for one record/task under
// the given protocol (MCQ distractors drawn deterministically per sample id).
Conversation build_eval_conversation(const SampleRecord& record, TaskKind task,
                                     Protocol protocol, std::uint64_t seed,
                                     const VocabTables& vocab);

}  // namespace surgbench
