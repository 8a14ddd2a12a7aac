#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "surgbench/harness.hpp"
#include "surgbench/strings.hpp"

using namespace surgbench;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> make_ids(std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("id-" + std::to_string(i));
  return ids;
}

BenchmarkSuite fixture_suite(std::size_t per_dataset, std::uint64_t seed, std::size_t budget,
                             const char* tag) {
  const auto dir = testsupport::unique_temp_dir(tag);
  return BenchmarkSuite::load(
      testsupport::write_benchmark_fixture(dir, per_dataset, seed, budget));
}

}  // namespace

TEST_CASE("sample_frames takes the whole corpus when it is under budget") {
  const auto ids = make_ids(500);
  const auto sampled = sample_frames(ids, 1000, 7);
  CHECK(sampled == ids);
}

TEST_CASE("sample_frames is deterministic per seed and uniform without replacement") {
  const auto ids = make_ids(5000);
  const auto a = sample_frames(ids, 1000, 11);
  const auto b = sample_frames(ids, 1000, 11);
  CHECK(a == b);
  CHECK(a.size() == 1000);
  const std::set<std::string> unique(a.begin(), a.end());
  CHECK(unique.size() == 1000);  // no replacement
}

TEST_CASE("two seeds overlap near the hypergeometric expectation") {
  const auto ids = make_ids(5000);
  const auto a = sample_frames(ids, 1000, 1);
  const auto b = sample_frames(ids, 1000, 2);
  CHECK(a != b);
  const std::set<std::string> sa(a.begin(), a.end());
  std::size_t overlap = 0;
  for (const auto& id : b) {
    if (sa.count(id)) ++overlap;
  }
  const auto bound = oracle::sample_overlap_bound(5000, 1000);
  CHECK(bound.mean == doctest::Approx(200.0));
  CHECK(std::abs(static_cast<double>(overlap) - bound.mean) <= 5.0 * bound.stddev);
}

TEST_CASE("sample_frames rejects an empty corpus") {
  CHECK_THROWS(sample_frames({}, 10, 0));
}

TEST_CASE("suite validation requires the six benchmark ids and primary metrics") {
  auto suite = fixture_suite(6, 1, 6, "suite_valid");
  CHECK_NOTHROW(suite.validate());
  auto broken = suite;
  broken.datasets[0].id = "cholec81";
  CHECK_THROWS(broken.validate());
  auto wrong_metric = suite;
  for (auto& d : wrong_metric.datasets) {
    if (d.id == "endovis2017") d.primary_metric = "accuracy";
  }
  CHECK_THROWS(wrong_metric.validate());
}

TEST_CASE("query_model retries transient failures with backoff") {
  ModelEndpoint endpoint;
  endpoint.base_uri = "scripted://";
  endpoint.model_id = "m";
  endpoint.max_retries = 3;
  endpoint.retry_base_ms = 0;

  Conversation c;
  c.conversation_id = "c1";
  c.sample_id = "s1";
  Turn t;
  t.prompt = "?";
  t.answer = "a";
  t.keywords = {"a"};
  c.turns.push_back(t);

  SUBCASE("429 then 200 succeeds with one retry") {
    ScriptedTransport transport({{429, "slow down", ""}, {200, R"({"text":"hello"})", ""}});
    const auto rec = query_model(endpoint, transport, c, 0, {}, {}, ParseConfig::defaults());
    CHECK(rec.response == "hello");
    CHECK(rec.retries == 1);
    CHECK(rec.status == ParseStatus::ParseFailed);  // pending structured parse
  }
  SUBCASE("exhausted retries yield a transport error") {
    ScriptedTransport transport({{503, "down", ""}});
    const auto rec = query_model(endpoint, transport, c, 0, {}, {}, ParseConfig::defaults());
    CHECK(rec.status == ParseStatus::TransportError);
    CHECK(rec.retries == endpoint.max_retries);
  }
  SUBCASE("non-transient status fails immediately") {
    ScriptedTransport transport({{404, "no", ""}});
    const auto rec = query_model(endpoint, transport, c, 0, {}, {}, ParseConfig::defaults());
    CHECK(rec.status == ParseStatus::TransportError);
    CHECK(rec.retries == 0);
  }
  SUBCASE("refusal text is recorded as refused") {
    ScriptedTransport transport({{200, R"({"text":"I cannot assist with that request."})", ""}});
    const auto rec = query_model(endpoint, transport, c, 0, {}, {}, ParseConfig::defaults());
    CHECK(rec.status == ParseStatus::Refused);
  }
}

TEST_CASE("query_model sends the bearer token from the configured environment variable") {
  ::setenv("SURGBENCH_TEST_TOKEN", "sekrit", 1);
  ModelEndpoint endpoint;
  endpoint.model_id = "m";
  endpoint.token_env = "SURGBENCH_TEST_TOKEN";
  endpoint.retry_base_ms = 0;
  Conversation c;
  c.conversation_id = "c-token";
  Turn t;
  t.prompt = "?";
  t.answer = "a";
  t.keywords = {"a"};
  c.turns.push_back(t);
  ScriptedTransport transport({{200, R"({"text":"ok"})", ""}});
  query_model(endpoint, transport, c, 0, {}, {}, ParseConfig::defaults());
  REQUIRE(transport.request_headers().size() == 1);
  bool found = false;
  for (const auto& [k, v] : transport.request_headers().front()) {
    if (k == "Authorization" && v == "Bearer sekrit") found = true;
  }
  CHECK(found);
  ::unsetenv("SURGBENCH_TEST_TOKEN");
}

TEST_CASE("the wire request embeds image bytes from the provider on the first message") {
  ModelEndpoint endpoint;
  endpoint.model_id = "m";
  Conversation c;
  c.conversation_id = "c-img";
  c.sample_id = "frame-1";
  Turn t;
  t.prompt = "where?";
  t.answer = "a";
  t.keywords = {"a"};
  c.turns.push_back(t);
  const ImageProvider provider = [](const std::string& ref) -> std::optional<std::string> {
    CHECK(ref == "frame-1");
    return std::string("QUJDRA==");
  };
  const auto body = build_wire_request(endpoint, c, 0, {}, provider);
  CHECK(body.find("QUJDRA==") != std::string::npos);
  CHECK(body.find("\"b64\"") != std::string::npos);
  // Dry-run: no provider, no image segment.
  const auto dry = build_wire_request(endpoint, c, 0, {}, {});
  CHECK(dry.find("\"b64\"") == std::string::npos);
}

TEST_CASE("the wire request carries prior turns in order under the documented shape") {
  ModelEndpoint endpoint;
  endpoint.model_id = "m";
  Conversation c;
  c.conversation_id = "c2";
  c.sample_id = "s2";
  for (int i = 0; i < 3; ++i) {
    Turn t;
    t.prompt = "prompt " + std::to_string(i);
    t.answer = "answer " + std::to_string(i);
    t.keywords = {"k"};
    c.turns.push_back(t);
  }
  const std::vector<std::string> priors = {"model said 0", "model said 1"};
  const auto body = build_wire_request(endpoint, c, 2, priors, {});
  CHECK(body.find("prompt 0") < body.find("model said 0"));
  CHECK(body.find("model said 0") < body.find("prompt 1"));
  CHECK(body.find("model said 1") < body.find("prompt 2"));
  CHECK(body.find("\"temperature\"") != std::string::npos);
  CHECK(body.find("\"conversation_id\"") != std::string::npos);
}

TEST_CASE("run_eval: oracle scores 100 everywhere and arena 600") {
  auto suite = fixture_suite(8, 3, 8, "run_oracle");
  MockSource source(MockBehavior::oracle(), testsupport::load_default_vocab(),
                    ParseConfig::defaults());
  RunOptions options;
  options.protocol = Protocol::OV;
  const auto result = run_eval(suite, source, options);
  for (const auto& [dataset, report] : result.reports) {
    CAPTURE(dataset);
    for (const auto& d : suite.datasets) {
      if (d.id == dataset) CHECK(report.at(d.primary_metric) == 100.0);
    }
  }
  CHECK(result.arena_total == 600.0);
  // Conservation: every query accounted for.
  const auto& m = result.manifest;
  CHECK(m.queries == m.parsed + m.parse_failed + m.refused + m.transport_errors);
  CHECK(m.queries == 6 * 8);
}

TEST_CASE("run_eval: MCQ protocol scores the oracle at 100 too") {
  auto suite = fixture_suite(6, 5, 6, "run_mcq");
  MockSource source(MockBehavior::oracle(), testsupport::load_default_vocab(),
                    ParseConfig::defaults());
  RunOptions options;
  options.protocol = Protocol::MCQ;
  const auto result = run_eval(suite, source, options);
  CHECK(result.arena_total == 600.0);
}

TEST_CASE("run_eval: refuser counts land in the refusal column and score zero") {
  auto suite = fixture_suite(6, 5, 6, "run_refuser");
  MockSource source(MockBehavior::refuser(1.0, 2), testsupport::load_default_vocab(),
                    ParseConfig::defaults());
  RunOptions options;
  options.protocol = Protocol::OV;
  const auto result = run_eval(suite, source, options);
  CHECK(result.manifest.refused == result.manifest.queries);
  CHECK(result.reports.at("cholec80").at("accuracy") == 0.0);
  CHECK(result.reports.at("cholec80").refusals == 6);
}

TEST_CASE("run_eval: planted accuracy equals the replayed realized fraction exactly") {
  auto suite = fixture_suite(20, 9, 20, "run_planted");
  const auto behavior = MockBehavior::planted(0.6, 4);
  MockSource source(behavior, testsupport::load_default_vocab(), ParseConfig::defaults());
  RunOptions options;
  options.protocol = Protocol::OV;
  const auto result = run_eval(suite, source, options);

  const MockModel replay(behavior);
  for (const auto& spec : suite.datasets) {
    const auto& sampled = result.manifest.sampled_ids.at(spec.id);
    const std::size_t n = result.reports.at(spec.id).sample_count;
    REQUIRE(n == sampled.size());
    // Recompute the seeded draw per conversation id (sample_id#task).
    std::size_t correct = 0;
    for (const auto& sample_id : sampled) {
      // One task per fixture record; id is sample#task.
      const auto& record_task = spec.id == "endovis2018_vqa"
                                    ? std::string()  // mixed tasks handled below
                                    : std::string(to_string(spec.tasks.front()));
      Conversation stub;
      if (!record_task.empty()) {
        stub.conversation_id = sample_id + "#" + record_task;
      } else {
        // VQA fixture alternates instrument/tissue by record index parity.
        const int index = std::stoi(sample_id.substr(sample_id.size() - 4));
        stub.conversation_id =
            sample_id + "#" +
            std::string(to_string(index % 2 == 0 ? TaskKind::InstrumentRecognition
                                                 : TaskKind::TissueRecognition));
      }
      stub.turns.emplace_back();
      if (replay.draw_correct(stub, 0)) ++correct;
    }
    const double expected = 100.0 * static_cast<double>(correct) / static_cast<double>(n);
    CAPTURE(spec.id);
    CHECK(result.reports.at(spec.id).at(spec.primary_metric) == expected);
  }
}

TEST_CASE("run_eval: replays of canned predictions are byte-identical across worker counts") {
  const auto dir = testsupport::unique_temp_dir("run_replay");
  const auto suite = BenchmarkSuite::load(testsupport::write_benchmark_fixture(dir, 10, 21, 10));

  // First: produce predictions with the mock, persisted to a run directory.
  MockSource mock(MockBehavior::planted(0.5, 8), testsupport::load_default_vocab(),
                  ParseConfig::defaults());
  RunOptions produce;
  produce.protocol = Protocol::OV;
  produce.out_dir = (dir / "runs").string();
  produce.run_id = "seedrun";
  produce.deterministic_clock = true;
  const auto first = run_eval(suite, mock, produce);
  REQUIRE(!first.run_dir.empty());

  // Replay the canned predictions twice, with different worker counts.
  auto replay_once = [&](const std::string& run_id, int workers) {
    CannedSource canned(first.run_dir, ParseConfig::defaults());
    RunOptions options;
    options.protocol = Protocol::OV;
    options.out_dir = (dir / "replays").string();
    options.run_id = run_id;
    options.deterministic_clock = true;
    options.workers = workers;
    return run_eval(suite, canned, options);
  };
  const auto a = replay_once("replay_a", 1);
  const auto b = replay_once("replay_b", 4);

  for (const auto& name : {"leaderboard.txt", "leaderboard.json", "arena.json"}) {
    CHECK(slurp(fs::path(a.run_dir) / name) == slurp(fs::path(b.run_dir) / name));
  }
  // Manifests agree apart from the caller-chosen run id.
  const auto manifest_a = replace_all(slurp(fs::path(a.run_dir) / "manifest.json"), "replay_a", "X");
  const auto manifest_b = replace_all(slurp(fs::path(b.run_dir) / "manifest.json"), "replay_b", "X");
  CHECK(manifest_a == manifest_b);
  for (const auto& spec : suite.datasets) {
    for (const auto& name : {"predictions.jsonl", "parsed.jsonl", "report.json"}) {
      CAPTURE(spec.id);
      CAPTURE(name);
      CHECK(slurp(fs::path(a.run_dir) / spec.id / name) ==
            slurp(fs::path(b.run_dir) / spec.id / name));
    }
  }
  // The replay reproduces the original scores.
  CHECK(a.arena_total == first.arena_total);
}

TEST_CASE("run_eval: canned predictions missing sampled ids fail hard, listing them") {
  const auto dir = testsupport::unique_temp_dir("run_missing");
  const auto suite = BenchmarkSuite::load(testsupport::write_benchmark_fixture(dir, 6, 2, 6));

  MockSource mock(MockBehavior::oracle(), testsupport::load_default_vocab(),
                  ParseConfig::defaults());
  RunOptions produce;
  produce.protocol = Protocol::OV;
  produce.out_dir = (dir / "runs").string();
  produce.run_id = "base";
  const auto first = run_eval(suite, mock, produce);

  // Drop two lines from one dataset's predictions.
  const fs::path pred_path = fs::path(first.run_dir) / "cholec80" / "predictions.jsonl";
  auto records = read_predictions(pred_path.string());
  REQUIRE(records.size() == 6);
  const auto dropped_a = records[1].conversation_id;
  const auto dropped_b = records[4].conversation_id;
  records.erase(records.begin() + 4);
  records.erase(records.begin() + 1);
  write_predictions(records, pred_path.string());

  CannedSource canned(first.run_dir, ParseConfig::defaults());
  RunOptions options;
  options.protocol = Protocol::OV;
  try {
    run_eval(suite, canned, options);
    FAIL("expected a throw");
  } catch (const std::exception& e) {
    const std::string msg = e.what();
    CHECK(msg.find(dropped_a) != std::string::npos);
    CHECK(msg.find(dropped_b) != std::string::npos);
  }
}

TEST_CASE("run_eval through an endpoint source: retries surface in the manifest") {
  const auto dir = testsupport::unique_temp_dir("run_endpoint");
  const auto suite = BenchmarkSuite::load(testsupport::write_benchmark_fixture(dir, 5, 31, 5));
  const auto vocab = testsupport::load_default_vocab();

  // Wire-level mock with every eval conversation registered; the decorator
  // returns 429 on the first attempt of every query.
  auto wire = std::make_unique<MockWireTransport>(MockModel(MockBehavior::oracle(), vocab));
  for (const auto& spec : suite.datasets) {
    const auto corpus = read_corpus(spec.corpus);
    for (const auto& record : corpus.records) {
      for (const TaskKind task : spec.tasks) {
        if (!record.labels.count(task)) continue;
        wire->register_conversation(
            build_eval_conversation(record, task, Protocol::OV, suite.seed, vocab));
        break;
      }
    }
  }
  struct FlakyOnce : Transport {
    std::unique_ptr<Transport> inner;
    int calls = 0;
    explicit FlakyOnce(std::unique_ptr<Transport> t) : inner(std::move(t)) {}
    TransportReply post(const std::string& path, const std::string& body,
                        const std::vector<std::pair<std::string, std::string>>& headers,
                        double timeout_s) override {
      if (calls++ % 2 == 0) return {429, "busy", ""};
      return inner->post(path, body, headers, timeout_s);
    }
  };

  ModelEndpoint endpoint;
  endpoint.base_uri = "mock://flaky";
  endpoint.model_id = "flaky-oracle";
  endpoint.max_retries = 2;
  endpoint.retry_base_ms = 0;
  EndpointSource source(endpoint, std::make_unique<FlakyOnce>(std::move(wire)), {},
                        ParseConfig::defaults());

  RunOptions options;
  options.protocol = Protocol::OV;
  const auto result = run_eval(suite, source, options);
  CHECK(result.arena_total == 600.0);
  CHECK(result.manifest.queries == 6 * 5);
  CHECK(result.manifest.retries == result.manifest.queries);  // one retry per query
  CHECK(result.manifest.transport_errors == 0);
}

TEST_CASE("protocol integrity: MCQ never keyword-matches, OV never letter-matches") {
  // MCQ: a response that contains the right keyword but picks the wrong
  // letter scores wrong.
  auto suite = fixture_suite(4, 13, 4, "protocol");
  struct WrongLetterSource : ResponseSource {
    PredictionRecord respond(const Conversation& c, int turn_index) override {
      PredictionRecord rec;
      rec.conversation_id = c.conversation_id;
      rec.turn_index = turn_index;
      const auto& turn = c.turns.front();
      // A wrong option letter followed by the correct answer's text: under
      // MCQ the letter must win (and score wrong), keyword content ignored.
      const int wrong = turn.correct_option == 0 ? 1 : 0;
      rec.response = std::string(1, static_cast<char>('A' + wrong)) + ". " + turn.answer;
      rec.status = ParseStatus::ParseFailed;
      return rec;
    }
    std::string model_name() const override { return "wrong-letter"; }
  } source;

  RunOptions options;
  options.protocol = Protocol::MCQ;
  const auto mcq = run_eval(suite, source, options);
  CHECK(mcq.reports.at("cholec80").at("accuracy") == 0.0);

  // OV: the same letter-only responses do not match any keyword.
  options.protocol = Protocol::OV;
  struct LetterOnlySource : ResponseSource {
    PredictionRecord respond(const Conversation& c, int turn_index) override {
      PredictionRecord rec;
      rec.conversation_id = c.conversation_id;
      rec.turn_index = turn_index;
      rec.response = "B";
      rec.status = ParseStatus::ParseFailed;
      return rec;
    }
    std::string model_name() const override { return "letter-only"; }
  } letters;
  const auto ov = run_eval(suite, letters, options);
  CHECK(ov.reports.at("cholec80").at("accuracy") == 0.0);
  CHECK(ov.reports.at("endovis2018_vqa").at("accuracy") == 0.0);
}
