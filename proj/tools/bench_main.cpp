// bench: end-to-end benchmark runs. Queries a configured HTTP endpoint, the
// in-process mock model (--endpoint mock:oracle | mock:planted:<p>:<seed> |
// mock:refuser:<rate>:<seed>), or replays canned predictions (--predictions).

#include <cstdio>
#include <exception>
#include <fstream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "surgbench/config.hpp"
#include "surgbench/harness.hpp"

using namespace surgbench;

namespace {

ModelEndpoint endpoint_from_suite(const std::string& suite_path, const std::string& name) {
  const auto cfg = KeyValueConfig::load(suite_path);
  const std::string section = "endpoint." + name;
  if (!cfg.has_section(section)) {
    throw std::runtime_error("suite file has no [" + section + "] section");
  }
  ModelEndpoint ep;
  ep.name = name;
  ep.base_uri = cfg.require(section + ".base_uri");
  ep.model_id = cfg.get_or(section + ".model", name);
  ep.token_env = cfg.get_or(section + ".token_env", "");
  ep.timeout_s = cfg.get_double(section + ".timeout_s").value_or(60.0);
  ep.max_retries = static_cast<int>(cfg.get_int(section + ".max_retries").value_or(3));
  ep.max_inflight = static_cast<int>(cfg.get_int(section + ".max_inflight").value_or(4));
  ep.retry_base_ms = static_cast<int>(cfg.get_int(section + ".retry_base_ms").value_or(250));
  ep.temperature = cfg.get_double(section + ".temperature").value_or(0.0);
  ep.top_p = cfg.get_double(section + ".top_p").value_or(1.0);
  ep.top_k = static_cast<int>(cfg.get_int(section + ".top_k").value_or(0));
  ep.max_tokens = static_cast<int>(cfg.get_int(section + ".max_tokens").value_or(512));
  ep.validate();
  return ep;
}

VocabTables merged_vocab(const BenchmarkSuite& suite) {
  VocabTables merged;
  for (const auto& d : suite.datasets) {
    if (d.vocab_dir.empty()) continue;
    auto tables = VocabTables::load_dir(d.vocab_dir);
    for (auto& [task, vocab] : tables.classes) {
      if (!merged.classes.count(task)) merged.classes[task] = std::move(vocab);
    }
    if (!merged.triplet && tables.triplet) merged.triplet = std::move(tables.triplet);
  }
  return merged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"benchmark evaluation harness"};
  app.require_subcommand(1);
  auto* run = app.add_subcommand("run", "evaluate a model over the six-dataset suite");
  std::string suite_path, endpoint_name, predictions_dir, protocol_name = "ov", out_dir = "runs";
  long long seed = -1;
  long long budget = -1;
  int workers = 1;
  bool deterministic = false;
  run->add_option("--suite", suite_path, "suite definition (key/value TOML subset)")->required();
  run->add_option("--endpoint", endpoint_name,
                  "endpoint name from the suite file, or mock:<behavior>");
  run->add_option("--predictions", predictions_dir,
                  "canned predictions directory (<dataset>/predictions.jsonl)");
  run->add_option("--protocol", protocol_name, "ov or mcq")->check(CLI::IsMember({"ov", "mcq"}));
  run->add_option("--seed", seed, "override the suite seed");
  run->add_option("--budget", budget, "override the per-dataset sample budget");
  run->add_option("--out", out_dir, "run directory parent");
  run->add_option("--workers", workers, "concurrent in-flight queries");
  run->add_flag("--deterministic", deterministic, "fixed timestamps for replay comparisons");
  CLI11_PARSE(app, argc, argv);

  if (endpoint_name.empty() == predictions_dir.empty()) {
    std::fprintf(stderr, "error: exactly one of --endpoint or --predictions is required\n");
    return 1;
  }

  try {
    BenchmarkSuite suite = BenchmarkSuite::load(suite_path);
    if (seed >= 0) suite.seed = static_cast<std::uint64_t>(seed);

    ParseConfig parse_cfg = ParseConfig::defaults();
    if (!suite.refusal_patterns_path.empty()) {
      parse_cfg.refusal_patterns = ParseConfig::load_patterns(suite.refusal_patterns_path);
    }

    std::unique_ptr<ResponseSource> source;
    if (!predictions_dir.empty()) {
      source = std::make_unique<CannedSource>(predictions_dir, parse_cfg);
    } else if (endpoint_name.rfind("mock:", 0) == 0) {
      const auto behavior = MockBehavior::parse(endpoint_name.substr(5));
      if (!behavior) {
        std::fprintf(stderr, "error: bad mock behavior \"%s\"\n", endpoint_name.c_str());
        return 1;
      }
      source = std::make_unique<MockSource>(*behavior, merged_vocab(suite), parse_cfg);
    } else {
      auto endpoint = endpoint_from_suite(suite_path, endpoint_name);
      endpoint.protocol = *protocol_from_string(protocol_name);
      workers = std::min(workers, endpoint.max_inflight);
      source = std::make_unique<EndpointSource>(endpoint, make_http_transport(endpoint.base_uri),
                                                ImageProvider{}, parse_cfg);
    }

    RunOptions options;
    options.protocol = *protocol_from_string(protocol_name);
    options.out_dir = out_dir;
    options.deterministic_clock = deterministic;
    options.workers = workers;
    if (budget >= 0) options.budget_override = static_cast<std::size_t>(budget);

    const auto result = run_eval(suite, *source, options);

    std::printf("model: %s  protocol: %s\n", result.manifest.model.c_str(),
                result.manifest.protocol.c_str());
    for (const auto& [dataset, report] : result.reports) {
      for (const auto& d : suite.datasets) {
        if (d.id == dataset) {
          std::printf("  %-18s %-18s %8.2f  (parsed %zu, failed %zu, refused %zu)\n",
                      dataset.c_str(), d.primary_metric.c_str(), report.at(d.primary_metric),
                      report.sample_count - report.parse_failures - report.refusals,
                      report.parse_failures, report.refusals);
        }
      }
    }
    std::printf("arena score: %.2f / 600\n", result.arena_total);
    if (!result.run_dir.empty()) std::printf("run directory: %s\n", result.run_dir.c_str());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
