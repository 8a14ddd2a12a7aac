// pipeline: builds instruction-tuning conversation corpora from annotated
// record corpora via the four construction stages.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "surgbench/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"surgical instruction-tuning corpus construction pipeline"};
  app.require_subcommand(1);

  auto* build = app.add_subcommand("build", "run stages 1-4 and write the conversation corpus");
  std::string config_path;
  std::string stage_dir;
  build->add_option("--config", config_path, "key/value config file")->required();
  build->add_option("--stage-dir", stage_dir,
                    "materialize per-stage corpora into this directory (overrides config)");

  CLI11_PARSE(app, argc, argv);

  try {
    auto config = surgbench::BuildConfig::load(config_path);
    if (!stage_dir.empty()) config.stage_dir = stage_dir;
    const auto report = surgbench::build_dataset(config);
    std::printf("%s\n", report.to_json_string().c_str());
    std::fprintf(stderr, "wrote %zu conversations to %s\n", report.conversations,
                 config.output.c_str());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
