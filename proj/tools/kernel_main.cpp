// kernel: numeric kernel self-checks (rotary encoding, masking, fusion,
// loss), printed as a pass/fail table.

#include <cstdio>
#include <exception>

#include <CLI11.hpp>

#include "surgbench/kernel.hpp"

int main(int argc, char** argv) {
  CLI::App app{"numeric kernel reference checks"};
  app.require_subcommand(1);
  auto* selftest = app.add_subcommand("selftest", "run all kernel invariants");
  unsigned long long seed = 42;
  selftest->add_option("--seed", seed, "RNG seed for the random draws");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto results = surgbench::kernel::selftest(seed);
    bool all_pass = true;
    std::printf("%-36s %-6s %s\n", "check", "result", "detail");
    std::printf("%s\n", std::string(76, '-').c_str());
    for (const auto& r : results) {
      std::printf("%-36s %-6s %s\n", r.name.c_str(), r.pass ? "PASS" : "FAIL",
                  r.detail.c_str());
      all_pass = all_pass && r.pass;
    }
    return all_pass ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
