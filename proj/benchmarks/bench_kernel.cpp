#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "surgbench/kernel.hpp"

using namespace surgbench::kernel;

namespace {

KernelConfig toy() { return KernelConfig::desk_scale(); }

void BM_MropeApply(benchmark::State& state) {
  const KernelConfig cfg = toy();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(-1, 1);
  std::vector<double> q(static_cast<std::size_t>(cfg.head_dim)), k(q.size());
  for (auto& x : q) x = unit(rng);
  for (auto& x : k) x = unit(rng);
  const PositionTriple pos{3.0, 7, 11};
  for (auto _ : state) {
    benchmark::DoNotOptimize(mrope_apply(q, k, pos, pos, cfg));
  }
}

void BM_WindowMask(benchmark::State& state) {
  const KernelConfig cfg = toy();
  const int side = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(window_mask(side, side, cfg.window_patches, 0, cfg));
  }
}

void BM_TokenFuse(benchmark::State& state) {
  KernelConfig cfg = toy();
  const int side = static_cast<int>(state.range(0));
  TokenGrid grid;
  grid.rows = side;
  grid.cols = side;
  grid.tokens = Eigen::MatrixXd::Random(side * side, cfg.vision_width);
  grid.positions.assign(static_cast<std::size_t>(side * side), {});
  const Eigen::MatrixXd w1 = Eigen::MatrixXd::Random(cfg.fusion_hidden, 4 * cfg.vision_width);
  const Eigen::VectorXd b1 = Eigen::VectorXd::Random(cfg.fusion_hidden);
  const Eigen::MatrixXd w2 = Eigen::MatrixXd::Random(cfg.model_width, cfg.fusion_hidden);
  const Eigen::VectorXd b2 = Eigen::VectorXd::Random(cfg.model_width);
  for (auto _ : state) {
    benchmark::DoNotOptimize(token_fuse(grid, w1, b1, w2, b2, Activation::Silu, cfg));
  }
}

void BM_MultitaskLossFromScores(benchmark::State& state) {
  const int L = static_cast<int>(state.range(0));
  const int V = 64;
  Eigen::MatrixXd scores = Eigen::MatrixXd::Random(L, V);
  std::vector<int> targets(static_cast<std::size_t>(L));
  for (int i = 0; i < L; ++i) targets[static_cast<std::size_t>(i)] = i % V;
  for (auto _ : state) {
    benchmark::DoNotOptimize(multitask_loss_from_scores(scores, targets));
  }
}

}  // namespace

BENCHMARK(BM_MropeApply);
BENCHMARK(BM_WindowMask)->Arg(16)->Arg(32);
BENCHMARK(BM_TokenFuse)->Arg(8)->Arg(16);
BENCHMARK(BM_MultitaskLossFromScores)->Arg(64)->Arg(512);
