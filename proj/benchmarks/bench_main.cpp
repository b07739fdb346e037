#include <benchmark/benchmark.h>

#include "muonpp/linalg.hpp"
#include "muonpp/seeding.hpp"
#include "muonpp/spectral_update.hpp"

using namespace muonpp;
using linalg::Matrix;

namespace {

Matrix draw(Eigen::Index n, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return gaussian_matrix(n, n, rng);
}

void BM_TopTwoSingular(benchmark::State& state) {
  const Matrix m = draw(state.range(0), 1);
  for (auto _ : state) benchmark::DoNotOptimize(linalg::top_two_singular(m));
}
BENCHMARK(BM_TopTwoSingular)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_SpectralNorm(benchmark::State& state) {
  const Matrix m = draw(state.range(0), 2);
  for (auto _ : state) benchmark::DoNotOptimize(linalg::spectral_norm(m, 1e-9));
}
BENCHMARK(BM_SpectralNorm)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_MsignExact(benchmark::State& state) {
  const Matrix m = draw(state.range(0), 3);
  for (auto _ : state) benchmark::DoNotOptimize(linalg::msign(m, linalg::MsignMode::exact));
}
BENCHMARK(BM_MsignExact)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_MsignIterative(benchmark::State& state) {
  const Matrix m = draw(state.range(0), 3);
  for (auto _ : state) benchmark::DoNotOptimize(linalg::msign(m, linalg::MsignMode::iterative, 30));
}
BENCHMARK(BM_MsignIterative)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_MuonPPRescaleStep(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  Matrix w = draw(n, 4);
  w /= linalg::spectral_norm(w);
  const Matrix g = draw(n, 5);
  optim::StepOptions options;
  options.msign_mode = linalg::MsignMode::iterative;
  const optim::MuonPPState s = optim::MuonPPState::init(n, n, 0.9);
  for (auto _ : state) benchmark::DoNotOptimize(optim::muonpp_rescale_step(s, w, g, 0.05, options));
}
BENCHMARK(BM_MuonPPRescaleStep)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
