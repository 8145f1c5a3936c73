// SPDX-License-Identifier: Apache-2.0
// Serial reference loops (threads = 1) against the OpenMP kernels.
#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "annulus/loewner.hpp"
#include "annulus/mc.hpp"
#include "annulus/parallel.hpp"
#include "annulus/pde.hpp"

namespace {

constexpr double kPi = std::numbers::pi;

int threads_arg(const benchmark::State& st) {
  return st.range(0) == 0 ? annulus::resolve_threads(0) : static_cast<int>(st.range(0));
}

void BM_AssembleCoefficients(benchmark::State& st) {
  const int nx = 8192;
  std::vector<double> x(nx - 1), drift(nx - 1), pot(nx - 1);
  for (int j = 1; j < nx; ++j) x[j - 1] = 2.0 * kPi * j / nx;
  const annulus::AnnulusParam p = annulus::AnnulusParam::from_q(0.5);
  const int t = threads_arg(st);
  for (auto _ : st) {
    annulus::pde::assemble_coefficients(x, p, drift, pot, t);
    benchmark::DoNotOptimize(pot.data());
  }
  st.counters["threads"] = t;
  st.SetItemsProcessed(st.iterations() * (nx - 1));
}

void BM_FeynmanKac(benchmark::State& st) {
  const int t = threads_arg(st);
  for (auto _ : st) {
    const auto e = annulus::mc::estimate_F_feynman_kac(std::log(0.3), kPi, 2000, {}, 1, t);
    benchmark::DoNotOptimize(e.mean);
  }
  st.counters["threads"] = t;
  st.SetItemsProcessed(st.iterations() * 2000);
}

void BM_DirectSle(benchmark::State& st) {
  const int t = threads_arg(st);
  for (auto _ : st) {
    const auto e = annulus::loewner::estimate_F_direct(std::log(0.3), kPi, 200, {}, 1, t);
    benchmark::DoNotOptimize(e.mean);
  }
  st.counters["threads"] = t;
  st.SetItemsProcessed(st.iterations() * 200);
}

// Arg 1 is the serial reference; 0 means all available threads.
BENCHMARK(BM_AssembleCoefficients)->Arg(1)->Arg(0)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_FeynmanKac)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_DirectSle)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
