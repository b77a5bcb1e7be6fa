#include <random>

#include <benchmark/benchmark.h>

#include "arable/climate_features.hpp"
#include "arable/terrain_features.hpp"

using namespace arable;

namespace {

DailySeries gamma_precip(int years, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::gamma_distribution<double> g(0.6, 4.0);
  std::bernoulli_distribution wet(0.4);
  std::vector<double> v(static_cast<std::size_t>(years * kDaysPerYear));
  for (auto& x : v) x = wet(gen) ? g(gen) : 0.0;
  return DailySeries(Variable::Precip, 1990, std::move(v));
}

DailySeries seasonal(Variable var, int years, double mean, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0, 3);
  std::vector<double> v(static_cast<std::size_t>(years * kDaysPerYear));
  for (std::size_t d = 0; d < v.size(); ++d)
    v[d] = mean + 12 * std::sin(2 * M_PI * static_cast<double>(d % kDaysPerYear) / kDaysPerYear) + nd(gen);
  return DailySeries(var, 1990, std::move(v));
}

}  // namespace

static void BM_SpiFitAndScore(benchmark::State& state) {
  const auto base = gamma_precip(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) {
    const auto fit = fit_spi(base);
    benchmark::DoNotOptimize(spi_12m(base, fit));
  }
  state.SetLabel(std::to_string(state.range(0)) + " years");
}
BENCHMARK(BM_SpiFitAndScore)->Arg(10)->Arg(30);

static void BM_Percentiles(benchmark::State& state) {
  const auto s = seasonal(Variable::Tmax, 10, 15, 2);
  for (auto _ : state) benchmark::DoNotOptimize(fit_percentiles(s, 0.95));
}
BENCHMARK(BM_Percentiles);

static void BM_Nesterov(benchmark::State& state) {
  const auto tmax = seasonal(Variable::Tmax, 10, 18, 3);
  const auto dew = seasonal(Variable::Dewpoint, 10, 6, 4);
  const auto pr = gamma_precip(10, 5);
  for (auto _ : state) benchmark::DoNotOptimize(nesterov_fy(tmax, dew, pr));
}
BENCHMARK(BM_Nesterov);

static void BM_TempJumps(benchmark::State& state) {
  const auto t = seasonal(Variable::Tmean, 10, 10, 6);
  for (auto _ : state) benchmark::DoNotOptimize(temp_jumps(t));
}
BENCHMARK(BM_TempJumps);

static void BM_Morphometrics(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 gen(7);
  std::normal_distribution<double> nd(0, 20);
  Raster dem(GridSpec{n, n, 30, 60, 0.01});
  for (auto& v : dem.values()) v = 300 + nd(gen);
  for (auto _ : state) benchmark::DoNotOptimize(morphometrics(dem, 1113.2));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}
BENCHMARK(BM_Morphometrics)->Arg(128)->Arg(512);

static void BM_TerrainStack(benchmark::State& state) {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> nd(0, 20);
  Raster dem(GridSpec{128, 128, 30, 60, 0.05});
  for (auto& v : dem.values()) v = 300 + nd(gen);
  for (auto _ : state) benchmark::DoNotOptimize(terrain_feature_stack(dem));
}
BENCHMARK(BM_TerrainStack)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
