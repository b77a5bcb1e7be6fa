#include <random>

#include <benchmark/benchmark.h>

#include "arable/attribution.hpp"
#include "arable/metrics.hpp"
#include "arable/model.hpp"

using namespace arable;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols) {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> nd(0, 1);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(gen);
  return m;
}

std::vector<int> random_labels(std::size_t n) {
  std::mt19937_64 gen(2);
  std::uniform_int_distribution<int> c(0, 3);
  std::vector<int> y(n);
  for (auto& v : y) v = c(gen);
  return y;
}

std::unique_ptr<Model> model_for(int kind) {
  switch (kind) {
    case 0: return make_logreg(162, 3);
    case 1: return make_mlp(162, {128, 128}, 3);
    default: return make_lstm(52, 12, 64, 3);
  }
}

Eigen::Index width_for(int kind) { return kind == 2 ? 12 * 52 : 162; }

const char* name_for(int kind) { return kind == 0 ? "logreg" : kind == 1 ? "mlp" : "lstm"; }

}  // namespace

// One mini-batch of 512 rows: forward, loss and full gradient.
static void BM_LossAndGradient(benchmark::State& state) {
  const int kind = static_cast<int>(state.range(0));
  const auto model = model_for(kind);
  const Matrix x = random_matrix(512, width_for(kind));
  const auto y = random_labels(512);
  std::vector<double> grad(model->param_count());
  for (auto _ : state) benchmark::DoNotOptimize(model->loss_and_gradient(x, y, grad));
  state.SetLabel(name_for(kind));
  state.SetItemsProcessed(state.iterations() * 512);
}
BENCHMARK(BM_LossAndGradient)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

static void BM_PredictProba(benchmark::State& state) {
  const int kind = static_cast<int>(state.range(0));
  const auto model = model_for(kind);
  const Matrix x = random_matrix(4096, width_for(kind));
  for (auto _ : state) benchmark::DoNotOptimize(predict_proba(*model, x));
  state.SetLabel(name_for(kind));
  state.SetItemsProcessed(state.iterations() * 4096);
}
BENCHMARK(BM_PredictProba)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

static void BM_IntegratedGradients(benchmark::State& state) {
  const int kind = static_cast<int>(state.range(0));
  const auto model = model_for(kind);
  const Matrix x = random_matrix(2, width_for(kind));
  const auto d = static_cast<std::size_t>(x.cols());
  for (auto _ : state)
    benchmark::DoNotOptimize(integrated_gradients(*model, {x.row(0).data(), d}, {x.row(1).data(), d}, 1, 256));
  state.SetLabel(name_for(kind));
}
BENCHMARK(BM_IntegratedGradients)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

static void BM_PermutationImportance(benchmark::State& state) {
  const auto model = model_for(1);
  const Matrix x = random_matrix(1000, 162);
  const auto y = random_labels(1000);
  const auto groups = flat_variable_groups();
  for (auto _ : state) benchmark::DoNotOptimize(permutation_importance(*model, x, y, groups, 1, 5));
  state.SetLabel("mlp, 1000 rows, K = 1");
}
BENCHMARK(BM_PermutationImportance)->Unit(benchmark::kMillisecond);

static void BM_Evaluate(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto y = random_labels(n);
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> probs(n * 4);
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0;
    for (std::size_t c = 0; c < 4; ++c) s += probs[r * 4 + c] = u(gen);
    for (std::size_t c = 0; c < 4; ++c) probs[r * 4 + c] /= s;
  }
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(y, probs));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Evaluate)->Arg(1 << 12)->Arg(1 << 16);

BENCHMARK_MAIN();
