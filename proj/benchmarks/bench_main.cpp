#include <benchmark/benchmark.h>

#include <random>

#include "hyperproj/clustering.hpp"
#include "hyperproj/embeddings.hpp"
#include "hyperproj/projection.hpp"
#include "hyperproj/training.hpp"

using namespace hyperproj;

namespace {

RowMatrix gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  RowMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  }
  return m;
}

EmbeddingTable table_of(std::size_t n, Eigen::Index d) {
  std::vector<std::string> words;
  words.reserve(n);
  for (std::size_t i = 0; i < n; ++i) words.push_back("w" + std::to_string(i));
  return EmbeddingTable(std::move(words), gaussian(static_cast<Eigen::Index>(n), d, 1), false);
}

void BM_NearestNeighbors(benchmark::State& state) {
  const auto table = table_of(static_cast<std::size_t>(state.range(0)), 300);
  const Vector query = table.row(0);
  NeighborQuery q;
  q.l = 10;
  q.threads = static_cast<unsigned>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(nearest_neighbors(table, query, q));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_NearestNeighbors)->Args({10000, 1})->Args({100000, 1})->Args({100000, 4});

void BM_LossAndGradient(benchmark::State& state) {
  const Eigen::Index d = state.range(0);
  const auto kind = static_cast<RegularizerKind>(state.range(1));
  const Projection phi(Matrix(gaussian(d, d, 2)) * 0.1);
  const Matrix x = gaussian(1024, d, 3);
  const Matrix y = gaussian(1024, d, 4);
  const Matrix z = gaussian(1024, d, 5);
  const Objective obj{kind, 0.1};
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_gradient(phi, {x, y, &z}, obj));
}
BENCHMARK(BM_LossAndGradient)
    ->Args({50, static_cast<int>(RegularizerKind::none)})
    ->Args({300, static_cast<int>(RegularizerKind::none)})
    ->Args({300, static_cast<int>(RegularizerKind::neighbor_reproj)})
    ->Args({300, static_cast<int>(RegularizerKind::asymmetric_plain)});

void BM_AdamStep(benchmark::State& state) {
  Matrix p = Matrix::Zero(300, 300);
  const Matrix g = gaussian(300, 300, 6);
  AdamState st(300, 300);
  for (auto _ : state) adam_step(p, g, st, {});
}
BENCHMARK(BM_AdamStep);

void BM_KMeans(benchmark::State& state) {
  const RowMatrix pts = gaussian(20000, 100, 7);
  KMeansOptions opts;
  opts.k = static_cast<std::size_t>(state.range(0));
  opts.max_iter = 20;
  for (auto _ : state) benchmark::DoNotOptimize(fit_kmeans(pts, opts));
}
BENCHMARK(BM_KMeans)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
