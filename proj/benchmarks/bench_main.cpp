#include <random>
#include <sstream>

#include <benchmark/benchmark.h>

#include <gnar/diagnostics.hpp>
#include <gnar/geo_graph.hpp>
#include <gnar/io.hpp>
#include <gnar/model.hpp>
#include <gnar/selection.hpp>

using namespace gnar;

namespace {

Graph ring(std::size_t n) {
  std::vector<std::string> labels;
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    labels.push_back("v" + std::to_string(i));
    edges.emplace_back(i, (i + 1) % n);
  }
  return {labels, edges};
}

TimeSeriesPanel gnar21(const Graph& g, std::size_t T) {
  GnarSpec spec;
  spec.order.stages = {1, 0};
  Eigen::MatrixXd alpha(1, 2);
  alpha << 0.25, 0.2;
  SimulationConfig cfg;
  cfg.times = T;
  cfg.burn_in = 50;
  cfg.seed = 1;
  return simulate(spec, alpha, {{0.3}, {}}, g, cfg);
}

Graph queen() {
  std::istringstream pts(read_text_file(GNAR_DATA_DIR "/ireland_county_towns.csv"));
  std::istringstream edges(read_text_file(GNAR_DATA_DIR "/ireland_queen_contiguity.csv"));
  return build_from_edgelist(labels_of(read_points_csv(pts)), read_edgelist_csv(edges));
}

void BM_Delaunay(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec2> pts(static_cast<std::size_t>(state.range(0)));
  for (auto& p : pts) p = {u(rng), u(rng)};
  for (auto _ : state) benchmark::DoNotOptimize(delaunay_edges(pts));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Delaunay)->RangeMultiplier(2)->Range(32, 1024)->Complexity();

void BM_FitOls(benchmark::State& state) {
  const Graph g = ring(static_cast<std::size_t>(state.range(0)));
  const auto panel = gnar21(g, 500);
  GnarSpec spec;
  spec.order.stages = {1, 0};
  for (auto _ : state) benchmark::DoNotOptimize(fit_gnar(panel, g, spec));
}
BENCHMARK(BM_FitOls)->Arg(10)->Arg(26)->Arg(100);

void BM_FitEgls(benchmark::State& state) {
  const Graph g = ring(10);
  const auto panel = gnar21(g, 500);
  GnarSpec spec;
  spec.order.stages = {1, 0};
  FitOptions opt;
  opt.estimator = Estimator::Egls;
  for (auto _ : state) benchmark::DoNotOptimize(fit_gnar(panel, g, spec, opt));
}
BENCHMARK(BM_FitEgls);

void BM_SelectGrid(benchmark::State& state) {
  const Graph g = ring(10);
  const auto panel = gnar21(g, 300);
  const auto grid = order_grid(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(select_model(panel, g, {}, grid));
  state.counters["candidates"] = static_cast<double>(grid.orders.size());
}
BENCHMARK(BM_SelectGrid)->Arg(3)->Arg(7)->Unit(benchmark::kMillisecond);

void BM_MoranPermutation(benchmark::State& state) {
  const Graph g = queen();
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd m(26, 100);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index t = 0; t < m.cols(); ++t) m(i, t) = z(rng);
  const TimeSeriesPanel panel(g.labels(), weekly_dates(parse_date("2020-03-05"), 100), m);
  for (auto _ : state) benchmark::DoNotOptimize(moran_permutation_test(panel, g, 100, 3));
}
BENCHMARK(BM_MoranPermutation)->Unit(benchmark::kMillisecond);

void BM_NetworkSummary(benchmark::State& state) {
  const Graph g = queen();
  for (auto _ : state) benchmark::DoNotOptimize(network_summary(g, 100, 7));
}
BENCHMARK(BM_NetworkSummary)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
