#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <doctest.h>

#include <gnar/diagnostics.hpp>
#include <gnar/error.hpp>
#include <gnar/io.hpp>

#include "support/oracles.hpp"

using namespace gnar;

namespace {

double phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Estimated-moment KS distance from the definition.
double ks_oracle(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  long double mean = 0.0L;
  for (double v : x) mean += v;
  mean /= n;
  long double ss = 0.0L;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(static_cast<double>(ss / (n - 1)));
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = phi((x[i] - static_cast<double>(mean)) / sd);
    d = std::max(d, std::max((i + 1) / n - f, f - i / n));
  }
  return d;
}

std::vector<double> normals(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = z(rng);
  return x;
}

std::vector<double> uniforms(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = u(rng);
  return x;
}

std::vector<std::vector<double>> dense(const Eigen::MatrixXd& w) {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(w.rows()));
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) out[static_cast<std::size_t>(i)].push_back(w(i, j));
  return out;
}

TimeSeriesPanel noise_panel(std::size_t n, std::size_t T, std::uint64_t seed, std::vector<std::string> labels = {}) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(T));
  for (Eigen::Index t = 0; t < x.cols(); ++t)
    for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, t) = z(rng);
  if (labels.empty()) labels = oracle::numbered(n);
  return {labels, weekly_dates(parse_date("2020-03-05"), T), x};
}

}  // namespace

TEST_SUITE("diagnostics") {

TEST_CASE("MASE hand example") {
  Eigen::MatrixXd hist(1, 4), actual(1, 1), pred(1, 1);
  hist << 1, 3, 2, 5;
  actual << 5;
  pred << 4;
  const auto m = mase(actual, pred, hist);
  REQUIRE(m.nodes[0].defined);
  CHECK(m.nodes[0].scaled_errors[0] == 0.5);
  CHECK(m.nodes[0].mean == 0.5);
  CHECK(m.overall_mean == 0.5);

  const auto perfect = mase(actual, actual, hist);
  CHECK(perfect.nodes[0].scaled_errors[0] == 0.0);
}

TEST_CASE("naive forecast scores exactly one") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> z(0.0, 3.0);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::Index n = 4, T = 20 + rep;
    Eigen::MatrixXd h(n, T);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index t = 0; t < T; ++t) h(i, t) = z(rng);
    const Eigen::MatrixXd actual = h.rightCols(T - 1);
    const Eigen::MatrixXd naive = h.leftCols(T - 1);
    const auto m = mase(actual, naive, h);
    for (const auto& node : m.nodes) {
      CHECK(node.mean == 1.0);
      for (double e : node.scaled_errors) CHECK(e >= 0.0);
    }
    CHECK(m.overall_mean == 1.0);
  }
}

TEST_CASE("MASE with a constant history is undefined for that node") {
  Eigen::MatrixXd hist(2, 4), actual(2, 1), pred(2, 1);
  hist << 1, 1, 1, 1, 1, 3, 2, 5;
  actual << 2, 5;
  pred << 1, 4;
  const auto m = mase(actual, pred, hist);
  CHECK_FALSE(m.nodes[0].defined);
  CHECK(m.nodes[1].defined);
  CHECK(m.overall_mean == 0.5);
}

TEST_CASE("Moran weights") {
  const Graph g({"a", "b", "c"}, {{0, 1}});
  const auto w = moran_weights(g);
  CHECK(w(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(w(0, 1) == doctest::Approx(0.3679).epsilon(1e-4));
  CHECK(w(0, 2) == 0.0);
  CHECK(w(0, 0) == 0.0);

  const auto k = moran_weights(build_complete(oracle::numbered(7)));
  CHECK(k.sum() == doctest::Approx(7 * 6 * std::exp(-1.0)).epsilon(1e-14));

  const auto r = moran_weights(oracle::ring(6));
  CHECK(r(0, 3) == doctest::Approx(std::exp(-3.0)).epsilon(1e-15));
}

TEST_CASE("Moran's I examples") {
  const auto w2 = moran_weights(build_complete({"a", "b"}));
  const std::vector<double> anti{1.0, -1.0};
  CHECK(std::fabs(morans_i(anti, w2) + 1.0) <= 1e-12);

  const auto w4 = moran_weights(build_complete(oracle::numbered(4)));
  const std::vector<double> outlier{1, 1, 1, -3};
  CHECK(morans_i(outlier, w4) == doctest::Approx(oracle::morans_i(outlier, dense(w4))).epsilon(1e-14));
  CHECK(morans_i(outlier, w4) == doctest::Approx(-1.0 / 3.0).epsilon(1e-14));

  const std::vector<double> flat{2, 2, 2, 2};
  CHECK_THROWS_AS(morans_i(flat, w4), Error);
  CHECK_THROWS_AS(morans_i(outlier, Eigen::MatrixXd::Zero(4, 4)), Error);
}

TEST_CASE("Moran's I agrees with the definition on random graphs") {
  std::mt19937_64 rng(10);
  for (int rep = 0; rep < 50; ++rep) {
    const Graph g = oracle::random_connected(10, 6, rng);
    const auto w = moran_weights(g);
    const auto x = normals(10, rng);
    CHECK(morans_i(x, w) == doctest::Approx(oracle::morans_i(x, dense(w))).epsilon(1e-12));
  }
}

TEST_CASE("Moran's I is affine invariant") {
  const auto w = moran_weights(oracle::ring(8));
  // Dyadic data with an exactly representable mean: invariance is bitwise.
  const std::vector<double> x{1, 3, -2, 5, 0, 7, 2, 0};
  const double base = morans_i(x, w);
  for (double a : {2.0, -0.5, 8.0, -4.0}) {
    for (double b : {0.0, 3.0, -16.0}) {
      std::vector<double> y;
      for (double v : x) y.push_back(a * v + b);
      CHECK(morans_i(y, w) == base);
    }
  }
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int rep = 0; rep < 100; ++rep) {
    const auto z = normals(8, rng);
    const double a = u(rng), b = u(rng);
    std::vector<double> y;
    for (double v : z) y.push_back(a * v + b);
    CHECK(std::fabs(morans_i(y, w) - morans_i(z, w)) <= 1e-12);
  }
}

TEST_CASE("rank transform") {
  CHECK(rank_transform(std::vector<double>{10, 20, 30}) == std::vector<double>{1, 2, 3});
  CHECK(rank_transform(std::vector<double>{5, 5, 1}) == std::vector<double>{2.5, 2.5, 1});
  std::mt19937_64 rng(2);
  const auto x = normals(12, rng);
  std::vector<double> y;
  for (double v : x) y.push_back(std::exp(3.0 * v) + 1.0);
  CHECK(rank_transform(x) == rank_transform(y));
}

TEST_CASE("null permutation test on an i.i.d. panel") {
  std::istringstream in(read_text_file(GNAR_DATA_DIR "/ireland_queen_contiguity.csv"));
  const auto edges = read_edgelist_csv(in);
  std::set<std::string> names;
  for (const auto& [a, b] : edges) names.insert({a, b});
  const Graph g = build_from_edgelist({names.begin(), names.end()}, edges);
  REQUIRE(g.size() == 26);
  const auto res = moran_permutation_test(noise_panel(26, 100, 1, g.labels()), g, 100, 3);
  MESSAGE("N_m = " << res.N_m);
  CHECK(res.N_m >= 0.0);
  CHECK(res.N_m <= 0.12);
  CHECK(res.I.size() == 100);
  for (std::size_t t = 0; t < res.I.size(); ++t) {
    CHECK(res.lower[t] <= res.median[t]);
    CHECK(res.median[t] <= res.upper[t]);
    CHECK(res.outside[t] == (res.I[t] < res.lower[t] || res.I[t] > res.upper[t]));
  }
}

TEST_CASE("planted structure on a star is detected almost every week") {
  const std::size_t n = 100;
  std::vector<Edge> edges;
  for (std::size_t i = 1; i < n; ++i) edges.emplace_back(0, i);
  const Graph star(oracle::numbered(n), edges);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 50);
  for (std::size_t i = 0; i < n; ++i) x.row(static_cast<Eigen::Index>(i)).setConstant(static_cast<double>(star.degree(i)));
  const TimeSeriesPanel panel(star.labels(), weekly_dates(parse_date("2020-03-05"), 50), x);
  const auto res = moran_permutation_test(panel, star, 100, 1);
  MESSAGE("N_m = " << res.N_m);
  CHECK(res.N_m >= 0.9);
}

TEST_CASE("permutation test determinism and invariances") {
  const Graph g = oracle::ring(12);
  const auto panel = noise_panel(12, 30, 2);
  const auto a = moran_permutation_test(panel, g, 50, 17);
  const auto b = moran_permutation_test(panel, g, 50, 17);
  CHECK(a.I == b.I);
  CHECK(a.lower == b.lower);
  CHECK(a.upper == b.upper);
  CHECK(a.N_m == b.N_m);

  const auto c = moran_permutation_test(panel, g, 200, 99);
  CHECK(c.I == a.I);

  // Relabel nodes: reverse both the panel rows and the graph.
  std::vector<std::string> labels(g.labels().rbegin(), g.labels().rend());
  std::vector<Edge> edges;
  for (const auto& [u, v] : g.edges()) edges.emplace_back(11 - v, 11 - u);
  const Graph rg(labels, edges);
  const TimeSeriesPanel rp(labels, panel.dates(), panel.values().colwise().reverse());
  const auto r = moran_permutation_test(rp, rg, 50, 17);
  for (std::size_t t = 0; t < a.I.size(); ++t) CHECK(std::fabs(r.I[t] - a.I[t]) <= 1e-12);

  CHECK_THROWS_AS(moran_permutation_test(panel, g, 19, 1), Error);
}

TEST_CASE("rank-based Moran ignores monotone transforms") {
  const Graph g = oracle::ring(10);
  const auto panel = noise_panel(10, 20, 5);
  const TimeSeriesPanel warped(panel.labels(), panel.dates(), panel.values().array().exp().matrix());
  const auto a = moran_permutation_test(panel, g, 40, 2, true);
  const auto b = moran_permutation_test(warped, g, 40, 2, true);
  CHECK(a.I == b.I);
  CHECK(a.N_m == b.N_m);
  CHECK(a.rank_based);
}

TEST_CASE("skipped and partially observed dates") {
  const Graph g = oracle::ring(6);
  Eigen::MatrixXd x = noise_panel(6, 5, 1).values();
  x.col(1).setConstant(3.0);
  x.col(2).setConstant(kMissing);
  x(0, 2) = 1.0;
  x(0, 3) = kMissing;
  const TimeSeriesPanel panel(oracle::numbered(6), weekly_dates(parse_date("2020-03-05"), 5), x);
  const auto res = moran_permutation_test(panel, g, 30, 1);
  CHECK(res.skipped.size() == 2);
  CHECK(res.I.size() == 3);

  // Date 3 uses only the five observed nodes.
  std::vector<double> v;
  std::vector<std::size_t> keep{1, 2, 3, 4, 5};
  for (auto i : keep) v.push_back(x(static_cast<Eigen::Index>(i), 3));
  const auto full = moran_weights(g);
  Eigen::MatrixXd w(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) w(i, j) = full(keep[i], keep[j]);
  CHECK(res.I[1] == doctest::Approx(morans_i(v, w)).epsilon(1e-14));
}

TEST_CASE("Kolmogorov distribution") {
  CHECK(kolmogorov_survival(0.5) == doctest::Approx(0.9639452436648751).epsilon(1e-10));
  CHECK(kolmogorov_survival(1.0) == doctest::Approx(0.26999967167735456).epsilon(1e-10));
  CHECK(kolmogorov_survival(1.36) == doctest::Approx(0.049485876755377876).epsilon(1e-10));
  CHECK(kolmogorov_survival(2.0) == doctest::Approx(0.0006709252557796953).epsilon(1e-8));
  CHECK(kolmogorov_survival(0.0) == 1.0);
  CHECK(kolmogorov_survival(10.0) >= 0.0);
}

TEST_CASE("KS statistic matches the definition") {
  std::mt19937_64 rng(12);
  for (int rep = 0; rep < 30; ++rep) {
    const auto x = rep % 2 ? normals(50 + rep, rng) : uniforms(50 + rep, rng);
    const auto r = ks_normality(x);
    CHECK(r.statistic == doctest::Approx(ks_oracle(x)).epsilon(1e-12));
    CHECK(r.statistic >= 0.0);
    CHECK(r.statistic <= 1.0);
    CHECK(r.p_value >= 0.0);
    CHECK(r.p_value <= 1.0);
    CHECK(r.n == x.size());
  }
  CHECK_THROWS_AS(ks_normality(std::vector<double>(7, 1.0)), Error);
  CHECK_THROWS_AS(ks_normality(std::vector<double>(20, 1.0)), Error);
}

TEST_CASE("KS accepts normal residuals") {
  int accept = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    accept += ks_normality(normals(500, rng)).p_value > 0.025;
  }
  MESSAGE("normal accepted in " << accept << "/100");
  CHECK(accept >= 90);
}

// The asymptotic p-value with estimated moments cannot reach this power at
// n = 500; kept as an expected failure so a change in behaviour shows up.
TEST_CASE("KS rejects uniform residuals at n = 500 in 90% of seeds" * doctest::should_fail()) {
  int reject = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    reject += ks_normality(uniforms(500, rng)).p_value <= 0.025;
  }
  MESSAGE("uniform rejected in " << reject << "/100");
  CHECK(reject >= 90);
}

TEST_CASE("why the uniform example falls short") {
  // Population gap between U(-1, 1) and its moment-matched normal.
  const double sd = 1.0 / std::sqrt(3.0);
  double dinf = 0.0;
  for (int k = 0; k <= 200000; ++k) {
    const double x = -1.5 + 3.0 * k / 200000.0;
    const double fu = std::clamp((x + 1.0) / 2.0, 0.0, 1.0);
    dinf = std::max(dinf, std::fabs(fu - phi(x / sd)));
  }
  CHECK(dinf == doctest::Approx(0.0570).epsilon(0.01));
  const double rn = std::sqrt(500.0);
  CHECK(kolmogorov_survival((rn + 0.12 + 0.11 / rn) * dinf) > 0.025);

  int reject = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    reject += ks_normality(uniforms(2000, rng)).p_value <= 0.025;
  }
  CHECK(reject >= 90);
}

TEST_CASE("Ljung-Box statistic and reference distribution") {
  std::mt19937_64 rng(8);
  const auto x = normals(120, rng);
  const auto r = ljung_box(x, 6);
  long double mean = 0.0L;
  for (double v : x) mean += v;
  mean /= x.size();
  long double c0 = 0.0L;
  for (double v : x) c0 += (v - mean) * (v - mean);
  long double q = 0.0L;
  for (std::size_t k = 1; k <= 6; ++k) {
    long double ck = 0.0L;
    for (std::size_t t = k; t < x.size(); ++t) ck += (x[t] - mean) * (x[t - k] - mean);
    q += (ck / c0) * (ck / c0) / (x.size() - k);
  }
  q *= 120.0L * 122.0L;
  CHECK(r.statistic == doctest::Approx(static_cast<double>(q)).epsilon(1e-12));
  CHECK(r.lags == 6);
  CHECK(ljung_box(x).lags == 10);
  CHECK(ljung_box(normals(30, rng)).lags == 6);

  CHECK_THROWS_AS(ljung_box(std::vector<double>(50, 2.0)), Error);
  CHECK_THROWS_AS(ljung_box(normals(11, rng), 10), Error);
}

TEST_CASE("Ljung-Box p-values against chi-square tail values") {
  // A series whose statistic is exactly known: alternating signs give
  // rho_k = (-1)^k (n - k) / n.
  const std::size_t n = 40;
  std::vector<double> alt(n);
  for (std::size_t t = 0; t < n; ++t) alt[t] = t % 2 ? -1.0 : 1.0;
  const auto r = ljung_box(alt, 1);
  const double rho = -(n - 1.0) / n;
  CHECK(r.statistic == doctest::Approx(n * (n + 2.0) * rho * rho / (n - 1.0)).epsilon(1e-12));
  CHECK(r.p_value >= 0.0);
  CHECK(r.p_value <= 1e-6);
}

TEST_CASE("Ljung-Box calibration") {
  int reject_white = 0, reject_ar = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const auto w = normals(1000, rng);
    const auto r = ljung_box(w, 10);
    CHECK(r.statistic >= 0.0);
    reject_white += r.p_value <= 0.05;

    auto e = normals(600, rng);
    std::vector<double> ar;
    double v = 0.0;
    for (std::size_t t = 0; t < e.size(); ++t) {
      v = 0.8 * v + e[t];
      if (t >= 100) ar.push_back(v);
    }
    reject_ar += ljung_box(ar).p_value <= 0.01;
  }
  MESSAGE("white noise rejected " << reject_white << "/100, AR(1) rejected " << reject_ar << "/100");
  CHECK(reject_white <= 10);
  CHECK(reject_ar >= 95);
}

TEST_CASE("per-node wrappers flag undefined nodes") {
  std::mt19937_64 rng(1);
  Eigen::MatrixXd res(2, 30);
  const auto x = normals(30, rng);
  for (int t = 0; t < 30; ++t) {
    res(0, t) = x[static_cast<std::size_t>(t)];
    res(1, t) = 1.0;
  }
  res(0, 0) = kMissing;
  const std::vector<std::string> labels{"a", "b"};
  const auto ks = ks_normality(res, labels);
  CHECK(ks[0].result);
  CHECK(ks[0].result->n == 29);
  CHECK_FALSE(ks[1].result);
  CHECK(ks[1].status != "ok");
  const auto lb = ljung_box(res, labels);
  CHECK(lb[0].status == "ok");
  CHECK_FALSE(lb[1].result);
}

TEST_CASE("type-7 quantiles") {
  const std::vector<double> s{1, 2, 3, 4};
  CHECK(quantile_sorted(s, 0.0) == 1.0);
  CHECK(quantile_sorted(s, 1.0) == 4.0);
  CHECK(quantile_sorted(s, 0.5) == 2.5);
  CHECK(quantile_sorted(s, 0.25) == doctest::Approx(1.75));
}

}  // TEST_SUITE
