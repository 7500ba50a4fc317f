#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gnar/geo_graph.hpp"
#include "gnar/panel.hpp"

namespace gnar {

// Forecast accuracy

struct NodeMase {
  /// |q_{i,t}| per predicted column; missing where actual or prediction is.
  std::vector<double> scaled_errors;
  double mean = kMissing;
  double sd = kMissing;
  /// False when the history has no variation (zero scale).
  bool defined = false;
};

struct MaseResult {
  std::vector<NodeMase> nodes;
  /// Mean of the per-node means over defined nodes.
  double overall_mean = kMissing;
};

/// actual and predicted are N x H; history is N x T (the scale uses every
/// observed one-step change in it). A node's mean is its mean absolute error
/// divided by the scale, so the naive forecast scores exactly 1.
MaseResult mase(const Eigen::MatrixXd& actual, const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& history);

// Spatial autocorrelation

/// exp(-SPL) between reachable distinct vertices, zero elsewhere.
Eigen::MatrixXd moran_weights(const Graph& g);

/// Throws UndefinedStatistic for constant values or zero total weight.
double morans_i(std::span<const double> values, const Eigen::MatrixXd& weights);

/// Average ranks (ties share the mean of their positions), 1..N.
std::vector<double> rank_transform(std::span<const double> values);

struct MoranResult {
  std::vector<Date> dates;  // tested dates
  std::vector<double> I;
  std::vector<double> lower;
  std::vector<double> median;
  std::vector<double> upper;
  std::vector<bool> outside;
  /// Dates with fewer than two observed nodes, constant values or no weight.
  std::vector<Date> skipped;
  double N_m = 0.0;
  std::size_t R = 0;
  std::uint64_t seed = 0;
  bool rank_based = false;
};

/// Per date: observed I against the 2.5/50/97.5% quantiles (type 7) of I
/// over R independent permutations of that date's observed cross-section.
/// Replicate (t, r) draws from its own generator seeded by (seed, t, r).
MoranResult moran_permutation_test(const TimeSeriesPanel& panel, const Graph& g, std::size_t R = 100,
                                   std::uint64_t seed = 0, bool rank_based = false);

// Residual tests

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  std::size_t lags = 0;  // Ljung-Box only
};

struct NodeTest {
  std::string node;
  std::optional<TestResult> result;
  std::string status;  // "ok" or why the test is undefined
};

/// Sup distance between the empirical CDF and N(mean, sd^2) fitted to the
/// same data, with the asymptotic Kolmogorov p-value. Needs n >= 8.
TestResult ks_normality(std::span<const double> residuals);

/// Q = n(n+2) sum_{k<=h} rho_k^2 / (n-k) against chi-square(h).
/// h defaults to min(10, n/5) and must satisfy n > h + 1.
TestResult ljung_box(std::span<const double> series, std::optional<std::size_t> max_lag = std::nullopt);

/// Per-node wrappers over the observed cells of each row (in time order).
std::vector<NodeTest> ks_normality(const Eigen::MatrixXd& residuals, std::span<const std::string> labels);
std::vector<NodeTest> ljung_box(const Eigen::MatrixXd& residuals, std::span<const std::string> labels,
                                std::optional<std::size_t> max_lag = std::nullopt);

/// Kolmogorov survival function P(K > x).
double kolmogorov_survival(double x);

/// Type-7 sample quantile of sorted data.
double quantile_sorted(std::span<const double> sorted, double prob);

}  // namespace gnar
