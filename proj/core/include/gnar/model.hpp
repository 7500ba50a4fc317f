#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "gnar/geo_graph.hpp"
#include "gnar/panel.hpp"

namespace gnar {

/// Lag order p = stages.size() and the largest neighbourhood stage s_j per lag.
struct GnarOrder {
  std::vector<std::size_t> stages;

  std::size_t p() const noexcept { return stages.size(); }
  std::size_t max_stage() const noexcept;
  std::size_t beta_count() const noexcept;

  friend auto operator<=>(const GnarOrder&, const GnarOrder&) = default;
};

/// "GNAR-5-11110"; stage digits are comma separated once any exceeds 9.
std::string to_string(const GnarOrder& order);
/// Accepts the to_string form, or "p:s1,s2,..".
GnarOrder parse_order(std::string_view text);
void validate_order(const GnarOrder& order);

enum class WeightKind { InverseSPL, UniformStage, InverseDistance, InverseDistancePopulation };

std::string_view to_string(WeightKind kind) noexcept;
/// Accepts spl, uniform, idw, pb (and the enumerator spellings).
WeightKind parse_weight_kind(std::string_view text);

struct WeightScheme {
  WeightKind kind = WeightKind::InverseSPL;
  /// Great-circle distances (km); required by InverseDistance and InverseDistancePopulation.
  std::optional<Eigen::MatrixXd> distances;
  /// Node populations; required by InverseDistancePopulation.
  std::optional<std::vector<double>> populations;
};

struct WeightEntry {
  std::size_t node = 0;
  double weight = 0.0;

  friend bool operator==(const WeightEntry&, const WeightEntry&) = default;
};

/// Normalised within-stage weights omega_{i,q}; stage r of node i sums to one
/// whenever it is nonempty.
class WeightSet {
 public:
  WeightSet() = default;
  WeightSet(std::size_t r_max, std::vector<std::vector<std::vector<WeightEntry>>> entries)
      : r_max_(r_max), entries_(std::move(entries)) {}

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t r_max() const noexcept { return r_max_; }
  const std::vector<WeightEntry>& stage(std::size_t i, std::size_t r) const { return entries_.at(i).at(r - 1); }

  /// Dense W^(r): [W]_{l,m} = omega_{l,m} for m in N^(r)(l).
  Eigen::MatrixXd matrix(std::size_t r) const;

  friend bool operator==(const WeightSet&, const WeightSet&) = default;

 private:
  std::size_t r_max_ = 0;
  std::vector<std::vector<std::vector<WeightEntry>>> entries_;
};

struct GnarSpec {
  GnarOrder order;
  bool global_alpha = true;
  WeightScheme scheme;
};

/// Number of free coefficients: p + sum s_j (global) or N p + sum s_j.
std::size_t parameter_count(const GnarSpec& spec, std::size_t nodes);

/// Coefficient names in design-column order: alpha block (lag-major, then
/// node-major when vertex-specific) followed by beta_{j,r} in (j, r) order.
std::vector<std::string> coefficient_names(const GnarSpec& spec, std::span<const std::string> labels);

WeightSet compute_weights(const Graph& g, const StageNeighbourhoods& stages, const WeightScheme& scheme);

/// Throws ModelInadmissible naming the first node whose stage r <= s_j is empty.
void check_admissible(const GnarOrder& order, const WeightSet& weights, std::span<const std::string> labels);

struct RestrictionMatrix {
  Eigen::MatrixXd matrix;  // (p N^2) x M
  std::vector<std::string> column_names;
};

/// vec(B) = R gamma with B = [phi_1 .. phi_p] and
/// phi_j = diag(alpha_{.,j}) + sum_r beta_{j,r} W^(r).
RestrictionMatrix restriction_matrix(const GnarSpec& spec, const WeightSet& weights, std::size_t n);

/// Assembles [phi_1 .. phi_p] directly from coefficients.
Eigen::MatrixXd coefficient_blocks(const GnarSpec& spec, const WeightSet& weights, const Eigen::MatrixXd& alpha,
                                   const std::vector<std::vector<double>>& beta);

struct RowKey {
  std::size_t node = 0;
  std::size_t time = 0;

  friend bool operator==(const RowKey&, const RowKey&) = default;
};

/// Stacked regression y = D gamma + e, one row per usable (node, time).
struct Design {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd response;
  std::vector<RowKey> rows;
  std::vector<std::string> column_names;
};

/// Rows are time-major (t outer, node inner) for t >= max(p, first_time). A
/// row is dropped when its response or any regressor touches a missing value.
Design build_design(const TimeSeriesPanel& panel, const GnarSpec& spec, const WeightSet& weights,
                    std::size_t first_time = 0);

enum class Estimator { Ols, Egls };

struct GnarFit {
  GnarSpec spec;
  Estimator estimator = Estimator::Ols;
  std::vector<std::string> labels;
  std::vector<Date> dates;
  WeightSet weights;

  Eigen::VectorXd gamma;
  Eigen::VectorXd std_errors;
  std::vector<std::string> column_names;
  /// 1 x p (global) or N x p (vertex-specific).
  Eigen::MatrixXd alpha;
  /// beta[j][r - 1] for lag j (zero-based) and stage r.
  std::vector<std::vector<double>> beta;

  double sigma2 = 0.0;
  /// Error covariance used by EGLS.
  std::optional<Eigen::MatrixXd> sigma_matrix;
  bool sigma_fallback = false;

  /// Panel-shaped; cells without a stacked row are missing.
  Eigen::MatrixXd residuals;
  std::vector<RowKey> rows;
  std::size_t n_obs = 0;
  std::size_t M = 0;
  double loglik = 0.0;
  double bic = 0.0;
  double aic = 0.0;

  double alpha_at(std::size_t node, std::size_t lag) const;
};

/// Gaussian log-likelihood with profiled variance RSS / n.
double gaussian_loglik(double rss, std::size_t n_obs);
double bic_of(double loglik, std::size_t M, std::size_t n_obs);
double aic_of(double loglik, std::size_t M);

/// Least squares on the restricted design (Sigma = sigma^2 I).
/// Throws SingularDesign listing dependent columns when D is rank deficient.
GnarFit fit_ols(const Design& design, const GnarSpec& spec, const WeightSet& weights, const TimeSeriesPanel& panel);

/// Residual covariance of the unrestricted VAR(p) least-squares fit over
/// complete time points. Throws Infeasible when fewer than N p usable columns.
Eigen::MatrixXd estimate_sigma(const TimeSeriesPanel& panel, std::size_t p);

/// Generalised least squares with per-time-point blocks of sigma (restricted to
/// the nodes present at each time). Throws SingularDesign when sigma is not
/// positive definite.
GnarFit fit_egls(const Design& design, const Eigen::MatrixXd& sigma, const GnarSpec& spec, const WeightSet& weights,
                 const TimeSeriesPanel& panel);

struct FitOptions {
  Estimator estimator = Estimator::Ols;
  /// First time column eligible as a response (rows also need t >= p).
  std::size_t first_time = 0;
};

/// Stages, weights, design and estimate in one call. EGLS falls back to a
/// diagonal covariance of per-node OLS residual variances when the VAR
/// covariance is infeasible.
GnarFit fit_gnar(const TimeSeriesPanel& panel, const Graph& g, const GnarSpec& spec, const FitOptions& options = {});

struct SimulationConfig {
  std::size_t times = 100;
  double sigma = 1.0;
  double init_mean = 0.0;
  /// Standard deviation of the p initial values; defaults to sigma.
  std::optional<double> init_sd;
  std::size_t burn_in = 0;
  std::uint64_t seed = 0;
  Date start = Date(std::chrono::year{2020} / 1 / 6);
};

/// First p columns i.i.d. N(init_mean, init_sd^2), then the GNAR recursion with
/// i.i.d. N(0, sigma^2) innovations; the first burn_in columns are dropped.
TimeSeriesPanel simulate(const GnarSpec& spec, const Eigen::MatrixXd& alpha,
                         const std::vector<std::vector<double>>& beta, const Graph& g,
                         const SimulationConfig& config);

enum class ForecastMode { RollingOneStep, Recursive };

std::string_view to_string(ForecastMode mode) noexcept;
ForecastMode parse_forecast_mode(std::string_view text);

/// Predicts columns origin .. origin + horizon - 1. Rolling mode conditions
/// each step on observed panel values (which must exist); recursive mode
/// feeds its own predictions forward. origin defaults to T - horizon
/// (rolling) or T (recursive). Cells whose regressors are missing come back
/// missing.
Eigen::MatrixXd forecast(const GnarFit& fit, const TimeSeriesPanel& panel, std::size_t horizon, ForecastMode mode,
                         std::optional<std::size_t> origin = std::nullopt);

/// 1 - sum_j (max_i |alpha_{i,j}| + sum_r |beta_{j,r}|); positive means the
/// usual sufficient stationarity condition holds.
double stationarity_margin(const Eigen::MatrixXd& alpha, const std::vector<std::vector<double>>& beta);

}  // namespace gnar
