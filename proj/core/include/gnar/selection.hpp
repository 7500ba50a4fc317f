#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "gnar/geo_graph.hpp"
#include "gnar/model.hpp"
#include "gnar/panel.hpp"

namespace gnar {

/// floor(12 (T / 100)^(1/4)); at least 1.
std::size_t schwert_max_lag(std::size_t weeks);

struct OrderGrid {
  std::vector<GnarOrder> orders;
  std::size_t p_max = 0;
  std::size_t s_max = 0;
};

/// Base stage vectors of lengths 1..5 before filtering and padding.
const std::vector<std::vector<std::size_t>>& beta_catalogue();

/// Catalogue vectors with every stage <= s_max and length <= p_max, each
/// also padded with trailing zeros up to length p_max. Order: by length of
/// the emitted vector, then catalogue order; duplicates dropped.
OrderGrid order_grid(std::size_t p_max, std::size_t s_max);

enum class Criterion { Bic, Aic };

std::string_view to_string(Criterion c) noexcept;
Criterion parse_criterion(std::string_view text);

/// Common: every candidate is scored on responses t >= (largest admissible p
/// in the grid), so likelihoods share one sample. PerCandidate: each model
/// uses all rows its own lags allow.
enum class SampleAlignment { Common, PerCandidate };

std::string_view to_string(SampleAlignment a) noexcept;
SampleAlignment parse_alignment(std::string_view text);

struct CandidateResult {
  GnarOrder order;
  WeightKind scheme = WeightKind::InverseSPL;
  bool fitted = false;
  /// "ok" or the error kind that made the candidate unusable.
  std::string status;
  std::string reason;
  double bic = 0.0;
  double aic = 0.0;
  double loglik = 0.0;
  std::size_t M = 0;
  std::size_t n_obs = 0;
};

struct SelectionReport {
  Criterion criterion = Criterion::Bic;
  SampleAlignment alignment = SampleAlignment::Common;
  std::size_t first_time = 0;
  /// Fitted candidates ranked by criterion (ties: smaller M, then order),
  /// followed by skipped ones in grid order.
  std::vector<CandidateResult> candidates;
  std::size_t best = 0;
  /// True when ranked candidates were scored on different n_obs.
  bool mixed_n_obs = false;
  std::optional<GnarFit> best_fit;
};

struct SelectionOptions {
  Criterion criterion = Criterion::Bic;
  SampleAlignment alignment = SampleAlignment::Common;
  bool global_alpha = true;
  Estimator estimator = Estimator::Ols;
};

/// Inadmissible or singular candidates are recorded as skipped. Throws
/// SelectionFailed (listing every reason) when nothing could be fitted.
SelectionReport select_model(const TimeSeriesPanel& panel, const Graph& g, const WeightScheme& scheme,
                             const OrderGrid& grid, const SelectionOptions& options = {});

struct ArNodeFit {
  std::string node;
  bool ok = false;
  std::string status;
  std::size_t order = 0;
  std::vector<double> coefficients;  // phi_1 .. phi_p
  double sigma2 = 0.0;
  double bic = 0.0;
  std::size_t n_obs = 0;
  /// In-sample one-step predictions over the panel's columns (missing where undefined).
  std::vector<double> one_step_predictions;
};

struct ArBaseline {
  std::size_t p_max = 0;
  std::vector<ArNodeFit> nodes;
};

/// Zero-mean AR(p) per node, p = 1..p_max chosen by BIC on the node's common
/// sample t >= p_max. Nodes with too little data or a constant series are
/// flagged; the rest proceed.
ArBaseline fit_ar_baseline(const TimeSeriesPanel& panel, std::size_t p_max);

/// Same shape and origin semantics as forecast() for GNAR fits; flagged
/// nodes come back missing.
Eigen::MatrixXd ar_forecast(const ArBaseline& baseline, const TimeSeriesPanel& panel, std::size_t horizon,
                            ForecastMode mode, std::optional<std::size_t> origin = std::nullopt);

}  // namespace gnar
