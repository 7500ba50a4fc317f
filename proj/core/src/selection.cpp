#include "gnar/selection.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "gnar/error.hpp"

namespace gnar {
namespace {

using Stages = std::vector<std::size_t>;

std::vector<Stages> build_catalogue() {
  std::vector<Stages> c;
  for (std::size_t a = 1; a <= 7; ++a) c.push_back({a});

  for (std::size_t a = 1; a <= 5; ++a) c.push_back({a, 1});
  c.push_back({2, 2});

  for (std::size_t a = 1; a <= 5; ++a) c.push_back({a, 1, 1});
  c.push_back({2, 2, 1});
  for (std::size_t a = 2; a <= 5; ++a) c.push_back({a, 2, 2});

  for (std::size_t a = 1; a <= 5; ++a) c.push_back({a, 1, 1, 1});
  c.push_back({2, 2, 1, 1});
  c.push_back({2, 2, 2, 1});
  for (std::size_t a = 3; a <= 5; ++a) c.push_back({a, 2, 2, 1});
  c.push_back({2, 2, 2, 2});

  c.push_back({1, 1, 1, 1, 1});
  for (std::size_t a = 2; a <= 5; ++a) c.push_back({a, 1, 1, 1, 1});
  // The "(2,2,1,1,1)-(5,2,2,1,1)" range: its first member, then (a,2,2,1,1).
  c.push_back({2, 2, 1, 1, 1});
  for (std::size_t a = 2; a <= 5; ++a) c.push_back({a, 2, 2, 1, 1});
  c.push_back({2, 2, 2, 1, 1});
  c.push_back({2, 2, 2, 2, 1});
  c.push_back({2, 2, 2, 2, 2});
  return c;
}

bool ranks_before(const CandidateResult& a, const CandidateResult& b, Criterion c) {
  const double va = c == Criterion::Bic ? a.bic : a.aic;
  const double vb = c == Criterion::Bic ? b.bic : b.aic;
  if (va != vb) return va < vb;
  if (a.M != b.M) return a.M < b.M;
  return a.order < b.order;
}

double gaussian_ll_or_inf(double rss, std::size_t n) {
  return rss > 0.0 ? gaussian_loglik(rss, n) : std::numeric_limits<double>::infinity();
}

}  // namespace

std::size_t schwert_max_lag(std::size_t weeks) {
  if (weeks < 1) fail(ErrorKind::InvalidInput, "Schwert's rule needs at least one time point");
  const double v = 12.0 * std::pow(static_cast<double>(weeks) / 100.0, 0.25);
  // Guard against pow landing a hair under an exact integer.
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(v + 1e-12)));
}

const std::vector<std::vector<std::size_t>>& beta_catalogue() {
  static const std::vector<Stages> catalogue = build_catalogue();
  return catalogue;
}

OrderGrid order_grid(std::size_t p_max, std::size_t s_max) {
  if (p_max < 1 || s_max < 1) fail(ErrorKind::InvalidInput, "order grid needs p_max >= 1 and s_max >= 1");
  std::vector<Stages> base;
  for (const auto& v : beta_catalogue()) {
    if (v.size() > p_max) continue;
    if (*std::max_element(v.begin(), v.end()) > s_max) continue;
    base.push_back(v);
  }
  OrderGrid grid;
  grid.p_max = p_max;
  grid.s_max = s_max;
  std::set<Stages> seen;
  for (std::size_t len = 1; len <= p_max; ++len) {
    for (const auto& v : base) {
      if (v.size() > len) continue;
      Stages s = v;
      s.resize(len, 0);
      if (seen.insert(s).second) grid.orders.push_back(GnarOrder{std::move(s)});
    }
  }
  return grid;
}

std::string_view to_string(Criterion c) noexcept { return c == Criterion::Aic ? "aic" : "bic"; }

Criterion parse_criterion(std::string_view text) {
  if (text == "bic" || text == "BIC") return Criterion::Bic;
  if (text == "aic" || text == "AIC") return Criterion::Aic;
  fail(ErrorKind::InvalidInput, fmt::format("unknown criterion '{}' (bic, aic)", text));
}

std::string_view to_string(SampleAlignment a) noexcept {
  return a == SampleAlignment::PerCandidate ? "per-candidate" : "common";
}

SampleAlignment parse_alignment(std::string_view text) {
  if (text == "common") return SampleAlignment::Common;
  if (text == "per-candidate" || text == "own") return SampleAlignment::PerCandidate;
  fail(ErrorKind::InvalidInput, fmt::format("unknown sample alignment '{}' (common, per-candidate)", text));
}

SelectionReport select_model(const TimeSeriesPanel& panel, const Graph& g, const WeightScheme& scheme,
                             const OrderGrid& grid, const SelectionOptions& options) {
  if (grid.orders.empty()) fail(ErrorKind::InvalidInput, "candidate grid is empty");
  if (!std::equal(panel.labels().begin(), panel.labels().end(), g.labels().begin(), g.labels().end())) {
    fail(ErrorKind::InvalidInput, "select: node labels differ between panel and graph");
  }

  std::size_t r_max = 1;
  for (const auto& o : grid.orders) r_max = std::max(r_max, o.max_stage());
  const WeightSet weights = compute_weights(g, stage_neighbourhoods(g, r_max), scheme);

  const std::size_t n = grid.orders.size();
  std::vector<CandidateResult> results(n);
  std::vector<bool> admissible(n, false);
  std::size_t p_common = 0;
  for (std::size_t k = 0; k < n; ++k) {
    auto& r = results[k];
    r.order = grid.orders[k];
    r.scheme = scheme.kind;
    try {
      check_admissible(r.order, weights, g.labels());
      if (r.order.p() >= panel.times()) {
        fail(ErrorKind::InsufficientData, fmt::format("lag order {} needs more than {} time points", r.order.p(), panel.times()));
      }
      admissible[k] = true;
      p_common = std::max(p_common, r.order.p());
    } catch (const Error& e) {
      r.status = std::string(to_string(e.kind()));
      r.reason = e.what();
    }
  }

  SelectionReport report;
  report.criterion = options.criterion;
  report.alignment = options.alignment;
  report.first_time = options.alignment == SampleAlignment::Common ? p_common : 0;

  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < n; ++k) {
    if (!admissible[k]) continue;
    auto& r = results[k];
    try {
      GnarSpec spec{r.order, options.global_alpha, scheme};
      GnarFit fit = fit_gnar(panel, g, spec, FitOptions{options.estimator, report.first_time});
      r.fitted = true;
      r.status = "ok";
      r.bic = fit.bic;
      r.aic = fit.aic;
      r.loglik = fit.loglik;
      r.M = fit.M;
      r.n_obs = fit.n_obs;
      if (!best || ranks_before(r, results[*best], options.criterion)) {
        best = k;
        report.best_fit = std::move(fit);
      }
    } catch (const Error& e) {
      r.status = std::string(to_string(e.kind()));
      r.reason = e.what();
    }
  }

  if (!best) {
    std::string reasons;
    for (const auto& r : results) reasons += fmt::format("\n  {}: {}", to_string(r.order), r.reason);
    fail(ErrorKind::SelectionFailed, "no candidate could be fitted:" + reasons);
  }

  std::vector<CandidateResult> fitted;
  std::vector<CandidateResult> skipped;
  for (auto& r : results) (r.fitted ? fitted : skipped).push_back(std::move(r));
  std::stable_sort(fitted.begin(), fitted.end(),
                   [&](const auto& a, const auto& b) { return ranks_before(a, b, options.criterion); });
  for (const auto& r : fitted) report.mixed_n_obs = report.mixed_n_obs || r.n_obs != fitted.front().n_obs;
  report.candidates = std::move(fitted);
  report.candidates.insert(report.candidates.end(), std::make_move_iterator(skipped.begin()),
                           std::make_move_iterator(skipped.end()));
  report.best = 0;
  return report;
}

// Per-node AR baseline

ArBaseline fit_ar_baseline(const TimeSeriesPanel& panel, std::size_t p_max) {
  if (p_max < 1) fail(ErrorKind::InvalidInput, "AR baseline needs p_max >= 1");
  const std::size_t T = panel.times();
  ArBaseline out;
  out.p_max = p_max;
  for (std::size_t i = 0; i < panel.nodes(); ++i) {
    ArNodeFit node;
    node.node = panel.labels()[i];
    node.one_step_predictions.assign(T, kMissing);
    std::vector<double> x(T);
    std::size_t observed = 0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t t = 0; t < T; ++t) {
      x[t] = panel(i, t);
      if (is_missing(x[t])) continue;
      ++observed;
      lo = std::min(lo, x[t]);
      hi = std::max(hi, x[t]);
    }
    if (observed <= p_max + 1) {
      node.status = "InsufficientData";
      out.nodes.push_back(std::move(node));
      continue;
    }
    if (lo == hi) {
      node.status = "degenerate: zero variance";
      out.nodes.push_back(std::move(node));
      continue;
    }

    double best_bic = std::numeric_limits<double>::infinity();
    for (std::size_t p = 1; p <= p_max; ++p) {
      std::vector<std::size_t> rows;
      for (std::size_t t = p_max; t < T; ++t) {
        bool ok = !is_missing(x[t]);
        for (std::size_t j = 1; j <= p && ok; ++j) ok = !is_missing(x[t - j]);
        if (ok) rows.push_back(t);
      }
      if (rows.size() <= p) continue;
      const auto m = static_cast<Eigen::Index>(rows.size());
      Eigen::MatrixXd d(m, static_cast<Eigen::Index>(p));
      Eigen::VectorXd y(m);
      for (Eigen::Index k = 0; k < m; ++k) {
        const std::size_t t = rows[static_cast<std::size_t>(k)];
        y(k) = x[t];
        for (std::size_t j = 1; j <= p; ++j) d(k, static_cast<Eigen::Index>(j - 1)) = x[t - j];
      }
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d);
      if (qr.rank() < d.cols()) continue;
      const Eigen::VectorXd phi = qr.solve(y);
      const double rss = (y - d * phi).squaredNorm();
      const double bic = bic_of(gaussian_ll_or_inf(rss, rows.size()), p, rows.size());
      if (bic < best_bic) {
        best_bic = bic;
        node.order = p;
        node.coefficients.assign(phi.data(), phi.data() + phi.size());
        node.sigma2 = rss / static_cast<double>(rows.size());
        node.n_obs = rows.size();
      }
    }
    if (node.order == 0) {
      node.status = "SingularDesign";
      out.nodes.push_back(std::move(node));
      continue;
    }
    node.ok = true;
    node.status = "ok";
    node.bic = best_bic;
    for (std::size_t t = node.order; t < T; ++t) {
      double v = 0.0;
      for (std::size_t j = 1; j <= node.order; ++j) v += node.coefficients[j - 1] * x[t - j];
      node.one_step_predictions[t] = v;
    }
    out.nodes.push_back(std::move(node));
  }
  return out;
}

Eigen::MatrixXd ar_forecast(const ArBaseline& baseline, const TimeSeriesPanel& panel, std::size_t horizon,
                            ForecastMode mode, std::optional<std::size_t> origin) {
  if (baseline.nodes.size() != panel.nodes()) fail(ErrorKind::InvalidInput, "AR baseline does not match panel");
  const std::size_t T = panel.times();
  if (horizon == 0) fail(ErrorKind::InvalidInput, "forecast horizon must be at least 1");
  std::size_t start = origin.value_or(mode == ForecastMode::Recursive ? T : (horizon <= T ? T - horizon : 0));
  if (start > T) fail(ErrorKind::InvalidInput, "forecast origin beyond the panel");
  if (mode == ForecastMode::RollingOneStep && start + horizon > T) {
    fail(ErrorKind::InvalidInput, "rolling one-step forecasts need observed values up to the last predicted week");
  }
  const auto h = static_cast<Eigen::Index>(horizon);
  Eigen::MatrixXd out = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(panel.nodes()), h, kMissing);
  for (std::size_t i = 0; i < panel.nodes(); ++i) {
    const auto& node = baseline.nodes[i];
    if (!node.ok || start < node.order) continue;
    std::vector<double> work(start + horizon);
    for (std::size_t t = 0; t < start + horizon; ++t) {
      work[t] = t < start || mode == ForecastMode::RollingOneStep ? panel(i, t) : kMissing;
    }
    for (std::size_t k = 0; k < horizon; ++k) {
      const std::size_t t = start + k;
      double v = 0.0;
      for (std::size_t j = 1; j <= node.order; ++j) v += node.coefficients[j - 1] * work[t - j];
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v;
      if (mode == ForecastMode::Recursive) work[t] = v;
    }
  }
  return out;
}

}  // namespace gnar
