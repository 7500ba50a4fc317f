#include "gnar/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "gnar/error.hpp"

namespace gnar {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

std::size_t alpha_columns(const GnarSpec& spec, std::size_t n) {
  return spec.global_alpha ? spec.order.p() : n * spec.order.p();
}

// Offset of beta_{j,1} (j zero-based) in the coefficient vector.
std::vector<std::size_t> beta_offsets(const GnarSpec& spec, std::size_t n) {
  std::vector<std::size_t> out(spec.order.p());
  std::size_t at = alpha_columns(spec, n);
  for (std::size_t j = 0; j < spec.order.p(); ++j) {
    out[j] = at;
    at += spec.order.stages[j];
  }
  return out;
}

double neighbour_sum(const WeightSet& w, const Eigen::MatrixXd& x, std::size_t i, std::size_t r, Eigen::Index t) {
  double z = 0.0;
  for (const auto& e : w.stage(i, r)) z += e.weight * x(static_cast<Eigen::Index>(e.node), t);
  return z;
}

std::size_t stage_depth(const GnarOrder& order) { return std::max<std::size_t>(1, order.max_stage()); }

void require_same_labels(std::span<const std::string> a, std::span<const std::string> b, const char* what) {
  if (!std::equal(a.begin(), a.end(), b.begin(), b.end())) {
    fail(ErrorKind::InvalidInput, fmt::format("{}: node labels differ between panel and model", what));
  }
}

void unpack(GnarFit& fit, std::size_t n) {
  const auto& spec = fit.spec;
  const std::size_t p = spec.order.p();
  if (spec.global_alpha) {
    fit.alpha = Eigen::MatrixXd(1, static_cast<Eigen::Index>(p));
    for (std::size_t j = 0; j < p; ++j) fit.alpha(0, static_cast<Eigen::Index>(j)) = fit.gamma(static_cast<Eigen::Index>(j));
  } else {
    fit.alpha = Eigen::MatrixXd(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        fit.alpha(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            fit.gamma(static_cast<Eigen::Index>(j * n + i));
      }
    }
  }
  const auto offsets = beta_offsets(spec, n);
  fit.beta.assign(p, {});
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t r = 0; r < spec.order.stages[j]; ++r) {
      fit.beta[j].push_back(fit.gamma(static_cast<Eigen::Index>(offsets[j] + r)));
    }
  }
}

struct Solution {
  Eigen::VectorXd gamma;
  Eigen::MatrixXd cross_inverse;  // (D'D)^-1
};

Solution solve_least_squares(const Eigen::MatrixXd& d, const Eigen::VectorXd& y,
                             const std::vector<std::string>& names) {
  if (d.rows() == 0) fail(ErrorKind::InsufficientData, "design has no usable rows");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d);
  if (qr.rank() < d.cols()) {
    std::string dependent;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index k = qr.rank(); k < d.cols(); ++k) {
      if (!dependent.empty()) dependent += ", ";
      dependent += names[static_cast<std::size_t>(perm(k))];
    }
    fail(ErrorKind::SingularDesign,
         fmt::format("design has rank {} < {} columns; dependent columns: {}", qr.rank(), d.cols(), dependent));
  }
  Solution s;
  s.gamma = qr.solve(y);
  const Eigen::MatrixXd cross = d.transpose() * d;
  s.cross_inverse = cross.ldlt().solve(Eigen::MatrixXd::Identity(d.cols(), d.cols()));
  return s;
}

void finish_fit(GnarFit& fit, const Design& design, const TimeSeriesPanel& panel, const Eigen::VectorXd& e) {
  fit.labels = panel.labels();
  fit.dates = panel.dates();
  fit.column_names = design.column_names;
  fit.rows = design.rows;
  fit.n_obs = design.rows.size();
  fit.M = static_cast<std::size_t>(design.matrix.cols());
  fit.residuals = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(panel.nodes()),
                                            static_cast<Eigen::Index>(panel.times()), kMissing);
  for (std::size_t k = 0; k < design.rows.size(); ++k) {
    fit.residuals(static_cast<Eigen::Index>(design.rows[k].node), static_cast<Eigen::Index>(design.rows[k].time)) =
        e(static_cast<Eigen::Index>(k));
  }
  fit.sigma2 = e.squaredNorm() / static_cast<double>(fit.n_obs);
  unpack(fit, panel.nodes());
}

}  // namespace

// Orders and schemes

std::size_t GnarOrder::max_stage() const noexcept {
  return stages.empty() ? 0 : *std::max_element(stages.begin(), stages.end());
}

std::size_t GnarOrder::beta_count() const noexcept {
  std::size_t total = 0;
  for (auto s : stages) total += s;
  return total;
}

std::string to_string(const GnarOrder& order) {
  const bool wide = order.max_stage() > 9;
  std::string s = fmt::format("GNAR-{}-", order.p());
  for (std::size_t j = 0; j < order.stages.size(); ++j) {
    if (wide && j > 0) s += ',';
    s += std::to_string(order.stages[j]);
  }
  return s;
}

GnarOrder parse_order(std::string_view text) {
  auto bad = [&]() { fail(ErrorKind::InvalidInput, fmt::format("cannot parse model order '{}'", text)); };
  auto to_size = [&](std::string_view s) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) bad();
    return v;
  };
  std::string_view p_part;
  std::string_view s_part;
  if (text.starts_with("GNAR-")) {
    const auto rest = text.substr(5);
    const auto dash = rest.find('-');
    if (dash == std::string_view::npos) bad();
    p_part = rest.substr(0, dash);
    s_part = rest.substr(dash + 1);
  } else {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) bad();
    p_part = text.substr(0, colon);
    s_part = text.substr(colon + 1);
  }
  GnarOrder order;
  const std::size_t p = to_size(p_part);
  if (s_part.find(',') != std::string_view::npos || !text.starts_with("GNAR-")) {
    std::size_t start = 0;
    while (start <= s_part.size()) {
      const auto comma = s_part.find(',', start);
      order.stages.push_back(to_size(s_part.substr(start, comma == std::string_view::npos ? s_part.npos : comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
  } else {
    for (char c : s_part) {
      if (c < '0' || c > '9') bad();
      order.stages.push_back(static_cast<std::size_t>(c - '0'));
    }
  }
  if (order.p() != p) bad();
  validate_order(order);
  return order;
}

void validate_order(const GnarOrder& order) {
  if (order.p() < 1) fail(ErrorKind::InvalidInput, "model order needs p >= 1");
}

std::string_view to_string(WeightKind kind) noexcept {
  switch (kind) {
    case WeightKind::InverseSPL: return "spl";
    case WeightKind::UniformStage: return "uniform";
    case WeightKind::InverseDistance: return "idw";
    case WeightKind::InverseDistancePopulation: return "pb";
  }
  return "spl";
}

WeightKind parse_weight_kind(std::string_view text) {
  if (text == "spl" || text == "InverseSPL") return WeightKind::InverseSPL;
  if (text == "uniform" || text == "UniformStage") return WeightKind::UniformStage;
  if (text == "idw" || text == "InverseDistance") return WeightKind::InverseDistance;
  if (text == "pb" || text == "InverseDistancePopulation") return WeightKind::InverseDistancePopulation;
  fail(ErrorKind::InvalidInput, fmt::format("unknown weight scheme '{}' (spl, uniform, idw, pb)", text));
}

std::size_t parameter_count(const GnarSpec& spec, std::size_t nodes) {
  return alpha_columns(spec, nodes) + spec.order.beta_count();
}

std::vector<std::string> coefficient_names(const GnarSpec& spec, std::span<const std::string> labels) {
  std::vector<std::string> names;
  const std::size_t p = spec.order.p();
  for (std::size_t j = 1; j <= p; ++j) {
    if (spec.global_alpha) {
      names.push_back(fmt::format("alpha_{}", j));
    } else {
      for (const auto& l : labels) names.push_back(fmt::format("alpha_{}[{}]", j, l));
    }
  }
  for (std::size_t j = 1; j <= p; ++j) {
    for (std::size_t r = 1; r <= spec.order.stages[j - 1]; ++r) names.push_back(fmt::format("beta_{}_{}", j, r));
  }
  return names;
}

// Weights

Eigen::MatrixXd WeightSet::matrix(std::size_t r) const {
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < size(); ++i) {
    for (const auto& e : stage(i, r)) w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(e.node)) = e.weight;
  }
  return w;
}

WeightSet compute_weights(const Graph& g, const StageNeighbourhoods& stages, const WeightScheme& scheme) {
  const std::size_t n = g.size();
  if (stages.size() != n) fail(ErrorKind::InvalidInput, "stage neighbourhoods do not match the graph");
  const bool needs_distance = scheme.kind == WeightKind::InverseDistance ||
                              scheme.kind == WeightKind::InverseDistancePopulation;
  if (needs_distance) {
    if (!scheme.distances) fail(ErrorKind::InvalidInput, fmt::format("scheme '{}' needs a distance matrix", to_string(scheme.kind)));
    if (static_cast<std::size_t>(scheme.distances->rows()) != n || static_cast<std::size_t>(scheme.distances->cols()) != n) {
      fail(ErrorKind::InvalidInput, "distance matrix shape does not match the graph");
    }
  }
  if (scheme.kind == WeightKind::InverseDistancePopulation) {
    if (!scheme.populations) fail(ErrorKind::InvalidInput, "scheme 'pb' needs node populations");
    if (scheme.populations->size() != n) fail(ErrorKind::InvalidInput, "population vector does not match the graph");
  }

  std::vector<std::vector<std::vector<WeightEntry>>> entries(n, std::vector<std::vector<WeightEntry>>(stages.r_max()));
  std::vector<double> raw;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 1; r <= stages.r_max(); ++r) {
      const auto& members = stages.stage(i, r);
      if (members.empty()) continue;
      raw.clear();
      for (std::size_t q : members) {
        double v = 1.0;
        switch (scheme.kind) {
          case WeightKind::InverseSPL: v = 1.0 / static_cast<double>(r); break;
          case WeightKind::UniformStage: v = 1.0; break;
          case WeightKind::InverseDistance:
          case WeightKind::InverseDistancePopulation: {
            const double d = (*scheme.distances)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q));
            if (!(d > 0.0)) {
              fail(ErrorKind::InvalidInput,
                   fmt::format("non-positive distance between '{}' and '{}'", g.labels()[i], g.labels()[q]));
            }
            v = 1.0 / d;
            if (scheme.kind == WeightKind::InverseDistancePopulation) v *= (*scheme.populations)[q];
            break;
          }
        }
        raw.push_back(v);
      }
      // Scaling by the largest raw weight first makes equal raw weights
      // exactly 1, so inverse-SPL and uniform weights agree bit for bit.
      const double top = *std::max_element(raw.begin(), raw.end());
      if (!(top > 0.0)) {
        fail(ErrorKind::InvalidInput, fmt::format("all weights zero for '{}' at stage {}", g.labels()[i], r));
      }
      double total = 0.0;
      for (double& v : raw) {
        v /= top;
        total += v;
      }
      auto& out = entries[i][r - 1];
      out.reserve(members.size());
      for (std::size_t k = 0; k < members.size(); ++k) out.push_back({members[k], raw[k] / total});
    }
  }
  return WeightSet(stages.r_max(), std::move(entries));
}

void check_admissible(const GnarOrder& order, const WeightSet& weights, std::span<const std::string> labels) {
  validate_order(order);
  const std::size_t depth = order.max_stage();
  if (depth > weights.r_max()) {
    fail(ErrorKind::InvalidInput, fmt::format("weights cover {} stages but {} needs {}", weights.r_max(), to_string(order), depth));
  }
  for (std::size_t r = 1; r <= depth; ++r) {
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights.stage(i, r).empty()) {
        fail(ErrorKind::ModelInadmissible,
             fmt::format("{} is inadmissible: stage {} neighbourhood of node '{}' is empty", to_string(order), r,
                         i < labels.size() ? labels[i] : std::to_string(i)));
      }
    }
  }
}

// Restriction matrix

RestrictionMatrix restriction_matrix(const GnarSpec& spec, const WeightSet& weights, std::size_t n) {
  if (weights.size() != n) fail(ErrorKind::InvalidInput, "weight set does not match node count");
  std::vector<std::string> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = std::to_string(i);
  check_admissible(spec.order, weights, labels);

  const std::size_t p = spec.order.p();
  const std::size_t m = parameter_count(spec, n);
  RestrictionMatrix out;
  out.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p * n * n), static_cast<Eigen::Index>(m));
  out.column_names = coefficient_names(spec, labels);
  // Column-stacked vec(B): entry (l, m) of phi_j sits at j N^2 + m N + l.
  auto row = [n](std::size_t j, std::size_t l, std::size_t col) {
    return static_cast<Eigen::Index>(j * n * n + col * n + l);
  };
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = spec.global_alpha ? j : j * n + i;
      out.matrix(row(j, i, i), static_cast<Eigen::Index>(c)) = 1.0;
    }
  }
  const auto offsets = beta_offsets(spec, n);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t r = 1; r <= spec.order.stages[j]; ++r) {
      const auto c = static_cast<Eigen::Index>(offsets[j] + r - 1);
      for (std::size_t l = 0; l < n; ++l) {
        for (const auto& e : weights.stage(l, r)) out.matrix(row(j, l, e.node), c) = e.weight;
      }
    }
  }
  return out;
}

Eigen::MatrixXd coefficient_blocks(const GnarSpec& spec, const WeightSet& weights, const Eigen::MatrixXd& alpha,
                                   const std::vector<std::vector<double>>& beta) {
  const auto n = static_cast<Eigen::Index>(weights.size());
  const std::size_t p = spec.order.p();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n * static_cast<Eigen::Index>(p));
  for (std::size_t j = 0; j < p; ++j) {
    auto block = b.middleCols(static_cast<Eigen::Index>(j) * n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      block(i, i) = spec.global_alpha ? alpha(0, static_cast<Eigen::Index>(j)) : alpha(i, static_cast<Eigen::Index>(j));
    }
    for (std::size_t r = 1; r <= spec.order.stages[j]; ++r) block += beta[j][r - 1] * weights.matrix(r);
  }
  return b;
}

// Design and estimation

Design build_design(const TimeSeriesPanel& panel, const GnarSpec& spec, const WeightSet& weights,
                    std::size_t first_time) {
  const std::size_t n = panel.nodes();
  const std::size_t T = panel.times();
  const std::size_t p = spec.order.p();
  if (weights.size() != n) fail(ErrorKind::InvalidInput, "weight set does not match panel nodes");
  check_admissible(spec.order, weights, panel.labels());
  if (T <= p) fail(ErrorKind::InsufficientData, fmt::format("{} time points cannot support lag order {}", T, p));

  const std::size_t m = parameter_count(spec, n);
  const auto offsets = beta_offsets(spec, n);
  const Eigen::MatrixXd& x = panel.values();
  const std::size_t t0 = std::max(p, first_time);

  Design d;
  d.column_names = coefficient_names(spec, panel.labels());
  std::vector<double> buffer;
  buffer.reserve(n * (T - std::min(T, t0)) * m);
  std::vector<double> y;
  Eigen::VectorXd row(static_cast<Eigen::Index>(m));
  for (std::size_t t = t0; t < T; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const double target = panel(i, t);
      if (is_missing(target)) continue;
      row.setZero();
      bool usable = true;
      for (std::size_t j = 1; j <= p && usable; ++j) {
        const auto tj = static_cast<Eigen::Index>(t - j);
        const double own = x(static_cast<Eigen::Index>(i), tj);
        const std::size_t ac = spec.global_alpha ? j - 1 : (j - 1) * n + i;
        row(static_cast<Eigen::Index>(ac)) = own;
        usable = !is_missing(own);
        for (std::size_t r = 1; r <= spec.order.stages[j - 1] && usable; ++r) {
          const double z = neighbour_sum(weights, x, i, r, tj);
          row(static_cast<Eigen::Index>(offsets[j - 1] + r - 1)) = z;
          usable = !is_missing(z);
        }
      }
      if (!usable) continue;
      buffer.insert(buffer.end(), row.data(), row.data() + row.size());
      y.push_back(target);
      d.rows.push_back({i, t});
    }
  }
  if (d.rows.empty()) fail(ErrorKind::InsufficientData, fmt::format("{} has no usable rows", to_string(spec.order)));
  const auto rows = static_cast<Eigen::Index>(d.rows.size());
  d.matrix = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      buffer.data(), rows, static_cast<Eigen::Index>(m));
  d.response = Eigen::Map<const Eigen::VectorXd>(y.data(), rows);
  return d;
}

double gaussian_loglik(double rss, std::size_t n_obs) {
  const auto n = static_cast<double>(n_obs);
  return -0.5 * n * (kLog2Pi + std::log(rss / n) + 1.0);
}

double bic_of(double loglik, std::size_t M, std::size_t n_obs) {
  return static_cast<double>(M) * std::log(static_cast<double>(n_obs)) - 2.0 * loglik;
}

double aic_of(double loglik, std::size_t M) { return 2.0 * static_cast<double>(M) - 2.0 * loglik; }

double GnarFit::alpha_at(std::size_t node, std::size_t lag) const {
  return spec.global_alpha ? alpha(0, static_cast<Eigen::Index>(lag))
                           : alpha(static_cast<Eigen::Index>(node), static_cast<Eigen::Index>(lag));
}

GnarFit fit_ols(const Design& design, const GnarSpec& spec, const WeightSet& weights, const TimeSeriesPanel& panel) {
  const Solution s = solve_least_squares(design.matrix, design.response, design.column_names);
  GnarFit fit;
  fit.spec = spec;
  fit.estimator = Estimator::Ols;
  fit.weights = weights;
  fit.gamma = s.gamma;
  const Eigen::VectorXd e = design.response - design.matrix * s.gamma;
  finish_fit(fit, design, panel, e);

  const double rss = e.squaredNorm();
  const auto dof = static_cast<double>(fit.n_obs) - static_cast<double>(fit.M);
  const double s2 = dof > 0 ? rss / dof : std::numeric_limits<double>::quiet_NaN();
  fit.std_errors = (s2 * s.cross_inverse.diagonal().array()).sqrt().matrix();
  fit.loglik = gaussian_loglik(rss, fit.n_obs);
  fit.bic = bic_of(fit.loglik, fit.M, fit.n_obs);
  fit.aic = aic_of(fit.loglik, fit.M);
  return fit;
}

Eigen::MatrixXd estimate_sigma(const TimeSeriesPanel& panel, std::size_t p) {
  const std::size_t n = panel.nodes();
  const std::size_t T = panel.times();
  if (p < 1) fail(ErrorKind::InvalidInput, "lag order must be at least 1");
  const Eigen::MatrixXd& x = panel.values();
  auto complete = [&](std::size_t t) { return !x.col(static_cast<Eigen::Index>(t)).array().isNaN().any(); };

  std::vector<std::size_t> usable;
  for (std::size_t t = p; t < T; ++t) {
    bool ok = complete(t);
    for (std::size_t j = 1; j <= p && ok; ++j) ok = complete(t - j);
    if (ok) usable.push_back(t);
  }
  const std::size_t need = n * p;
  if (usable.size() < need) {
    fail(ErrorKind::Infeasible,
         fmt::format("unrestricted VAR({}) covariance needs T - p >= N p = {} complete time points, found {}; "
                     "use the diagonal fallback (per-node residual variances from the OLS fit)",
                     p, need, usable.size()));
  }
  const auto k = static_cast<Eigen::Index>(usable.size());
  const auto nn = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd y(nn, k);
  Eigen::MatrixXd z(nn * static_cast<Eigen::Index>(p), k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto t = static_cast<Eigen::Index>(usable[static_cast<std::size_t>(c)]);
    y.col(c) = x.col(t);
    for (Eigen::Index j = 1; j <= static_cast<Eigen::Index>(p); ++j) z.col(c).segment((j - 1) * nn, nn) = x.col(t - j);
  }
  const Eigen::MatrixXd zz = z * z.transpose();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(zz);
  if (lu.rank() < zz.rows()) {
    fail(ErrorKind::Infeasible, "lagged regressors are collinear; use the diagonal fallback");
  }
  const Eigen::MatrixXd b = lu.solve(z * y.transpose()).transpose();
  const Eigen::MatrixXd e = y - b * z;
  return (e * e.transpose()) / static_cast<double>(k);
}

GnarFit fit_egls(const Design& design, const Eigen::MatrixXd& sigma, const GnarSpec& spec, const WeightSet& weights,
                 const TimeSeriesPanel& panel) {
  const auto n = static_cast<Eigen::Index>(panel.nodes());
  if (sigma.rows() != n || sigma.cols() != n) fail(ErrorKind::InvalidInput, "covariance shape does not match panel");
  Eigen::MatrixXd dw = design.matrix;
  Eigen::VectorXd yw = design.response;
  double logdet = 0.0;

  std::size_t begin = 0;
  const std::size_t total = design.rows.size();
  std::vector<Eigen::Index> nodes;
  while (begin < total) {
    std::size_t end = begin;
    while (end < total && design.rows[end].time == design.rows[begin].time) ++end;
    nodes.clear();
    for (std::size_t k = begin; k < end; ++k) nodes.push_back(static_cast<Eigen::Index>(design.rows[k].node));
    const auto m = static_cast<Eigen::Index>(nodes.size());
    const Eigen::MatrixXd sub = sigma(nodes, nodes);
    Eigen::LLT<Eigen::MatrixXd> llt(sub);
    if (llt.info() != Eigen::Success) {
      fail(ErrorKind::SingularDesign,
           "error covariance is not positive definite; regularise it (e.g. add a small multiple of its diagonal)");
    }
    const auto first = static_cast<Eigen::Index>(begin);
    dw.middleRows(first, m) = llt.matrixL().solve(dw.middleRows(first, m));
    yw.segment(first, m) = llt.matrixL().solve(yw.segment(first, m));
    logdet += 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    begin = end;
  }

  const Solution s = solve_least_squares(dw, yw, design.column_names);
  GnarFit fit;
  fit.spec = spec;
  fit.estimator = Estimator::Egls;
  fit.weights = weights;
  fit.gamma = s.gamma;
  finish_fit(fit, design, panel, design.response - design.matrix * s.gamma);
  fit.sigma_matrix = sigma;
  fit.std_errors = s.cross_inverse.diagonal().array().sqrt().matrix();
  const double whitened = (yw - dw * s.gamma).squaredNorm();
  fit.loglik = -0.5 * (static_cast<double>(fit.n_obs) * kLog2Pi + logdet + whitened);
  fit.bic = bic_of(fit.loglik, fit.M, fit.n_obs);
  fit.aic = aic_of(fit.loglik, fit.M);
  return fit;
}

GnarFit fit_gnar(const TimeSeriesPanel& panel, const Graph& g, const GnarSpec& spec, const FitOptions& options) {
  require_same_labels(panel.labels(), g.labels(), "fit");
  validate_order(spec.order);
  const auto stages = stage_neighbourhoods(g, stage_depth(spec.order));
  const WeightSet weights = compute_weights(g, stages, spec.scheme);
  const Design design = build_design(panel, spec, weights, options.first_time);
  GnarFit ols = fit_ols(design, spec, weights, panel);
  if (options.estimator == Estimator::Ols) return ols;

  Eigen::MatrixXd sigma;
  bool fallback = false;
  try {
    sigma = estimate_sigma(panel, spec.order.p());
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Infeasible) throw;
    fallback = true;
    const auto n = static_cast<Eigen::Index>(panel.nodes());
    sigma = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double ss = 0.0;
      int count = 0;
      for (Eigen::Index t = 0; t < ols.residuals.cols(); ++t) {
        const double r = ols.residuals(i, t);
        if (is_missing(r)) continue;
        ss += r * r;
        ++count;
      }
      sigma(i, i) = count > 0 && ss > 0.0 ? ss / count : ols.sigma2;
    }
  }
  GnarFit fit = fit_egls(design, sigma, spec, weights, panel);
  fit.sigma_fallback = fallback;
  return fit;
}

// Simulation and forecasting

TimeSeriesPanel simulate(const GnarSpec& spec, const Eigen::MatrixXd& alpha,
                         const std::vector<std::vector<double>>& beta, const Graph& g,
                         const SimulationConfig& config) {
  validate_order(spec.order);
  const std::size_t n = g.size();
  const std::size_t p = spec.order.p();
  const auto expected_rows = spec.global_alpha ? 1 : static_cast<Eigen::Index>(n);
  if (alpha.rows() != expected_rows || alpha.cols() != static_cast<Eigen::Index>(p)) {
    fail(ErrorKind::InvalidInput, fmt::format("alpha must be {}x{}", expected_rows, p));
  }
  if (beta.size() != p) fail(ErrorKind::InvalidInput, fmt::format("beta needs {} lag entries", p));
  for (std::size_t j = 0; j < p; ++j) {
    if (beta[j].size() != spec.order.stages[j]) {
      fail(ErrorKind::InvalidInput, fmt::format("beta for lag {} needs {} stages", j + 1, spec.order.stages[j]));
    }
  }
  if (!(config.sigma >= 0.0) || !std::isfinite(config.sigma)) fail(ErrorKind::InvalidInput, "sigma must be >= 0");
  const double init_sd = config.init_sd.value_or(config.sigma);
  if (!(init_sd >= 0.0)) fail(ErrorKind::InvalidInput, "initial standard deviation must be >= 0");
  const std::size_t total = config.burn_in + config.times;
  if (config.times == 0 || total <= p) fail(ErrorKind::InvalidInput, "simulation length must exceed the lag order");

  const auto stages = stage_neighbourhoods(g, stage_depth(spec.order));
  const WeightSet weights = compute_weights(g, stages, spec.scheme);
  check_admissible(spec.order, weights, g.labels());

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto nn = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd x(nn, static_cast<Eigen::Index>(total));
  for (Eigen::Index t = 0; t < static_cast<Eigen::Index>(p); ++t) {
    for (Eigen::Index i = 0; i < nn; ++i) x(i, t) = config.init_mean + init_sd * normal(rng);
  }
  for (auto t = static_cast<Eigen::Index>(p); t < static_cast<Eigen::Index>(total); ++t) {
    for (Eigen::Index i = 0; i < nn; ++i) {
      double v = 0.0;
      for (std::size_t j = 1; j <= p; ++j) {
        const Eigen::Index tj = t - static_cast<Eigen::Index>(j);
        const double a = spec.global_alpha ? alpha(0, static_cast<Eigen::Index>(j - 1))
                                           : alpha(i, static_cast<Eigen::Index>(j - 1));
        v += a * x(i, tj);
        for (std::size_t r = 1; r <= spec.order.stages[j - 1]; ++r) {
          v += beta[j - 1][r - 1] * neighbour_sum(weights, x, static_cast<std::size_t>(i), r, tj);
        }
      }
      x(i, t) = v + config.sigma * normal(rng);
    }
  }
  const auto keep = static_cast<Eigen::Index>(config.times);
  return TimeSeriesPanel(g.labels(), weekly_dates(config.start, config.times), x.rightCols(keep));
}

std::string_view to_string(ForecastMode mode) noexcept {
  return mode == ForecastMode::Recursive ? "recursive" : "rolling";
}

ForecastMode parse_forecast_mode(std::string_view text) {
  if (text == "rolling" || text == "rolling_one_step") return ForecastMode::RollingOneStep;
  if (text == "recursive") return ForecastMode::Recursive;
  fail(ErrorKind::InvalidInput, fmt::format("unknown forecast mode '{}' (rolling, recursive)", text));
}

Eigen::MatrixXd forecast(const GnarFit& fit, const TimeSeriesPanel& panel, std::size_t horizon, ForecastMode mode,
                         std::optional<std::size_t> origin) {
  require_same_labels(panel.labels(), fit.labels, "forecast");
  const std::size_t T = panel.times();
  const std::size_t p = fit.spec.order.p();
  if (horizon == 0) fail(ErrorKind::InvalidInput, "forecast horizon must be at least 1");
  std::size_t start = 0;
  if (origin) {
    start = *origin;
  } else if (mode == ForecastMode::Recursive) {
    start = T;
  } else {
    if (horizon > T) fail(ErrorKind::InvalidInput, "horizon exceeds the panel length");
    start = T - horizon;
  }
  if (start < p || start > T) {
    fail(ErrorKind::InvalidInput, fmt::format("forecast origin {} leaves fewer than p = {} history columns", start, p));
  }
  if (mode == ForecastMode::RollingOneStep && start + horizon > T) {
    fail(ErrorKind::InvalidInput, "rolling one-step forecasts need observed values up to the last predicted week");
  }

  const auto n = static_cast<Eigen::Index>(panel.nodes());
  const auto h = static_cast<Eigen::Index>(horizon);
  const auto s = static_cast<Eigen::Index>(start);
  Eigen::MatrixXd work(n, s + h);
  work.leftCols(s) = panel.values().leftCols(s);
  if (mode == ForecastMode::RollingOneStep) work.rightCols(h) = panel.values().middleCols(s, h);

  Eigen::MatrixXd out(n, h);
  for (Eigen::Index k = 0; k < h; ++k) {
    const Eigen::Index t = s + k;
    for (Eigen::Index i = 0; i < n; ++i) {
      double v = 0.0;
      for (std::size_t j = 1; j <= p; ++j) {
        const Eigen::Index tj = t - static_cast<Eigen::Index>(j);
        v += fit.alpha_at(static_cast<std::size_t>(i), j - 1) * work(i, tj);
        for (std::size_t r = 1; r <= fit.spec.order.stages[j - 1]; ++r) {
          v += fit.beta[j - 1][r - 1] * neighbour_sum(fit.weights, work, static_cast<std::size_t>(i), r, tj);
        }
      }
      out(i, k) = v;
    }
    if (mode == ForecastMode::Recursive) work.col(t) = out.col(k);
  }
  return out;
}

double stationarity_margin(const Eigen::MatrixXd& alpha, const std::vector<std::vector<double>>& beta) {
  double load = 0.0;
  for (Eigen::Index j = 0; j < alpha.cols(); ++j) {
    load += alpha.col(j).cwiseAbs().maxCoeff();
    if (static_cast<std::size_t>(j) < beta.size()) {
      for (double b : beta[static_cast<std::size_t>(j)]) load += std::fabs(b);
    }
  }
  return 1.0 - load;
}

}  // namespace gnar
