#include "gnar/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <fmt/format.h>

#include "gnar/error.hpp"

namespace gnar {
namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Small counter-based stream; cheap to create per replicate and identical on
// every platform, unlike std::shuffle over a standard engine.
class SplitMixStream {
 public:
  explicit SplitMixStream(std::uint64_t state) : state_(state) {}
  std::uint64_t next() { return splitmix(state_++ * 0x2545f4914f6cdd1dULL); }

  std::size_t below(std::size_t n) {
    const std::uint64_t bound = n;
    const std::uint64_t limit = -bound % bound;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = next();
      if (r >= limit) return static_cast<std::size_t>(r % bound);
    }
  }

 private:
  std::uint64_t state_;
};

std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t t, std::uint64_t rep) {
  return splitmix(splitmix(splitmix(seed) ^ t) ^ (rep + 0x632be59bd9b4e019ULL));
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

std::vector<double> observed_row(const Eigen::MatrixXd& m, Eigen::Index i) {
  std::vector<double> out;
  for (Eigen::Index t = 0; t < m.cols(); ++t) {
    if (!is_missing(m(i, t))) out.push_back(m(i, t));
  }
  return out;
}

template <class Test>
std::vector<NodeTest> per_node(const Eigen::MatrixXd& residuals, std::span<const std::string> labels, Test test) {
  if (static_cast<std::size_t>(residuals.rows()) != labels.size()) {
    fail(ErrorKind::InvalidInput, "residual rows do not match the labels");
  }
  std::vector<NodeTest> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    NodeTest nt;
    nt.node = labels[i];
    try {
      nt.result = test(observed_row(residuals, static_cast<Eigen::Index>(i)));
      nt.status = "ok";
    } catch (const Error& e) {
      nt.status = fmt::format("{}: {}", to_string(e.kind()), e.what());
    }
    out.push_back(std::move(nt));
  }
  return out;
}

}  // namespace

MaseResult mase(const Eigen::MatrixXd& actual, const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& history) {
  if (actual.rows() != predicted.rows() || actual.cols() != predicted.cols()) {
    fail(ErrorKind::InvalidInput, "actual and predicted shapes differ");
  }
  if (history.rows() != actual.rows()) fail(ErrorKind::InvalidInput, "history rows do not match forecasts");
  if (history.cols() < 2) fail(ErrorKind::InsufficientData, "MASE scale needs at least two history points");

  MaseResult out;
  double total = 0.0;
  std::size_t defined = 0;
  for (Eigen::Index i = 0; i < actual.rows(); ++i) {
    NodeMase node;
    double diff_sum = 0.0;
    std::size_t diff_count = 0;
    for (Eigen::Index t = 1; t < history.cols(); ++t) {
      const double d = history(i, t) - history(i, t - 1);
      if (is_missing(d)) continue;
      diff_sum += std::fabs(d);
      ++diff_count;
    }
    const double scale = diff_count > 0 ? diff_sum / static_cast<double>(diff_count) : 0.0;
    node.defined = scale > 0.0;

    double err_sum = 0.0;
    std::size_t err_count = 0;
    node.scaled_errors.assign(static_cast<std::size_t>(actual.cols()), kMissing);
    for (Eigen::Index t = 0; t < actual.cols(); ++t) {
      const double e = actual(i, t) - predicted(i, t);
      if (is_missing(e)) continue;
      err_sum += std::fabs(e);
      ++err_count;
      if (node.defined) node.scaled_errors[static_cast<std::size_t>(t)] = std::fabs(e) / scale;
    }
    if (node.defined && err_count > 0) {
      node.mean = (err_sum / static_cast<double>(err_count)) / scale;
      if (err_count > 1) {
        double ss = 0.0;
        for (double q : node.scaled_errors) {
          if (!is_missing(q)) ss += (q - node.mean) * (q - node.mean);
        }
        node.sd = std::sqrt(ss / static_cast<double>(err_count - 1));
      }
      total += node.mean;
      ++defined;
    }
    out.nodes.push_back(std::move(node));
  }
  if (defined > 0) out.overall_mean = total / static_cast<double>(defined);
  return out;
}

Eigen::MatrixXd moran_weights(const Graph& g) {
  const auto spl = shortest_path_lengths(g);
  const auto n = static_cast<Eigen::Index>(g.size());
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto a = static_cast<std::size_t>(i);
      const auto b = static_cast<std::size_t>(j);
      if (i != j && spl.reachable(a, b)) w(i, j) = std::exp(-static_cast<double>(spl(a, b)));
    }
  }
  return w;
}

double morans_i(std::span<const double> values, const Eigen::MatrixXd& weights) {
  const std::size_t n = values.size();
  if (static_cast<std::size_t>(weights.rows()) != n || static_cast<std::size_t>(weights.cols()) != n) {
    fail(ErrorKind::InvalidInput, "Moran weights do not match the number of values");
  }
  if (n < 2) fail(ErrorKind::UndefinedStatistic, "Moran's I needs at least two values");
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  std::vector<double> z(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = values[i] - mean;
    var += z[i] * z[i];
  }
  if (!(var > 0.0)) fail(ErrorKind::UndefinedStatistic, "Moran's I is undefined for constant values");
  double num = 0.0;
  double w0 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double w = weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      num += w * z[i] * z[j];
      w0 += w;
    }
  }
  if (!(w0 > 0.0)) fail(ErrorKind::UndefinedStatistic, "Moran's I is undefined when all weights are zero");
  return num / (w0 * var / static_cast<double>(n));
}

std::vector<double> rank_transform(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t k = 0; k < n;) {
    std::size_t e = k;
    while (e + 1 < n && values[idx[e + 1]] == values[idx[k]]) ++e;
    const double r = 0.5 * static_cast<double>(k + e) + 1.0;
    for (std::size_t m = k; m <= e; ++m) ranks[idx[m]] = r;
    k = e + 1;
  }
  return ranks;
}

double quantile_sorted(std::span<const double> sorted, double prob) {
  if (sorted.empty()) fail(ErrorKind::InvalidInput, "quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

MoranResult moran_permutation_test(const TimeSeriesPanel& panel, const Graph& g, std::size_t R, std::uint64_t seed,
                                   bool rank_based) {
  if (R < 20) fail(ErrorKind::InvalidInput, fmt::format("R = {} permutations is too few for 95% bands (need >= 20)", R));
  if (!std::equal(panel.labels().begin(), panel.labels().end(), g.labels().begin(), g.labels().end())) {
    fail(ErrorKind::InvalidInput, "moran: node labels differ between panel and graph");
  }
  const Eigen::MatrixXd w_full = moran_weights(g);
  MoranResult out;
  out.R = R;
  out.seed = seed;
  out.rank_based = rank_based;

  std::vector<Eigen::Index> present;
  std::vector<double> values;
  std::vector<double> perm;
  std::vector<double> draws(R);
  std::size_t outside = 0;
  for (std::size_t t = 0; t < panel.times(); ++t) {
    present.clear();
    values.clear();
    for (std::size_t i = 0; i < panel.nodes(); ++i) {
      if (is_missing(panel(i, t))) continue;
      present.push_back(static_cast<Eigen::Index>(i));
      values.push_back(panel(i, t));
    }
    if (rank_based) values = rank_transform(values);
    const Eigen::MatrixXd w = w_full(present, present);
    double observed = 0.0;
    try {
      observed = morans_i(values, w);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::UndefinedStatistic) throw;
      out.skipped.push_back(panel.dates()[t]);
      continue;
    }
    for (std::size_t r = 0; r < R; ++r) {
      perm = values;
      SplitMixStream rng(replicate_seed(seed, t, r));
      for (std::size_t k = perm.size() - 1; k > 0; --k) std::swap(perm[k], perm[rng.below(k + 1)]);
      draws[r] = morans_i(perm, w);
    }
    std::sort(draws.begin(), draws.end());
    const double lo = quantile_sorted(draws, 0.025);
    const double hi = quantile_sorted(draws, 0.975);
    const bool out_of_band = observed < lo || observed > hi;
    out.dates.push_back(panel.dates()[t]);
    out.I.push_back(observed);
    out.lower.push_back(lo);
    out.median.push_back(quantile_sorted(draws, 0.5));
    out.upper.push_back(hi);
    out.outside.push_back(out_of_band);
    outside += out_of_band ? 1 : 0;
  }
  if (!out.dates.empty()) out.N_m = static_cast<double>(outside) / static_cast<double>(out.dates.size());
  return out;
}

double kolmogorov_survival(double x) {
  if (!(x > 0.0)) return 1.0;
  constexpr double pi2 = std::numbers::pi * std::numbers::pi;
  if (x < 1.18) {
    // Theta-function form converges fast for small arguments.
    double s = 0.0;
    for (int k = 1; k <= 20; ++k) {
      const double m = 2.0 * k - 1.0;
      s += std::exp(-m * m * pi2 / (8.0 * x * x));
    }
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / x * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

TestResult ks_normality(std::span<const double> residuals) {
  const std::size_t n = residuals.size();
  if (n < 8) fail(ErrorKind::InsufficientData, fmt::format("KS test needs at least 8 residuals, got {}", n));
  std::vector<double> x(residuals.begin(), residuals.end());
  std::sort(x.begin(), x.end());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0)) fail(ErrorKind::UndefinedStatistic, "KS test is undefined for zero-variance residuals");

  double d = 0.0;
  const auto nn = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = normal_cdf((x[i] - mean) / sd);
    d = std::max({d, static_cast<double>(i + 1) / nn - f, f - static_cast<double>(i) / nn});
  }
  const double rn = std::sqrt(nn);
  TestResult r;
  r.statistic = d;
  r.p_value = kolmogorov_survival((rn + 0.12 + 0.11 / rn) * d);
  r.n = n;
  return r;
}

TestResult ljung_box(std::span<const double> series, std::optional<std::size_t> max_lag) {
  const std::size_t n = series.size();
  const std::size_t h = max_lag.value_or(std::min<std::size_t>(10, n / 5));
  if (h < 1) fail(ErrorKind::InsufficientData, fmt::format("Ljung-Box needs at least one lag (n = {})", n));
  if (n <= h + 1) fail(ErrorKind::InsufficientData, fmt::format("Ljung-Box with {} lags needs n > {}, got {}", h, h + 1, n));
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
  double c0 = 0.0;
  for (double v : series) c0 += (v - mean) * (v - mean);
  if (!(c0 > 0.0)) fail(ErrorKind::UndefinedStatistic, "Ljung-Box is undefined for a constant series");
  double q = 0.0;
  for (std::size_t k = 1; k <= h; ++k) {
    double ck = 0.0;
    for (std::size_t t = k; t < n; ++t) ck += (series[t] - mean) * (series[t - k] - mean);
    const double rho = ck / c0;
    q += rho * rho / static_cast<double>(n - k);
  }
  const auto nn = static_cast<double>(n);
  q *= nn * (nn + 2.0);
  TestResult r;
  r.statistic = q;
  r.p_value = std::clamp(boost::math::cdf(boost::math::complement(boost::math::chi_squared(static_cast<double>(h)), q)), 0.0, 1.0);
  r.n = n;
  r.lags = h;
  return r;
}

std::vector<NodeTest> ks_normality(const Eigen::MatrixXd& residuals, std::span<const std::string> labels) {
  return per_node(residuals, labels, [](const std::vector<double>& x) { return ks_normality(x); });
}

std::vector<NodeTest> ljung_box(const Eigen::MatrixXd& residuals, std::span<const std::string> labels,
                                std::optional<std::size_t> max_lag) {
  return per_node(residuals, labels, [&](const std::vector<double>& x) { return ljung_box(x, max_lag); });
}

}  // namespace gnar
