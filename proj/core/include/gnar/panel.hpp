#pragma once

#include <chrono>
#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace gnar {

using Date = std::chrono::sys_days;

/// Parses YYYY-MM-DD. Throws InvalidInput on malformed or impossible dates.
Date parse_date(std::string_view text);
std::string format_date(Date d);

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) noexcept { return v != v; }

/// N x T node-level observations. Rows follow `labels`, columns follow
/// `dates`; missing cells hold kMissing.
class TimeSeriesPanel {
 public:
  TimeSeriesPanel() = default;
  /// Throws InvalidInput when shapes disagree or dates are not strictly increasing.
  TimeSeriesPanel(std::vector<std::string> labels, std::vector<Date> dates, Eigen::MatrixXd values);

  std::size_t nodes() const noexcept { return labels_.size(); }
  std::size_t times() const noexcept { return dates_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<Date>& dates() const noexcept { return dates_; }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  double operator()(std::size_t i, std::size_t t) const {
    return values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t));
  }

  std::size_t missing_count() const;
  /// Columns with at least one observed value.
  std::size_t observed_times() const;
  /// Same panel restricted to the columns [first, first + count).
  TimeSeriesPanel slice(std::size_t first, std::size_t count) const;

 private:
  std::vector<std::string> labels_;
  std::vector<Date> dates_;
  Eigen::MatrixXd values_;
};

/// Synthetic weekly index starting at `start`.
std::vector<Date> weekly_dates(Date start, std::size_t count);

struct DateInterval {
  Date start;
  Date end;  // inclusive
};

struct PhaseSpec {
  std::string name;
  std::vector<DateInterval> intervals;
};

/// Throws InvalidInput unless intervals are non-empty, ordered and disjoint.
void validate_phase_spec(const PhaseSpec& spec);

struct CumulativeWarning {
  std::string node;
  Date week_end;
  double drop = 0.0;  // previous minus current cumulative value
};

struct WeeklyIncidence {
  TimeSeriesPanel panel;
  std::vector<CumulativeWarning> warnings;
};

struct BoxCoxProfile {
  std::vector<double> lambda_grid;
  std::vector<double> loglik;
  double lambda_hat = 1.0;
  /// Constant added before profiling; zero when the data were already positive.
  double shift = 0.0;
};

/// Rows `date,node,value`; empty value = missing. Nodes sorted lexicographically.
TimeSeriesPanel ingest_long_csv(std::istream& in);

/// Weekly incidence from daily cumulative counts. Weeks end on the weekday of
/// the first date; the first week end is its own baseline (incidence 0).
/// Decreases larger than `tolerance` are kept as-is and reported.
WeeklyIncidence weekly_from_cumulative(const TimeSeriesPanel& daily, double tolerance = 0.0);

/// Centered moving average of width `window` applied inside `interval`.
/// Windows are truncated at the interval ends; for even widths the window
/// spans t - window/2 .. t + window/2 - 1.
TimeSeriesPanel rolling_average(const TimeSeriesPanel& panel, std::size_t window, DateInterval interval);

TimeSeriesPanel difference(const TimeSeriesPanel& panel, std::size_t lag = 1);

/// Restricts to the span of the phase intervals; dates outside every interval
/// stay in the index but become fully missing.
TimeSeriesPanel split_phases(const TimeSeriesPanel& panel, const PhaseSpec& spec);

std::vector<double> default_lambda_grid();

/// Gaussian profile log-likelihood of the Box-Cox transform over the grid.
/// Data with min <= 0 are shifted by 1 - min first.
BoxCoxProfile boxcox_profile(std::span<const double> series, std::span<const double> lambda_grid);

/// Observed values of a panel in row-major order, skipping missing cells.
std::vector<double> observed_values(const TimeSeriesPanel& panel);

}  // namespace gnar
