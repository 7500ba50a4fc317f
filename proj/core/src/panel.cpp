#include "gnar/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <set>

#include <fmt/format.h>

#include "gnar/error.hpp"

namespace gnar {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_value(std::string_view s, std::size_t line_no) {
  if (s.empty() || s == "NA" || s == "NaN") return kMissing;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    fail(ErrorKind::InvalidInput, fmt::format("line {}: cannot parse value '{}'", line_no, s));
  }
  return v;
}

std::vector<std::size_t> columns_within(const TimeSeriesPanel& panel, DateInterval interval) {
  std::vector<std::size_t> cols;
  for (std::size_t t = 0; t < panel.times(); ++t) {
    if (panel.dates()[t] >= interval.start && panel.dates()[t] <= interval.end) cols.push_back(t);
  }
  return cols;
}

}  // namespace

Date parse_date(std::string_view text) {
  text = trim(text);
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  bool ok = text.size() == 10 && text[4] == '-' && text[7] == '-';
  if (ok) {
    ok = std::from_chars(text.data(), text.data() + 4, y).ec == std::errc() &&
         std::from_chars(text.data() + 5, text.data() + 7, m).ec == std::errc() &&
         std::from_chars(text.data() + 8, text.data() + 10, d).ec == std::errc();
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ok || !ymd.ok()) fail(ErrorKind::InvalidInput, fmt::format("invalid ISO date '{}'", text));
  return Date(ymd);
}

std::string format_date(Date d) {
  const std::chrono::year_month_day ymd(d);
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

TimeSeriesPanel::TimeSeriesPanel(std::vector<std::string> labels, std::vector<Date> dates, Eigen::MatrixXd values)
    : labels_(std::move(labels)), dates_(std::move(dates)), values_(std::move(values)) {
  if (static_cast<std::size_t>(values_.rows()) != labels_.size() ||
      static_cast<std::size_t>(values_.cols()) != dates_.size()) {
    fail(ErrorKind::InvalidInput,
         fmt::format("panel values are {}x{} but there are {} labels and {} dates", values_.rows(), values_.cols(),
                     labels_.size(), dates_.size()));
  }
  for (std::size_t t = 1; t < dates_.size(); ++t) {
    if (dates_[t] <= dates_[t - 1]) {
      fail(ErrorKind::InvalidInput, fmt::format("dates not strictly increasing at {}", format_date(dates_[t])));
    }
  }
  std::set<std::string> seen;
  for (const auto& l : labels_) {
    if (!seen.insert(l).second) fail(ErrorKind::InvalidInput, fmt::format("duplicate node '{}'", l));
  }
}

std::size_t TimeSeriesPanel::missing_count() const {
  return static_cast<std::size_t>(values_.unaryExpr([](double v) { return is_missing(v) ? 1.0 : 0.0; }).sum());
}

std::size_t TimeSeriesPanel::observed_times() const {
  std::size_t count = 0;
  for (Eigen::Index t = 0; t < values_.cols(); ++t) {
    bool any = false;
    for (Eigen::Index i = 0; i < values_.rows() && !any; ++i) any = !is_missing(values_(i, t));
    count += any ? 1 : 0;
  }
  return count;
}

TimeSeriesPanel TimeSeriesPanel::slice(std::size_t first, std::size_t count) const {
  if (first + count > times()) fail(ErrorKind::InvalidInput, "panel slice out of range");
  std::vector<Date> d(dates_.begin() + static_cast<std::ptrdiff_t>(first),
                      dates_.begin() + static_cast<std::ptrdiff_t>(first + count));
  return TimeSeriesPanel(labels_, std::move(d),
                         values_.middleCols(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count)));
}

std::vector<Date> weekly_dates(Date start, std::size_t count) {
  std::vector<Date> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(start + std::chrono::days{7 * static_cast<int>(k)});
  return out;
}

void validate_phase_spec(const PhaseSpec& spec) {
  if (spec.intervals.empty()) fail(ErrorKind::InvalidInput, fmt::format("phase '{}' has no intervals", spec.name));
  for (std::size_t k = 0; k < spec.intervals.size(); ++k) {
    const auto& iv = spec.intervals[k];
    if (iv.end < iv.start) {
      fail(ErrorKind::InvalidInput, fmt::format("phase '{}': interval {} ends before it starts", spec.name, k + 1));
    }
    if (k > 0 && iv.start <= spec.intervals[k - 1].end) {
      fail(ErrorKind::InvalidInput, fmt::format("phase '{}': interval {} overlaps or precedes interval {}", spec.name,
                                                k + 1, k));
    }
  }
}

TimeSeriesPanel ingest_long_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty() && line[0] != '#') break;
  }
  const auto header = split_csv(line);
  if (header.size() != 3 || header[0] != "date" || header[1] != "node" || header[2] != "value") {
    fail(ErrorKind::InvalidInput, "long CSV must start with header 'date,node,value'");
  }

  std::map<std::pair<Date, std::string>, double> cells;
  std::set<Date> dates;
  std::set<std::string> nodes;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || line[0] == '#') continue;
    const auto f = split_csv(line);
    if (f.size() != 3) fail(ErrorKind::InvalidInput, fmt::format("line {}: expected 3 fields", line_no));
    const Date d = parse_date(f[0]);
    std::string node(f[1]);
    if (node.empty()) fail(ErrorKind::InvalidInput, fmt::format("line {}: empty node", line_no));
    const double v = parse_value(f[2], line_no);
    dates.insert(d);
    nodes.insert(node);
    const auto [it, inserted] = cells.emplace(std::make_pair(d, node), v);
    if (!inserted) {
      const double prev = it->second;
      const bool same = (is_missing(prev) && is_missing(v)) || prev == v;
      if (!same) {
        fail(ErrorKind::DataIntegrity,
             fmt::format("conflicting values for date {} node '{}' (line {})", format_date(d), node, line_no));
      }
    }
  }

  std::vector<std::string> labels(nodes.begin(), nodes.end());
  std::vector<Date> index(dates.begin(), dates.end());
  Eigen::MatrixXd values = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(labels.size()),
                                                     static_cast<Eigen::Index>(index.size()), kMissing);
  for (const auto& [key, v] : cells) {
    const auto i = std::lower_bound(labels.begin(), labels.end(), key.second) - labels.begin();
    const auto t = std::lower_bound(index.begin(), index.end(), key.first) - index.begin();
    values(i, t) = v;
  }
  return TimeSeriesPanel(std::move(labels), std::move(index), std::move(values));
}

WeeklyIncidence weekly_from_cumulative(const TimeSeriesPanel& daily, double tolerance) {
  if (daily.times() == 0) fail(ErrorKind::InvalidInput, "empty daily panel");
  const Date first = daily.dates().front();
  const Date last = daily.dates().back();
  std::vector<Date> ends;
  for (Date d = first; d <= last; d += std::chrono::days{7}) ends.push_back(d);

  const auto n = static_cast<Eigen::Index>(daily.nodes());
  const auto w = static_cast<Eigen::Index>(ends.size());
  // Cumulative level at each week end: latest observation in (previous end, end].
  Eigen::MatrixXd level = Eigen::MatrixXd::Constant(n, w, kMissing);
  std::size_t t = 0;
  for (Eigen::Index k = 0; k < w; ++k) {
    while (t < daily.times() && daily.dates()[t] <= ends[static_cast<std::size_t>(k)]) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double v = daily(static_cast<std::size_t>(i), t);
        if (!is_missing(v)) level(i, k) = v;
      }
      ++t;
    }
  }

  WeeklyIncidence out;
  Eigen::MatrixXd inc = Eigen::MatrixXd::Constant(n, w, kMissing);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!is_missing(level(i, 0))) inc(i, 0) = 0.0;
    for (Eigen::Index k = 1; k < w; ++k) {
      if (is_missing(level(i, k)) || is_missing(level(i, k - 1))) continue;
      inc(i, k) = level(i, k) - level(i, k - 1);
      if (inc(i, k) < -tolerance) {
        out.warnings.push_back({daily.labels()[static_cast<std::size_t>(i)], ends[static_cast<std::size_t>(k)],
                                -inc(i, k)});
      }
    }
  }
  out.panel = TimeSeriesPanel(daily.labels(), std::move(ends), std::move(inc));
  return out;
}

TimeSeriesPanel rolling_average(const TimeSeriesPanel& panel, std::size_t window, DateInterval interval) {
  if (window == 0) fail(ErrorKind::InvalidInput, "window must be at least 1");
  const auto cols = columns_within(panel, interval);
  if (cols.empty()) fail(ErrorKind::InvalidInput, "smoothing interval contains no panel dates");
  if (window > cols.size()) {
    fail(ErrorKind::InvalidInput, fmt::format("window {} exceeds interval length {}", window, cols.size()));
  }
  const auto before = static_cast<std::ptrdiff_t>(window / 2);
  const auto after = static_cast<std::ptrdiff_t>(window) - before - 1;
  const auto len = static_cast<std::ptrdiff_t>(cols.size());

  Eigen::MatrixXd out = panel.values();
  for (std::size_t i = 0; i < panel.nodes(); ++i) {
    for (std::ptrdiff_t c = 0; c < len; ++c) {
      const double centre = panel(i, cols[static_cast<std::size_t>(c)]);
      if (is_missing(centre)) continue;
      double sum = 0.0;
      int count = 0;
      for (std::ptrdiff_t k = std::max<std::ptrdiff_t>(0, c - before); k <= std::min(len - 1, c + after); ++k) {
        const double v = panel(i, cols[static_cast<std::size_t>(k)]);
        if (is_missing(v)) continue;
        sum += v;
        ++count;
      }
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(cols[static_cast<std::size_t>(c)])) =
          sum / count;
    }
  }
  return TimeSeriesPanel(panel.labels(), panel.dates(), std::move(out));
}

TimeSeriesPanel difference(const TimeSeriesPanel& panel, std::size_t lag) {
  if (lag == 0 || lag >= panel.times()) {
    fail(ErrorKind::InvalidInput, fmt::format("lag {} invalid for {} time points", lag, panel.times()));
  }
  const auto l = static_cast<Eigen::Index>(lag);
  const auto t_out = static_cast<Eigen::Index>(panel.times()) - l;
  const Eigen::MatrixXd& x = panel.values();
  // NaN propagates through subtraction, so missing operands stay missing.
  Eigen::MatrixXd out = x.rightCols(t_out) - x.leftCols(t_out);
  std::vector<Date> dates(panel.dates().begin() + static_cast<std::ptrdiff_t>(lag), panel.dates().end());
  return TimeSeriesPanel(panel.labels(), std::move(dates), std::move(out));
}

TimeSeriesPanel split_phases(const TimeSeriesPanel& panel, const PhaseSpec& spec) {
  validate_phase_spec(spec);
  const DateInterval span{spec.intervals.front().start, spec.intervals.back().end};
  const auto cols = columns_within(panel, span);
  std::vector<Date> dates;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(panel.nodes()), static_cast<Eigen::Index>(cols.size()));
  bool any_inside = false;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const Date d = panel.dates()[cols[c]];
    dates.push_back(d);
    const bool inside = std::any_of(spec.intervals.begin(), spec.intervals.end(),
                                    [&](const DateInterval& iv) { return d >= iv.start && d <= iv.end; });
    any_inside = any_inside || inside;
    for (std::size_t i = 0; i < panel.nodes(); ++i) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = inside ? panel(i, cols[c]) : kMissing;
    }
  }
  if (!any_inside) fail(ErrorKind::InvalidInput, fmt::format("phase '{}' does not intersect the panel", spec.name));
  return TimeSeriesPanel(panel.labels(), std::move(dates), std::move(out));
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  for (int k = -200; k <= 300; ++k) grid.push_back(k / 100.0);
  return grid;
}

BoxCoxProfile boxcox_profile(std::span<const double> series, std::span<const double> lambda_grid) {
  if (lambda_grid.empty()) fail(ErrorKind::InvalidInput, "empty lambda grid");
  std::vector<double> x;
  for (double v : series) {
    if (!is_missing(v)) x.push_back(v);
  }
  if (x.size() < 3) fail(ErrorKind::InvalidInput, "Box-Cox profile needs at least 3 observations");
  BoxCoxProfile profile;
  const double lo = *std::min_element(x.begin(), x.end());
  if (lo <= 0.0) {
    profile.shift = 1.0 - lo;
    for (double& v : x) v += profile.shift;
  }
  for (double v : x) {
    if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorKind::InvalidInput, "Box-Cox requires positive finite values");
  }

  const auto n = static_cast<double>(x.size());
  double sum_log = 0.0;
  for (double v : x) sum_log += std::log(v);

  std::vector<double> y(x.size());
  profile.lambda_grid.assign(lambda_grid.begin(), lambda_grid.end());
  for (double lambda : lambda_grid) {
    for (std::size_t k = 0; k < x.size(); ++k) {
      y[k] = std::fabs(lambda) < 1e-12 ? std::log(x[k]) : (std::pow(x[k], lambda) - 1.0) / lambda;
    }
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : y) ss += (v - mean) * (v - mean);
    const double var = ss / n;
    const double ll = var > 0.0 ? -0.5 * n * std::log(var) + (lambda - 1.0) * sum_log
                                : -std::numeric_limits<double>::infinity();
    profile.loglik.push_back(ll);
  }
  const auto best = std::max_element(profile.loglik.begin(), profile.loglik.end()) - profile.loglik.begin();
  profile.lambda_hat = profile.lambda_grid[static_cast<std::size_t>(best)];
  return profile;
}

std::vector<double> observed_values(const TimeSeriesPanel& panel) {
  std::vector<double> out;
  for (std::size_t i = 0; i < panel.nodes(); ++i) {
    for (std::size_t t = 0; t < panel.times(); ++t) {
      if (!is_missing(panel(i, t))) out.push_back(panel(i, t));
    }
  }
  return out;
}

}  // namespace gnar
