#include <cmath>
#include <random>
#include <sstream>

#include <doctest.h>

#include <gnar/error.hpp>
#include <gnar/io.hpp>
#include <gnar/panel.hpp>

using namespace gnar;

namespace {

TimeSeriesPanel row_panel(const std::vector<double>& v, Date start = parse_date("2021-01-04"), int step = 7) {
  std::vector<Date> dates;
  for (std::size_t t = 0; t < v.size(); ++t) dates.push_back(start + std::chrono::days(step * static_cast<int>(t)));
  Eigen::MatrixXd m(1, static_cast<Eigen::Index>(v.size()));
  for (std::size_t t = 0; t < v.size(); ++t) m(0, static_cast<Eigen::Index>(t)) = v[t];
  return {{"a"}, dates, m};
}

std::vector<double> row(const TimeSeriesPanel& p, std::size_t i = 0) {
  std::vector<double> out;
  for (std::size_t t = 0; t < p.times(); ++t) out.push_back(p(i, t));
  return out;
}

// Box-Cox log-likelihood up to a constant, written out term by term.
long double boxcox_oracle(const std::vector<double>& x, double lambda) {
  long double sum_log = 0.0L, mean = 0.0L;
  std::vector<long double> y;
  for (double v : x) {
    sum_log += std::log(static_cast<long double>(v));
    y.push_back(lambda == 0.0 ? std::log(static_cast<long double>(v))
                              : (std::pow(static_cast<long double>(v), lambda) - 1.0L) / lambda);
  }
  for (auto v : y) mean += v;
  mean /= y.size();
  long double ss = 0.0L;
  for (auto v : y) ss += (v - mean) * (v - mean);
  return -0.5L * y.size() * std::log(ss / y.size()) + (lambda - 1.0L) * sum_log;
}

}  // namespace

TEST_SUITE("panel") {

TEST_CASE("dates") {
  CHECK(format_date(parse_date("2020-02-29")) == "2020-02-29");
  CHECK_THROWS_AS(parse_date("2021-02-29"), Error);
  CHECK_THROWS_AS(parse_date("2021-13-01"), Error);
  CHECK_THROWS_AS(parse_date("21-01-01"), Error);
}

TEST_CASE("panel construction enforces its invariants") {
  const auto d = weekly_dates(parse_date("2021-01-04"), 3);
  CHECK_THROWS_AS(TimeSeriesPanel({"a"}, d, Eigen::MatrixXd::Zero(2, 3)), Error);
  CHECK_THROWS_AS(TimeSeriesPanel({"a"}, {d[1], d[0], d[2]}, Eigen::MatrixXd::Zero(1, 3)), Error);
  CHECK_THROWS_AS(TimeSeriesPanel({"a", "a"}, d, Eigen::MatrixXd::Zero(2, 3)), Error);
}

TEST_CASE("ingest long csv") {
  std::istringstream dense("date,node,value\n2021-01-04,b,1\n2021-01-04,a,2\n2021-01-11,a,3\n2021-01-11,b,4\n"
                           "2021-01-18,a,5\n2021-01-18,b,6\n");
  const auto p = ingest_long_csv(dense);
  CHECK(p.nodes() == 2);
  CHECK(p.times() == 3);
  CHECK(p.labels() == std::vector<std::string>{"a", "b"});
  CHECK(p(0, 0) == 2.0);
  CHECK(p(1, 2) == 6.0);
  CHECK(p.missing_count() == 0);

  std::istringstream gap("date,node,value\n2021-01-04,a,1\n2021-01-04,b,1\n2021-01-11,a,2\n");
  CHECK(ingest_long_csv(gap).missing_count() == 1);

  std::istringstream conflict("date,node,value\n2021-01-04,a,1\n2021-01-04,a,2\n");
  try {
    ingest_long_csv(conflict);
    FAIL("expected a data-integrity error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DataIntegrity);
    CHECK(std::string(e.what()).find("2021-01-04") != std::string::npos);
    CHECK(std::string(e.what()).find('a') != std::string::npos);
  }
}

TEST_CASE("weekly incidence") {
  const auto start = parse_date("2021-03-01");
  const auto step = row_panel({0, 0, 0, 0, 0, 0, 0, 7, 7, 7, 7, 7, 7, 7}, start, 1);
  CHECK(row(weekly_from_cumulative(step).panel) == std::vector<double>{0, 7});

  const auto flat = weekly_from_cumulative(row_panel(std::vector<double>(21, 5.0), start, 1));
  for (double v : row(flat.panel)) CHECK(v == 0.0);

  std::vector<double> ramp{0, 1, 3, 6, 10, 15, 21, 28};
  ramp.resize(15, 28.0);
  const auto w = weekly_from_cumulative(row_panel(ramp, start, 1));
  CHECK(w.panel(0, 1) == 28.0);
  CHECK(w.panel(0, 2) == 0.0);
  CHECK(w.warnings.empty());
}

TEST_CASE("weekly incidence sums to the cumulative change") {
  std::mt19937_64 rng(4);
  std::poisson_distribution<int> daily(3.0);
  std::vector<double> cum{5.0};
  for (int k = 1; k < 7 * 20 + 1; ++k) cum.push_back(cum.back() + daily(rng));
  const auto w = weekly_from_cumulative(row_panel(cum, parse_date("2021-03-01"), 1));
  double total = 0.0;
  for (double v : row(w.panel)) total += v;
  CHECK(total == cum.back() - cum.front());
}

TEST_CASE("decreasing cumulative counts are kept and reported") {
  std::vector<double> cum{0, 1, 2, 3, 4, 5, 6, 10, 10, 10, 10, 10, 10, 10, 8};
  const auto w = weekly_from_cumulative(row_panel(cum, parse_date("2021-03-01"), 1));
  REQUIRE(w.warnings.size() == 1);
  CHECK(w.warnings[0].drop == 2.0);
  CHECK(w.panel(0, 2) == -2.0);
  CHECK(weekly_from_cumulative(row_panel(cum, parse_date("2021-03-01"), 1), 2.0).warnings.empty());
}

TEST_CASE("rolling average") {
  const auto p = row_panel({0, 4, 8, 4, 0});
  const DateInterval all{p.dates().front(), p.dates().back()};
  CHECK(row(rolling_average(p, 1, all)) == row(p));

  const auto s = row(rolling_average(p, 3, all));
  CHECK(s[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(s[1] == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(s[2] == doctest::Approx(16.0 / 3.0).epsilon(1e-15));
  CHECK(s[3] == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(s[4] == doctest::Approx(2.0).epsilon(1e-15));

  const auto c = row_panel(std::vector<double>(9, 3.5));
  for (double v : row(rolling_average(c, 4, {c.dates().front(), c.dates().back()}))) CHECK(v == 3.5);

  // Only the interval changes.
  const auto inner = row(rolling_average(p, 3, {p.dates()[1], p.dates()[3]}));
  CHECK(inner[0] == 0.0);
  CHECK(inner[4] == 0.0);
  CHECK(inner[1] == doctest::Approx(6.0));

  CHECK_THROWS_AS(rolling_average(p, 6, all), Error);
  CHECK_THROWS_AS(rolling_average(p, 0, all), Error);
}

TEST_CASE("differencing") {
  CHECK(row(difference(row_panel({1, 3, 2, 5}), 1)) == std::vector<double>{2, -1, 3});
  for (double v : row(difference(row_panel({4, 4, 4, 4}), 1))) CHECK(v == 0.0);

  const auto d = difference(row_panel({1, kMissing, 2, 5, 7}), 1);
  CHECK(is_missing(d(0, 0)));
  CHECK(is_missing(d(0, 1)));
  CHECK(d(0, 2) == 3.0);

  const auto twice = difference(difference(row_panel({1, 3, 2, 5, 9}), 1), 1);
  CHECK(twice.times() == 3);
  CHECK(row(twice) == std::vector<double>{-3, 4, 1});

  CHECK_THROWS_AS(difference(row_panel({1, 2}), 2), Error);
}

TEST_CASE("phase splitting") {
  const auto p = row_panel({1, 2, 3, 4, 5, 6, 7, 8});
  const auto& d = p.dates();
  CHECK(row(split_phases(p, {"all", {{d.front(), d.back()}}})) == row(p));

  const PhaseSpec two{"two", {{d[0], d[2]}, {d[5], d[7]}}};
  const auto s = split_phases(p, two);
  CHECK(s.times() == 8);
  CHECK(is_missing(s(0, 3)));
  CHECK(is_missing(s(0, 4)));
  CHECK(s.observed_times() == 6);
  for (std::size_t t : {0, 1, 2, 5, 6, 7}) CHECK(s(0, t) == p(0, t));

  const PhaseSpec outside{"late", {{d.back() + std::chrono::days(7), d.back() + std::chrono::days(70)}}};
  CHECK_THROWS_AS(split_phases(p, outside), Error);

  const PhaseSpec overlap{"bad", {{d[0], d[3]}, {d[2], d[5]}}};
  CHECK_THROWS_AS(validate_phase_spec(overlap), Error);
}

TEST_CASE("restricted phases cover 45 weeks") {
  const auto spec = phase_from_json(read_json_file(GNAR_DATA_DIR "/phase_restricted.json"));
  // Weekly index over the full study period, week ends on Thursdays.
  const auto start = parse_date("2020-02-27");
  const auto dates = weekly_dates(start, 152);
  const TimeSeriesPanel full({"a", "b"}, dates, Eigen::MatrixXd::Ones(2, 152));
  CHECK(format_date(dates.back()) == "2023-01-19");
  CHECK(split_phases(full, spec).observed_times() == 45);

  const auto unrestricted = phase_from_json(read_json_file(GNAR_DATA_DIR "/phase_unrestricted.json"));
  CHECK(split_phases(full, unrestricted).observed_times() == 152 - 45);
}

TEST_CASE("Box-Cox profile matches the closed-form likelihood") {
  std::mt19937_64 rng(8);
  std::lognormal_distribution<double> ln(1.0, 0.5);
  std::vector<double> x(200);
  for (auto& v : x) v = ln(rng);
  const auto grid = default_lambda_grid();
  const auto prof = boxcox_profile(x, grid);
  const auto at1 = static_cast<std::size_t>(std::find(grid.begin(), grid.end(), 1.0) - grid.begin());
  for (std::size_t k = 0; k < grid.size(); k += 25) {
    const double expect = static_cast<double>(boxcox_oracle(x, grid[k]) - boxcox_oracle(x, 1.0));
    CHECK(prof.loglik[k] - prof.loglik[at1] == doctest::Approx(expect).epsilon(1e-8));
  }
  CHECK(prof.loglik[static_cast<std::size_t>(
            std::find(grid.begin(), grid.end(), prof.lambda_hat) - grid.begin())] ==
        *std::max_element(prof.loglik.begin(), prof.loglik.end()));
}

TEST_CASE("Box-Cox at lambda 1 is the untransformed Gaussian likelihood") {
  const std::vector<double> x{2.0, 3.0, 5.0, 7.0, 11.0};
  const std::vector<double> one{1.0};
  double mean = 0.0;
  for (double v : x) mean += v / 5.0;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean) / 5.0;
  CHECK(boxcox_profile(x, one).loglik[0] == doctest::Approx(-2.5 * std::log(var)).epsilon(1e-14));
}

TEST_CASE("Box-Cox estimates") {
  std::mt19937_64 rng(21);
  const auto grid = default_lambda_grid();

  std::normal_distribution<double> tight(100.0, 1.0);
  std::vector<double> x(1000);
  for (auto& v : x) v = tight(rng);
  const auto flat = boxcox_profile(x, grid);
  const auto at1 = static_cast<std::size_t>(std::find(grid.begin(), grid.end(), 1.0) - grid.begin());
  // Likelihood-ratio 95% set.
  CHECK(*std::max_element(flat.loglik.begin(), flat.loglik.end()) - flat.loglik[at1] < 1.92);

  std::normal_distribution<double> wide(10.0, 2.0);
  for (auto& v : x) v = wide(rng);
  CHECK(std::fabs(boxcox_profile(x, grid).lambda_hat - 1.0) <= 0.25);

  std::normal_distribution<double> z(0.0, 1.0);
  for (auto& v : x) v = std::exp(z(rng));
  CHECK(std::fabs(boxcox_profile(x, grid).lambda_hat) <= 0.25);
}

TEST_CASE("Box-Cox shifts nonpositive data") {
  const std::vector<double> x{-3.0, 0.0, 2.0, 4.0, 1.0};
  const auto prof = boxcox_profile(x, default_lambda_grid());
  CHECK(prof.shift == 4.0);
  const std::vector<double> bad{1.0, std::numeric_limits<double>::infinity(), 2.0};
  CHECK_THROWS_AS(boxcox_profile(bad, default_lambda_grid()), Error);
}

TEST_CASE("missing markers propagate and are never invented") {
  const auto p = row_panel({1, 2, kMissing, 4, 5, 6});
  const DateInterval all{p.dates().front(), p.dates().back()};
  CHECK(is_missing(rolling_average(p, 3, all)(0, 2)));
  const auto d = difference(p, 2);
  CHECK(is_missing(d(0, 0)));
  CHECK(is_missing(d(0, 2)));
  CHECK(observed_values(p).size() == 5);
}

}  // TEST_SUITE
