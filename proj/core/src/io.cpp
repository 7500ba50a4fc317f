#include "gnar/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>

#include <fmt/format.h>

#include "gnar/error.hpp"

namespace gnar {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// RFC 4180 fields; quotes are only needed for labels containing commas.
std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        field += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back(trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  out.emplace_back(trim(field));
  return out;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  bool next(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (trim(line).empty() || line[0] == '#') continue;
      fields = split_csv(line);
      return true;
    }
    return false;
  }
  std::size_t line() const noexcept { return line_no_; }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

double parse_double(std::string_view s, std::size_t line, std::string_view what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorKind::InvalidInput, fmt::format("line {}: cannot parse {} '{}'", line, what, s));
  }
  return v;
}

double parse_cell(std::string_view s, std::size_t line) {
  if (s.empty() || s == "NA" || s == "NaN" || s == "nan") return kMissing;
  const double v = parse_double(s, line, "value");
  if (!std::isfinite(v)) fail(ErrorKind::InvalidInput, fmt::format("line {}: non-finite value '{}'", line, s));
  return v;
}

Json number_or_null(double v) { return is_missing(v) || !std::isfinite(v) ? Json(nullptr) : Json(v); }

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(number_or_null(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

Json to_json(const RunMetadata& meta) {
  return Json{{"tool", "gnar"}, {"version", meta.version}, {"command", meta.command_line}, {"seed", meta.seed}};
}

std::string csv_preamble(const RunMetadata& meta) {
  return fmt::format("# gnar {}\n# command: {}\n# seed: {}\n", meta.version, meta.command_line, meta.seed);
}

std::string format_number(double v) {
  if (is_missing(v)) return {};
  return fmt::format("{}", v);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::InvalidInput, fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
  }
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) fail(ErrorKind::Io, fmt::format("cannot create '{}': {}", path.parent_path().string(), ec.message()));
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, fmt::format("cannot write '{}'", tmp.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) fail(ErrorKind::Io, fmt::format("short write to '{}'", tmp.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorKind::Io, fmt::format("cannot move output into '{}'", path.string()));
  }
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

// Inputs

std::vector<GeoPoint> read_points_csv(std::istream& in) {
  CsvReader csv(in);
  std::vector<std::string> f;
  if (!csv.next(f)) fail(ErrorKind::InvalidInput, "points file is empty");
  const bool with_pop = f.size() == 4 && f[3] == "population";
  if (f.size() < 3 || f[0] != "node" || f[1] != "lat" || f[2] != "lon" || (f.size() == 4 && !with_pop) || f.size() > 4) {
    fail(ErrorKind::InvalidInput, "points file needs header node,lat,lon[,population]");
  }
  std::vector<GeoPoint> points;
  while (csv.next(f)) {
    if (f.size() != (with_pop ? 4U : 3U)) fail(ErrorKind::InvalidInput, fmt::format("line {}: wrong field count", csv.line()));
    GeoPoint p;
    p.node_id = f[0];
    p.lat_deg = parse_double(f[1], csv.line(), "latitude");
    p.lon_deg = parse_double(f[2], csv.line(), "longitude");
    if (with_pop && !f[3].empty()) p.population = parse_double(f[3], csv.line(), "population");
    points.push_back(std::move(p));
  }
  validate_points(points);
  return points;
}

std::vector<std::pair<std::string, std::string>> read_edgelist_csv(std::istream& in) {
  CsvReader csv(in);
  std::vector<std::string> f;
  if (!csv.next(f) || f.size() != 2 || f[0] != "from" || f[1] != "to") {
    fail(ErrorKind::InvalidInput, "edge list needs header from,to");
  }
  std::vector<std::pair<std::string, std::string>> edges;
  while (csv.next(f)) {
    if (f.size() != 2 || f[0].empty() || f[1].empty()) {
      fail(ErrorKind::InvalidInput, fmt::format("line {}: expected two node labels", csv.line()));
    }
    edges.emplace_back(f[0], f[1]);
  }
  return edges;
}

std::vector<std::string> read_node_list_csv(std::istream& in) {
  CsvReader csv(in);
  std::vector<std::string> f;
  if (!csv.next(f)) fail(ErrorKind::InvalidInput, "node list is empty");
  std::vector<std::string> nodes;
  while (csv.next(f)) {
    if (!f[0].empty()) nodes.push_back(f[0]);
  }
  return nodes;
}

TimeSeriesPanel read_wide_csv(std::istream& in) {
  CsvReader csv(in);
  std::vector<std::string> f;
  if (!csv.next(f) || f.empty() || f[0] != "date") fail(ErrorKind::InvalidInput, "wide CSV must start with a 'date' column");
  std::vector<std::string> labels(f.begin() + 1, f.end());
  std::vector<Date> dates;
  std::vector<double> cells;
  while (csv.next(f)) {
    if (f.size() != labels.size() + 1) {
      fail(ErrorKind::InvalidInput, fmt::format("line {}: expected {} fields, got {}", csv.line(), labels.size() + 1, f.size()));
    }
    dates.push_back(parse_date(f[0]));
    for (std::size_t k = 1; k < f.size(); ++k) cells.push_back(parse_cell(f[k], csv.line()));
  }
  const auto n = static_cast<Eigen::Index>(labels.size());
  const auto T = static_cast<Eigen::Index>(dates.size());
  Eigen::MatrixXd values(n, T);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index i = 0; i < n; ++i) values(i, t) = cells[static_cast<std::size_t>(t * n + i)];
  }
  return TimeSeriesPanel(std::move(labels), std::move(dates), std::move(values));
}

void write_wide_csv(std::ostream& out, const TimeSeriesPanel& panel) {
  out << "date";
  for (const auto& l : panel.labels()) out << ',' << csv_field(l);
  out << '\n';
  for (std::size_t t = 0; t < panel.times(); ++t) {
    out << format_date(panel.dates()[t]);
    for (std::size_t i = 0; i < panel.nodes(); ++i) out << ',' << format_number(panel(i, t));
    out << '\n';
  }
}

// JSON documents

Json graph_to_json(const Graph& g) {
  Json edges = Json::array();
  for (const auto& [a, b] : g.edges()) edges.push_back({a, b});
  return Json{{"labels", g.labels()}, {"edges", std::move(edges)}};
}

Graph graph_from_json(const Json& j) {
  try {
    auto labels = j.at("labels").get<std::vector<std::string>>();
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) fail(ErrorKind::InvalidInput, "graph edges must be [i, j] pairs");
      edges.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>());
    }
    return Graph(std::move(labels), std::move(edges));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::InvalidInput, fmt::format("malformed graph JSON: {}", e.what()));
  }
}

Json phase_to_json(const PhaseSpec& spec) {
  Json intervals = Json::array();
  for (const auto& iv : spec.intervals) intervals.push_back({format_date(iv.start), format_date(iv.end)});
  return Json{{"name", spec.name}, {"intervals", std::move(intervals)}};
}

PhaseSpec phase_from_json(const Json& j) {
  try {
    PhaseSpec spec;
    spec.name = j.at("name").get<std::string>();
    for (const auto& iv : j.at("intervals")) {
      if (!iv.is_array() || iv.size() != 2) fail(ErrorKind::InvalidInput, "phase intervals must be [start, end] pairs");
      spec.intervals.push_back({parse_date(iv[0].get<std::string>()), parse_date(iv[1].get<std::string>())});
    }
    validate_phase_spec(spec);
    return spec;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::InvalidInput, fmt::format("malformed phase JSON: {}", e.what()));
  }
}

Json fit_to_json(const GnarFit& fit) {
  Json beta = Json::array();
  for (const auto& lag : fit.beta) beta.push_back(lag);
  Json coefficients = Json::array();
  for (std::size_t k = 0; k < fit.column_names.size(); ++k) {
    const auto e = static_cast<Eigen::Index>(k);
    coefficients.push_back(
        {{"name", fit.column_names[k]}, {"estimate", fit.gamma(e)}, {"std_error", number_or_null(fit.std_errors(e))}});
  }
  Json j{{"order", to_string(fit.spec.order)},
         {"stages", fit.spec.order.stages},
         {"global_alpha", fit.spec.global_alpha},
         {"scheme", to_string(fit.spec.scheme.kind)},
         {"estimator", fit.estimator == Estimator::Egls ? "egls" : "ols"},
         {"labels", fit.labels},
         {"alpha", matrix_to_json(fit.alpha)},
         {"beta", std::move(beta)},
         {"sigma2", fit.sigma2},
         {"loglik", fit.loglik},
         {"bic", fit.bic},
         {"aic", fit.aic},
         {"n_obs", fit.n_obs},
         {"M", fit.M},
         {"coefficients", std::move(coefficients)}};
  if (fit.estimator == Estimator::Egls) j["sigma_fallback"] = fit.sigma_fallback;
  return j;
}

Json selection_to_json(const SelectionReport& report) {
  Json rows = Json::array();
  for (std::size_t k = 0; k < report.candidates.size(); ++k) {
    const auto& c = report.candidates[k];
    Json row{{"rank", c.fitted ? Json(k + 1) : Json(nullptr)},
             {"order", to_string(c.order)},
             {"scheme", to_string(c.scheme)},
             {"status", c.status}};
    if (c.fitted) {
      row["bic"] = c.bic;
      row["aic"] = c.aic;
      row["loglik"] = c.loglik;
      row["M"] = c.M;
      row["n_obs"] = c.n_obs;
    } else {
      row["reason"] = c.reason;
    }
    rows.push_back(std::move(row));
  }
  Json j{{"criterion", to_string(report.criterion)},
         {"alignment", to_string(report.alignment)},
         {"first_time", report.first_time},
         {"mixed_n_obs", report.mixed_n_obs},
         {"best", to_string(report.candidates[report.best].order)},
         {"candidates", std::move(rows)}};
  if (report.best_fit) j["best_fit"] = fit_to_json(*report.best_fit);
  return j;
}

Json moran_to_json(const MoranResult& r) {
  Json skipped = Json::array();
  for (auto d : r.skipped) skipped.push_back(format_date(d));
  std::size_t outside = 0;
  for (bool b : r.outside) outside += b ? 1 : 0;
  return Json{{"N_m", r.N_m},        {"tested", r.dates.size()}, {"outside", outside},
              {"R", r.R},            {"seed", r.seed},           {"rank_based", r.rank_based},
              {"skipped", skipped}};
}

Json tests_to_json(std::span<const NodeTest> tests) {
  Json out = Json::array();
  for (const auto& t : tests) {
    Json row{{"node", t.node}, {"status", t.status}};
    if (t.result) {
      row["statistic"] = t.result->statistic;
      row["p_value"] = t.result->p_value;
      row["n"] = t.result->n;
      if (t.result->lags > 0) row["lags"] = t.result->lags;
    }
    out.push_back(std::move(row));
  }
  return out;
}

Json ar_baseline_to_json(const ArBaseline& b) {
  Json nodes = Json::array();
  for (const auto& n : b.nodes) {
    Json row{{"node", n.node}, {"status", n.status}};
    if (n.ok) {
      row["order"] = n.order;
      row["coefficients"] = n.coefficients;
      row["sigma2"] = n.sigma2;
      row["bic"] = n.bic;
      row["n_obs"] = n.n_obs;
    }
    nodes.push_back(std::move(row));
  }
  return Json{{"p_max", b.p_max}, {"nodes", std::move(nodes)}};
}

// CSV tables

void write_selection_csv(std::ostream& out, const SelectionReport& report) {
  out << "rank,order,scheme,status,bic,aic,loglik,M,n_obs\n";
  for (std::size_t k = 0; k < report.candidates.size(); ++k) {
    const auto& c = report.candidates[k];
    if (c.fitted) {
      out << fmt::format("{},{},{},{},{},{},{},{},{}\n", k + 1, to_string(c.order), to_string(c.scheme), c.status,
                         format_number(c.bic), format_number(c.aic), format_number(c.loglik), c.M, c.n_obs);
    } else {
      out << fmt::format(",{},{},{},,,,,\n", to_string(c.order), to_string(c.scheme), c.status);
    }
  }
}

void write_moran_csv(std::ostream& out, const MoranResult& r) {
  out << "date,I,lower,median,upper,outside\n";
  for (std::size_t k = 0; k < r.dates.size(); ++k) {
    out << fmt::format("{},{},{},{},{},{}\n", format_date(r.dates[k]), format_number(r.I[k]), format_number(r.lower[k]),
                       format_number(r.median[k]), format_number(r.upper[k]), r.outside[k] ? 1 : 0);
  }
}

void write_summary_csv(std::ostream& out, std::string_view name, const NetworkSummary& s) {
  out << "network,nodes,edges,avg_degree,avg_spl,avg_local_clustering,disconnected_fraction,"
         "brg_avg_spl,brg_avg_clustering,brg_disconnected_fraction,brg_samples,seed\n";
  out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", csv_field(name), s.nodes, s.edges,
                     format_number(s.avg_degree), format_number(s.avg_spl), format_number(s.avg_local_clustering),
                     format_number(s.disconnected_fraction), format_number(s.brg_avg_spl),
                     format_number(s.brg_avg_clustering), format_number(s.brg_disconnected_fraction), s.brg_samples,
                     s.seed);
}

void write_forecast_csv(std::ostream& out, std::span<const std::string> labels, std::span<const Date> dates,
                        const Eigen::MatrixXd& predicted, const Eigen::MatrixXd* actual) {
  out << (actual ? "node,date,predicted,actual\n" : "node,date,predicted\n");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t t = 0; t < dates.size(); ++t) {
      const auto a = static_cast<Eigen::Index>(i);
      const auto b = static_cast<Eigen::Index>(t);
      out << csv_field(labels[i]) << ',' << format_date(dates[t]) << ',' << format_number(predicted(a, b));
      if (actual) out << ',' << format_number((*actual)(a, b));
      out << '\n';
    }
  }
}

void write_mase_csv(std::ostream& out, std::span<const std::string> labels, std::span<const Date> dates,
                    const MaseResult& result) {
  out << "node,date,scaled_error,node_mean,node_sd\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& n = result.nodes[i];
    for (std::size_t t = 0; t < dates.size(); ++t) {
      out << fmt::format("{},{},{},{},{}\n", csv_field(labels[i]), format_date(dates[t]),
                         format_number(n.scaled_errors[t]), format_number(n.mean), format_number(n.sd));
    }
  }
}

}  // namespace gnar
