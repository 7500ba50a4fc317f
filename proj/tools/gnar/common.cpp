#include "common.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include <gnar/error.hpp>

namespace gnar::cli {

void Context::write_json(std::string_view file, const Json& body) {
  Json doc;
  doc["meta"] = to_json(meta());
  for (auto it = body.begin(); it != body.end(); ++it) doc[it.key()] = it.value();
  write_file_atomic(path(file), dump_json(doc));
  written.push_back(path(file).string());
}

void Context::write_csv(std::string_view file, const std::string& body) {
  write_file_atomic(path(file), csv_preamble(meta()) + body);
  written.push_back(path(file).string());
}

std::string csv_text(const std::function<void(std::ostream&)>& body) {
  std::ostringstream ss;
  body(ss);
  return ss.str();
}

Graph load_graph(const std::string& path) {
  if (std::filesystem::path(path).extension() == ".json") return graph_from_json(read_json_file(path));
  std::istringstream in(read_text_file(path));
  const auto edges = read_edgelist_csv(in);
  std::set<std::string> labels;
  for (const auto& [a, b] : edges) {
    labels.insert(a);
    labels.insert(b);
  }
  return build_from_edgelist({labels.begin(), labels.end()}, edges);
}

std::vector<GeoPoint> load_points(const std::string& path) {
  std::istringstream in(read_text_file(path));
  return read_points_csv(in);
}

TimeSeriesPanel load_panel(const std::string& path) {
  std::istringstream in(read_text_file(path));
  return read_wide_csv(in);
}

TimeSeriesPanel align_to_graph(const TimeSeriesPanel& panel, const Graph& g) {
  if (panel.labels() == g.labels()) return panel;
  if (panel.nodes() != g.size()) {
    fail(ErrorKind::InvalidInput, fmt::format("panel has {} nodes but the graph has {}", panel.nodes(), g.size()));
  }
  Eigen::MatrixXd values(panel.values().rows(), panel.values().cols());
  for (std::size_t i = 0; i < panel.nodes(); ++i) {
    const auto at = g.index_of(panel.labels()[i]);
    if (!at) fail(ErrorKind::InvalidInput, fmt::format("panel node '{}' is not in the graph", panel.labels()[i]));
    values.row(static_cast<Eigen::Index>(*at)) = panel.values().row(static_cast<Eigen::Index>(i));
  }
  return TimeSeriesPanel(g.labels(), panel.dates(), std::move(values));
}

WeightScheme make_scheme(const std::string& kind, const std::string& points_path, const Graph& g) {
  WeightScheme scheme;
  scheme.kind = parse_weight_kind(kind);
  if (scheme.kind != WeightKind::InverseDistance && scheme.kind != WeightKind::InverseDistancePopulation) return scheme;
  if (points_path.empty()) fail(ErrorKind::InvalidInput, fmt::format("scheme '{}' needs --points", kind));
  const auto points = load_points(points_path);
  std::vector<GeoPoint> ordered;
  for (const auto& label : g.labels()) {
    const auto it = std::find_if(points.begin(), points.end(), [&](const auto& p) { return p.node_id == label; });
    if (it == points.end()) fail(ErrorKind::InvalidInput, fmt::format("no coordinates for graph node '{}'", label));
    ordered.push_back(*it);
  }
  scheme.distances = distance_matrix(ordered);
  if (scheme.kind == WeightKind::InverseDistancePopulation) {
    std::vector<double> pop;
    for (const auto& p : ordered) {
      if (!p.population) fail(ErrorKind::InvalidInput, fmt::format("no population for node '{}'", p.node_id));
      pop.push_back(*p.population);
    }
    scheme.populations = std::move(pop);
  }
  return scheme;
}

std::vector<std::vector<double>> parse_beta(std::string_view text) {
  std::vector<std::vector<double>> out;
  std::size_t start = 0;
  for (;;) {
    const auto semi = text.find(';', start);
    const auto lag = text.substr(start, semi == std::string_view::npos ? std::string_view::npos : semi - start);
    auto& row = out.emplace_back();
    std::size_t s = 0;
    while (s < lag.size()) {
      const auto comma = lag.find(',', s);
      auto item = lag.substr(s, comma == std::string_view::npos ? std::string_view::npos : comma - s);
      while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
      while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
        fail(ErrorKind::InvalidInput, fmt::format("cannot parse beta value '{}'", item));
      }
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      s = comma + 1;
    }
    if (semi == std::string_view::npos) break;
    start = semi + 1;
  }
  return out;
}

std::size_t admissible_stage_cap(const Graph& g) {
  const auto spl = shortest_path_lengths(g);
  int cap = std::numeric_limits<int>::max();
  for (std::size_t i = 0; i < g.size(); ++i) {
    int ecc = 0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (spl.reachable(i, j)) ecc = std::max(ecc, spl(i, j));
    }
    cap = std::min(cap, ecc);
  }
  return static_cast<std::size_t>(std::clamp(cap, 1, 7));
}

}  // namespace gnar::cli
