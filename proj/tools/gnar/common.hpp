#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>

#include <gnar/geo_graph.hpp>
#include <gnar/io.hpp>
#include <gnar/model.hpp>
#include <gnar/panel.hpp>

namespace gnar::cli {

struct Context {
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  std::string command_line;

  RunMetadata meta() const { return {GNAR_VERSION, command_line, seed}; }
  std::filesystem::path path(std::string_view file) const { return std::filesystem::path(out_dir) / file; }

  /// Each writer records what it wrote so main can print a manifest.
  void write_json(std::string_view file, const Json& body);
  void write_csv(std::string_view file, const std::string& body);

  std::vector<std::string> written;
};

using Action = std::function<void()>;

struct Registry {
  std::vector<std::pair<CLI::App*, Action>> actions;
  void on(CLI::App* sub, Action a) { actions.emplace_back(sub, std::move(a)); }
};

void register_network(CLI::App& app, Context& ctx, Registry& reg);
void register_data(CLI::App& app, Context& ctx, Registry& reg);
void register_model(CLI::App& app, Context& ctx, Registry& reg);
void register_diagnose(CLI::App& app, Context& ctx, Registry& reg);

/// Graph JSON ({labels, edges}) or an edge-list CSV (labels sorted).
Graph load_graph(const std::string& path);
std::vector<GeoPoint> load_points(const std::string& path);
TimeSeriesPanel load_panel(const std::string& path);

/// Reorders panel rows to the graph's label order; the label sets must match.
TimeSeriesPanel align_to_graph(const TimeSeriesPanel& panel, const Graph& g);

/// Distance and population data for idw/pb come from the points file,
/// reordered to the graph's labels.
WeightScheme make_scheme(const std::string& kind, const std::string& points_path, const Graph& g);

/// "0.14,0.41;-0.07;;0.01": lags separated by ';', stages by ','.
std::vector<std::vector<double>> parse_beta(std::string_view text);

/// Largest stage every node can use: the smallest eccentricity, capped at 7.
std::size_t admissible_stage_cap(const Graph& g);

void run_boxcox(Context& ctx, const std::string& input, const std::string& name);

std::string csv_text(const std::function<void(std::ostream&)>& body);

}  // namespace gnar::cli
