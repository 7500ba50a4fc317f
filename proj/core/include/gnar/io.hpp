#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "gnar/diagnostics.hpp"
#include "gnar/geo_graph.hpp"
#include "gnar/model.hpp"
#include "gnar/panel.hpp"
#include "gnar/selection.hpp"

namespace gnar {

using Json = nlohmann::ordered_json;

/// Written into every output: JSON files get a "meta" object, CSV files
/// lead with '#' comment lines (all readers here skip them).
struct RunMetadata {
  std::string version = GNAR_VERSION;
  std::string command_line;
  std::uint64_t seed = 0;
};

Json to_json(const RunMetadata& meta);
std::string csv_preamble(const RunMetadata& meta);

/// Shortest round-trip decimal; empty for missing.
std::string format_number(double v);

// Files

std::string read_text_file(const std::filesystem::path& path);
Json read_json_file(const std::filesystem::path& path);
/// Writes to a sibling temporary and renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string dump_json(const Json& j);

// Inputs

/// Header node,lat,lon[,population].
std::vector<GeoPoint> read_points_csv(std::istream& in);
/// Header from,to.
std::vector<std::pair<std::string, std::string>> read_edgelist_csv(std::istream& in);
/// First column of a CSV with a header; used for hub lists.
std::vector<std::string> read_node_list_csv(std::istream& in);

/// Wide panel: header date,<node>...; empty cells are missing.
TimeSeriesPanel read_wide_csv(std::istream& in);
void write_wide_csv(std::ostream& out, const TimeSeriesPanel& panel);

// JSON documents

Json graph_to_json(const Graph& g);
Graph graph_from_json(const Json& j);

Json phase_to_json(const PhaseSpec& spec);
PhaseSpec phase_from_json(const Json& j);

Json fit_to_json(const GnarFit& fit);
Json selection_to_json(const SelectionReport& report);
Json moran_to_json(const MoranResult& result);
Json tests_to_json(std::span<const NodeTest> tests);
Json ar_baseline_to_json(const ArBaseline& baseline);

// CSV tables

void write_selection_csv(std::ostream& out, const SelectionReport& report);
void write_moran_csv(std::ostream& out, const MoranResult& result);
void write_summary_csv(std::ostream& out, std::string_view name, const NetworkSummary& s);
/// node,date,predicted[,actual]; one row per node per predicted column.
void write_forecast_csv(std::ostream& out, std::span<const std::string> labels, std::span<const Date> dates,
                        const Eigen::MatrixXd& predicted, const Eigen::MatrixXd* actual = nullptr);
/// node,date,scaled_error plus per-node mean/sd rows.
void write_mase_csv(std::ostream& out, std::span<const std::string> labels, std::span<const Date> dates,
                    const MaseResult& result);

}  // namespace gnar
