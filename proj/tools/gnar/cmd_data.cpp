#include <memory>
#include <sstream>

#include <fmt/format.h>

#include <gnar/error.hpp>

#include "common.hpp"

namespace gnar::cli {
namespace {

struct DataOptions {
  std::string input;
  std::string name;
  double tolerance = 0.0;
  std::size_t window = 7;
  std::string start;
  std::string end;
  std::size_t lag = 1;
  std::vector<std::string> phases;
};

std::string panel_csv(const TimeSeriesPanel& p) {
  return csv_text([&](std::ostream& out) { write_wide_csv(out, p); });
}

CLI::App* data_command(CLI::App* parent, const char* name, const char* help, DataOptions& o,
                       const char* default_name) {
  auto* c = parent->add_subcommand(name, help);
  c->add_option("--input", o.input, "Input CSV")->required()->check(CLI::ExistingFile);
  c->add_option("--name", o.name, "Output base name")->default_str(default_name);
  o.name = default_name;
  return c;
}

}  // namespace

void run_boxcox(Context& ctx, const std::string& input, const std::string& name) {
  const auto panel = load_panel(input);
  const auto values = observed_values(panel);
  const auto grid = default_lambda_grid();
  const auto profile = boxcox_profile(values, grid);
  ctx.write_csv(name + ".csv", csv_text([&](std::ostream& out) {
                  out << "lambda,loglik\n";
                  for (std::size_t k = 0; k < profile.lambda_grid.size(); ++k) {
                    out << format_number(profile.lambda_grid[k]) << ',' << format_number(profile.loglik[k]) << '\n';
                  }
                }));
  ctx.write_json(name + ".json",
                 Json{{"lambda_hat", profile.lambda_hat}, {"shift", profile.shift}, {"n", values.size()}});
  std::cout << fmt::format("Box-Cox lambda_hat = {:.2f} (shift {})\n", profile.lambda_hat, profile.shift);
}

void register_data(CLI::App& app, Context& ctx, Registry& reg) {
  auto* data = app.add_subcommand("data", "Panel ingestion and preprocessing");
  data->require_subcommand(1);

  auto ingest = std::make_shared<DataOptions>();
  auto* c = data_command(data, "ingest", "Long CSV (date,node,value) to wide panel", *ingest, "panel");
  reg.on(c, [&ctx, ingest] {
    std::istringstream in(read_text_file(ingest->input));
    const auto panel = ingest_long_csv(in);
    ctx.write_csv(ingest->name + ".csv", panel_csv(panel));
    std::cout << fmt::format("{} nodes x {} dates, {} missing cells\n", panel.nodes(), panel.times(), panel.missing_count());
  });

  auto weekly = std::make_shared<DataOptions>();
  c = data_command(data, "weekly", "Weekly incidence from daily cumulative counts", *weekly, "weekly");
  c->add_option("--tolerance", weekly->tolerance, "Allowed decrease before a warning")->capture_default_str();
  reg.on(c, [&ctx, weekly] {
    const auto result = weekly_from_cumulative(load_panel(weekly->input), weekly->tolerance);
    Json warnings = Json::array();
    for (const auto& w : result.warnings) {
      warnings.push_back({{"node", w.node}, {"week_end", format_date(w.week_end)}, {"drop", w.drop}});
    }
    ctx.write_csv(weekly->name + ".csv", panel_csv(result.panel));
    ctx.write_json(weekly->name + "_warnings.json", Json{{"warnings", warnings}});
    if (!result.warnings.empty()) {
      std::cerr << fmt::format("warning: {} decreasing cumulative counts kept as-is\n", result.warnings.size());
    }
  });

  auto smooth = std::make_shared<DataOptions>();
  c = data_command(data, "smooth", "Centered rolling average inside a date interval", *smooth, "smoothed");
  c->add_option("--window", smooth->window, "Window width")->capture_default_str();
  c->add_option("--start", smooth->start, "Interval start (YYYY-MM-DD, default first date)");
  c->add_option("--end", smooth->end, "Interval end (YYYY-MM-DD, default last date)");
  reg.on(c, [&ctx, smooth] {
    const auto panel = load_panel(smooth->input);
    if (panel.times() == 0) fail(ErrorKind::InvalidInput, "empty panel");
    DateInterval iv{smooth->start.empty() ? panel.dates().front() : parse_date(smooth->start),
                    smooth->end.empty() ? panel.dates().back() : parse_date(smooth->end)};
    ctx.write_csv(smooth->name + ".csv", panel_csv(rolling_average(panel, smooth->window, iv)));
  });

  auto diff = std::make_shared<DataOptions>();
  c = data_command(data, "diff", "Lag differences", *diff, "diff");
  c->add_option("--lag", diff->lag, "Difference lag")->capture_default_str();
  reg.on(c, [&ctx, diff] { ctx.write_csv(diff->name + ".csv", panel_csv(difference(load_panel(diff->input), diff->lag))); });

  auto phases = std::make_shared<DataOptions>();
  c = data_command(data, "phases", "Split a panel by phase spec files", *phases, "");
  c->add_option("--phase", phases->phases, "Phase JSON {name, intervals}")->required()->check(CLI::ExistingFile);
  reg.on(c, [&ctx, phases] {
    const auto panel = load_panel(phases->input);
    for (const auto& file : phases->phases) {
      const auto spec = phase_from_json(read_json_file(file));
      const auto part = split_phases(panel, spec);
      const std::string base = phases->name.empty() ? spec.name : phases->name + "_" + spec.name;
      ctx.write_csv(base + ".csv", panel_csv(part));
      std::cout << fmt::format("{}: {} dates, {} with observations\n", spec.name, part.times(), part.observed_times());
    }
  });

  auto boxcox = std::make_shared<DataOptions>();
  c = data_command(data, "boxcox", "Box-Cox profile likelihood over lambda in [-2, 3]", *boxcox, "boxcox");
  reg.on(c, [&ctx, boxcox] { run_boxcox(ctx, boxcox->input, boxcox->name); });
}

}  // namespace gnar::cli
