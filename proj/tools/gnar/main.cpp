// gnar: batch front end for network construction, GNAR fitting, selection,
// forecasting, simulation and residual diagnostics.

#include <iostream>
#include <memory>
#include <sstream>

#include <fmt/format.h>

#include <gnar/error.hpp>

#include "common.hpp"

namespace {

// JSON config: top-level keys are global options, nested objects address
// subcommands, e.g. {"seed": 3, "select": {"pmax": 7}}.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}\n"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    gnar::Json j;
    try {
      input >> j;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    std::vector<CLI::ConfigItem> items;
    walk(j, "", {}, items);
    return items;
  }

 private:
  static std::string scalar(const gnar::Json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void walk(const gnar::Json& j, const std::string& name, std::vector<std::string> parents,
                   std::vector<CLI::ConfigItem>& items) {
    if (j.is_object()) {
      if (!name.empty()) parents.push_back(name);
      for (auto it = j.begin(); it != j.end(); ++it) walk(it.value(), it.key(), parents, items);
      return;
    }
    if (name.empty()) throw CLI::ConversionError("config file must hold a JSON object");
    CLI::ConfigItem item;
    item.name = name;
    item.parents = parents;
    if (j.is_array()) {
      for (const auto& v : j) item.inputs.push_back(scalar(v));
    } else {
      item.inputs.push_back(scalar(j));
    }
    items.push_back(std::move(item));
  }
};

std::string quote_arg(std::string_view a) {
  if (!a.empty() && a.find_first_of(" \t\"'") == std::string_view::npos) return std::string(a);
  std::string q = "'";
  for (char c : a) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

}  // namespace

int main(int argc, char** argv) {
  using namespace gnar::cli;

  CLI::App app{"Generalised network autoregressive models for spatio-temporal panels", "gnar"};
  app.set_version_flag("--version", GNAR_VERSION);
  app.require_subcommand(1);
  app.fallthrough();
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config file (command-line flags take precedence)");

  Context ctx;
  Registry reg;
  app.add_option("--seed", ctx.seed, "Master seed recorded in every output")->capture_default_str();
  app.add_option("--out-dir", ctx.out_dir, "Directory for output files")->capture_default_str();

  register_network(app, ctx, reg);
  register_data(app, ctx, reg);
  register_model(app, ctx, reg);
  register_diagnose(app, ctx, reg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  std::string cmd = "gnar";
  for (int k = 1; k < argc; ++k) cmd += " " + quote_arg(argv[k]);
  ctx.command_line = cmd;

  for (auto& [sub, action] : reg.actions) {
    if (!sub->parsed()) continue;
    try {
      action();
    } catch (const gnar::Error& e) {
      std::cerr << fmt::format("error [{}]: {}\n", gnar::to_string(e.kind()), e.what());
      for (const auto& w : ctx.written) std::cerr << "  written before failure: " << w << '\n';
      return 1;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
    for (const auto& w : ctx.written) std::cerr << "wrote " << w << '\n';
    return 0;
  }
  std::cerr << app.help();
  return 2;
}
