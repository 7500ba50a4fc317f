#include <memory>

#include <fmt/format.h>

#include <gnar/diagnostics.hpp>
#include <gnar/error.hpp>

#include "common.hpp"

namespace gnar::cli {
namespace {

struct MoranOptions {
  std::string panel;
  std::string graph;
  std::size_t R = 100;
  bool rank = false;
  std::string name;
};

struct ResidualOptions {
  std::string residuals;
  std::size_t max_lag = 0;
  std::string name;
};

void print_tests(const std::vector<NodeTest>& tests, const char* what) {
  std::size_t below = 0;
  std::size_t defined = 0;
  for (const auto& t : tests) {
    if (!t.result) continue;
    ++defined;
    below += t.result->p_value < 0.05 ? 1 : 0;
  }
  std::cout << fmt::format("{}: {} of {} nodes tested, {} with p < 0.05\n", what, defined, tests.size(), below);
}

}  // namespace

void register_diagnose(CLI::App& app, Context& ctx, Registry& reg) {
  auto* diag = app.add_subcommand("diagnose", "Spatial autocorrelation and residual checks");
  diag->require_subcommand(1);

  auto mo = std::make_shared<MoranOptions>();
  auto* m = diag->add_subcommand("moran", "Moran's I per date with permutation bands");
  m->add_option("--panel", mo->panel, "Wide panel CSV")->required()->check(CLI::ExistingFile);
  m->add_option("--graph", mo->graph, "Graph JSON or edge list")->required()->check(CLI::ExistingFile);
  m->add_option("--R", mo->R, "Permutations per date (>= 20)")->capture_default_str();
  m->add_flag("--rank", mo->rank, "Use ranks of each date's cross-section");
  m->add_option("--name", mo->name, "Output base name (default moran or moran_rank)");
  reg.on(m, [&ctx, mo] {
    const Graph g = load_graph(mo->graph);
    const auto panel = align_to_graph(load_panel(mo->panel), g);
    const auto result = moran_permutation_test(panel, g, mo->R, ctx.seed, mo->rank);
    const std::string base = !mo->name.empty() ? mo->name : (mo->rank ? "moran_rank" : "moran");
    ctx.write_csv(base + ".csv", csv_text([&](std::ostream& out) { write_moran_csv(out, result); }));
    ctx.write_json(base + ".json", moran_to_json(result));
    std::cout << fmt::format("N_m = {:.4f} over {} dates ({} skipped), R = {}\n", result.N_m, result.dates.size(),
                             result.skipped.size(), result.R);
  });

  auto ko = std::make_shared<ResidualOptions>();
  auto* k = diag->add_subcommand("ks", "Per-node Kolmogorov-Smirnov normality of residuals");
  k->add_option("--residuals", ko->residuals, "Wide residual CSV (e.g. from fit)")->required()->check(CLI::ExistingFile);
  k->add_option("--name", ko->name, "Output base name")->default_str("ks");
  ko->name = "ks";
  reg.on(k, [&ctx, ko] {
    const auto res = load_panel(ko->residuals);
    const auto tests = ks_normality(res.values(), res.labels());
    ctx.write_json(ko->name + ".json",
                   Json{{"test", "kolmogorov-smirnov"},
                        {"note", "moments estimated from the residuals; asymptotic p-values are conservative"},
                        {"nodes", tests_to_json(tests)}});
    print_tests(tests, "KS normality");
  });

  auto lo = std::make_shared<ResidualOptions>();
  auto* l = diag->add_subcommand("ljungbox", "Per-node Ljung-Box whiteness of residuals");
  l->add_option("--residuals", lo->residuals, "Wide residual CSV")->required()->check(CLI::ExistingFile);
  l->add_option("--max-lag", lo->max_lag, "Lags h (default min(10, n/5))");
  l->add_option("--name", lo->name, "Output base name")->default_str("ljungbox");
  lo->name = "ljungbox";
  reg.on(l, [&ctx, lo] {
    const auto res = load_panel(lo->residuals);
    const auto h = lo->max_lag > 0 ? std::optional<std::size_t>(lo->max_lag) : std::nullopt;
    const auto tests = ljung_box(res.values(), res.labels(), h);
    ctx.write_json(lo->name + ".json", Json{{"test", "ljung-box"}, {"nodes", tests_to_json(tests)}});
    print_tests(tests, "Ljung-Box");
  });

  auto bo = std::make_shared<ResidualOptions>();
  auto* b = diag->add_subcommand("boxcox", "Box-Cox profile likelihood of a panel's values");
  b->add_option("--input", bo->residuals, "Wide panel CSV")->required()->check(CLI::ExistingFile);
  b->add_option("--name", bo->name, "Output base name")->default_str("boxcox");
  bo->name = "boxcox";
  reg.on(b, [&ctx, bo] { run_boxcox(ctx, bo->residuals, bo->name); });
}

}  // namespace gnar::cli
