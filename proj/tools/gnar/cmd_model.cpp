#include <chrono>
#include <cmath>
#include <memory>

#include <fmt/format.h>

#include <gnar/diagnostics.hpp>
#include <gnar/error.hpp>
#include <gnar/selection.hpp>

#include "common.hpp"

namespace gnar::cli {
namespace {

constexpr double kZ975 = 1.959963984540054;

struct ModelInputs {
  std::string panel;
  std::string graph;
  std::string scheme = "spl";
  std::string points;
  bool vertex_alpha = false;
  std::string estimator = "ols";
};

void add_model_inputs(CLI::App* c, ModelInputs& m) {
  c->add_option("--panel", m.panel, "Wide panel CSV")->required()->check(CLI::ExistingFile);
  c->add_option("--graph", m.graph, "Graph JSON or edge list")->required()->check(CLI::ExistingFile);
  c->add_option("--scheme", m.scheme, "Weights: spl, uniform, idw, pb")
      ->capture_default_str()
      ->check(CLI::IsMember({"spl", "uniform", "idw", "pb"}));
  c->add_option("--points", m.points, "Points CSV, needed by idw and pb");
  c->add_flag("--vertex-alpha", m.vertex_alpha, "Node-specific autoregressive coefficients");
  c->add_option("--estimator", m.estimator, "ols or egls")->capture_default_str()->check(CLI::IsMember({"ols", "egls"}));
}

struct Loaded {
  Graph graph;
  TimeSeriesPanel panel;
  WeightScheme scheme;
};

Loaded load(const ModelInputs& m) {
  Loaded l;
  l.graph = load_graph(m.graph);
  l.panel = align_to_graph(load_panel(m.panel), l.graph);
  l.scheme = make_scheme(m.scheme, m.points, l.graph);
  return l;
}

Estimator estimator_of(const ModelInputs& m) { return m.estimator == "egls" ? Estimator::Egls : Estimator::Ols; }

std::string residual_csv(const GnarFit& fit) {
  const TimeSeriesPanel res(fit.labels, fit.dates, fit.residuals);
  return csv_text([&](std::ostream& out) { write_wide_csv(out, res); });
}

std::vector<Date> dates_after(Date last, std::size_t count) {
  std::vector<Date> out;
  for (std::size_t k = 1; k <= count; ++k) out.push_back(last + std::chrono::days(7 * static_cast<int>(k)));
  return out;
}

struct FitOptionsCli {
  ModelInputs in;
  std::string order;
  std::string name = "fit";
};

struct SelectOptionsCli {
  ModelInputs in;
  std::size_t pmax = 0;
  std::size_t smax = 0;
  std::string criterion = "bic";
  std::string alignment = "common";
  std::size_t top = 10;
  std::string name = "selection";
};

struct ForecastOptionsCli {
  ModelInputs in;
  std::string order;
  std::size_t holdout = 5;
  std::size_t horizon = 0;
  std::string mode = "rolling";
  std::string name = "forecast";
};

struct SimulateOptionsCli {
  std::string graph;
  std::string order;
  std::vector<double> alpha;
  std::string beta;
  std::string scheme = "spl";
  std::string points;
  double sigma = 1.0;
  double sigma2 = -1.0;
  std::size_t times = 100;
  std::size_t burn_in = 0;
  double init_mean = 0.0;
  double init_sd = -1.0;
  std::string start = "2020-01-06";
  bool fit_back = false;
  std::string name = "simulated";
};

struct BaselineOptionsCli {
  std::string panel;
  std::size_t pmax = 0;
  std::size_t holdout = 0;
  std::string mode = "rolling";
  std::string name = "ar_baseline";
};

void run_fit(Context& ctx, const FitOptionsCli& o) {
  const auto l = load(o.in);
  const GnarSpec spec{parse_order(o.order), !o.in.vertex_alpha, l.scheme};
  const auto fit = fit_gnar(l.panel, l.graph, spec, FitOptions{estimator_of(o.in), 0});
  ctx.write_json(o.name + ".json", fit_to_json(fit));
  ctx.write_csv(o.name + "_residuals.csv", residual_csv(fit));
  std::cout << fmt::format("{}: loglik {:.4f}, BIC {:.4f}, AIC {:.4f}, n_obs {}, M {}\n", to_string(spec.order),
                           fit.loglik, fit.bic, fit.aic, fit.n_obs, fit.M);
  if (fit.sigma_fallback) std::cerr << "warning: VAR covariance infeasible; EGLS used a diagonal covariance\n";
}

void run_select(Context& ctx, const SelectOptionsCli& o) {
  const auto l = load(o.in);
  const std::size_t pmax = o.pmax > 0 ? o.pmax : schwert_max_lag(l.panel.observed_times());
  const std::size_t smax = o.smax > 0 ? o.smax : admissible_stage_cap(l.graph);
  const auto grid = order_grid(pmax, smax);
  SelectionOptions opts;
  opts.criterion = parse_criterion(o.criterion);
  opts.alignment = parse_alignment(o.alignment);
  opts.global_alpha = !o.in.vertex_alpha;
  opts.estimator = estimator_of(o.in);
  const auto report = select_model(l.panel, l.graph, l.scheme, grid, opts);

  ctx.write_csv(o.name + ".csv", csv_text([&](std::ostream& out) { write_selection_csv(out, report); }));
  Json body = selection_to_json(report);
  body["p_max"] = pmax;
  body["s_max"] = smax;
  ctx.write_json(o.name + ".json", body);

  std::cout << fmt::format("{} candidates (p_max {}, s_max {}, {} sample)\n", grid.orders.size(), pmax, smax,
                           to_string(opts.alignment));
  std::cout << fmt::format("{:>4}  {:<24} {:>12} {:>12} {:>4} {:>7}\n", "rank", "order", "BIC", "AIC", "M", "n_obs");
  for (std::size_t k = 0; k < std::min(o.top, report.candidates.size()); ++k) {
    const auto& c = report.candidates[k];
    if (!c.fitted) break;
    std::cout << fmt::format("{:>4}  {:<24} {:>12.4f} {:>12.4f} {:>4} {:>7}\n", k + 1, to_string(c.order), c.bic,
                             c.aic, c.M, c.n_obs);
  }
  const auto skipped = static_cast<std::size_t>(
      std::count_if(report.candidates.begin(), report.candidates.end(), [](const auto& c) { return !c.fitted; }));
  if (skipped > 0) std::cerr << fmt::format("note: {} candidates skipped (see {}.csv)\n", skipped, o.name);
  if (report.mixed_n_obs) std::cerr << "note: candidates were scored on different sample sizes\n";
}

void run_forecast(Context& ctx, const ForecastOptionsCli& o) {
  const auto l = load(o.in);
  const auto mode = parse_forecast_mode(o.mode);
  const GnarSpec spec{parse_order(o.order), !o.in.vertex_alpha, l.scheme};
  const std::size_t T = l.panel.times();

  if (o.holdout == 0) {
    if (mode != ForecastMode::Recursive) fail(ErrorKind::InvalidInput, "--holdout 0 needs --mode recursive");
    const std::size_t h = o.horizon > 0 ? o.horizon : 5;
    const auto fit = fit_gnar(l.panel, l.graph, spec, FitOptions{estimator_of(o.in), 0});
    const auto pred = forecast(fit, l.panel, h, mode, T);
    const auto dates = dates_after(l.panel.dates().back(), h);
    ctx.write_csv(o.name + ".csv", csv_text([&](std::ostream& out) {
                    write_forecast_csv(out, l.panel.labels(), dates, pred);
                  }));
    return;
  }
  if (o.holdout >= T) fail(ErrorKind::InvalidInput, "--holdout leaves no training data");
  const std::size_t origin = T - o.holdout;
  const auto train = l.panel.slice(0, origin);
  const auto fit = fit_gnar(train, l.graph, spec, FitOptions{estimator_of(o.in), 0});
  const auto pred = forecast(fit, l.panel, o.holdout, mode, origin);
  const Eigen::MatrixXd actual = l.panel.values().rightCols(static_cast<Eigen::Index>(o.holdout));
  const std::vector<Date> dates(l.panel.dates().begin() + static_cast<std::ptrdiff_t>(origin), l.panel.dates().end());
  const auto score = mase(actual, pred, train.values());

  ctx.write_csv(o.name + ".csv", csv_text([&](std::ostream& out) {
                  write_forecast_csv(out, l.panel.labels(), dates, pred, &actual);
                }));
  ctx.write_csv(o.name + "_mase.csv", csv_text([&](std::ostream& out) {
                  write_mase_csv(out, l.panel.labels(), dates, score);
                }));
  std::cout << fmt::format("{} {} forecast over {} weeks: mean MASE {}\n", to_string(spec.order), to_string(mode),
                           o.holdout, format_number(score.overall_mean));
}

void run_simulate(Context& ctx, const SimulateOptionsCli& o) {
  const Graph g = load_graph(o.graph);
  const GnarSpec spec{parse_order(o.order), true, make_scheme(o.scheme, o.points, g)};
  const std::size_t p = spec.order.p();
  if (o.alpha.size() != p) fail(ErrorKind::InvalidInput, fmt::format("--alpha needs {} values", p));
  Eigen::MatrixXd alpha(1, static_cast<Eigen::Index>(p));
  for (std::size_t j = 0; j < p; ++j) alpha(0, static_cast<Eigen::Index>(j)) = o.alpha[j];
  auto beta = o.beta.empty() ? std::vector<std::vector<double>>(p) : parse_beta(o.beta);
  if (beta.size() != p) fail(ErrorKind::InvalidInput, fmt::format("--beta needs {} ';'-separated lags", p));

  SimulationConfig cfg;
  cfg.times = o.times;
  cfg.sigma = o.sigma2 >= 0.0 ? std::sqrt(o.sigma2) : o.sigma;
  cfg.init_mean = o.init_mean;
  if (o.init_sd >= 0.0) cfg.init_sd = o.init_sd;
  cfg.burn_in = o.burn_in;
  cfg.seed = ctx.seed;
  cfg.start = parse_date(o.start);
  const auto panel = simulate(spec, alpha, beta, g, cfg);

  const double margin = stationarity_margin(alpha, beta);
  Json warnings = Json::array();
  if (margin < 0.0) {
    const auto msg = fmt::format("stationarity margin {:.4f} < 0: the sufficient stationarity condition fails", margin);
    warnings.push_back(msg);
    std::cerr << "warning: " << msg << '\n';
  }
  Json beta_json = Json::array();
  for (const auto& lag : beta) beta_json.push_back(lag);
  ctx.write_csv(o.name + ".csv", csv_text([&](std::ostream& out) { write_wide_csv(out, panel); }));
  ctx.write_json(o.name + ".json", Json{{"order", to_string(spec.order)},
                                        {"scheme", to_string(spec.scheme.kind)},
                                        {"graph", o.graph},
                                        {"alpha", o.alpha},
                                        {"beta", beta_json},
                                        {"sigma", cfg.sigma},
                                        {"times", cfg.times},
                                        {"burn_in", cfg.burn_in},
                                        {"init_mean", cfg.init_mean},
                                        {"init_sd", cfg.init_sd.value_or(cfg.sigma)},
                                        {"start", format_date(cfg.start)},
                                        {"seed", cfg.seed},
                                        {"stationarity_margin", margin},
                                        {"warnings", warnings}});
  if (!o.fit_back) return;

  // Refit the generating order and tabulate truth against estimate.
  const auto fit = fit_gnar(panel, g, spec);
  std::string table = "coefficient,truth,estimate,std_error,ci_lower,ci_upper,covered\n";
  std::cout << fmt::format("{:<12} {:>10}  {}\n", "coefficient", "truth", "estimate [95% CI]");
  std::size_t beta_col = p;
  auto row = [&](const std::string& label, double truth, std::size_t col) {
    const auto c = static_cast<Eigen::Index>(col);
    const double est = fit.gamma(c);
    const double se = fit.std_errors(c);
    const double lo = est - kZ975 * se;
    const double hi = est + kZ975 * se;
    const bool covered = lo <= truth && truth <= hi;
    table += fmt::format("{},{},{},{},{},{},{}\n", label, format_number(truth), format_number(est), format_number(se),
                         format_number(lo), format_number(hi), covered ? 1 : 0);
    std::cout << fmt::format("{:<12} {:>10.4f}  {:.4f} [{:.4f}, {:.4f}]{}\n", label, truth, est, lo, hi,
                             covered ? "" : "  *");
  };
  for (std::size_t j = 0; j < p; ++j) {
    row(fmt::format("alpha_{}", j + 1), o.alpha[j], j);
    for (std::size_t r = 0; r < spec.order.stages[j]; ++r) {
      row(fmt::format("beta_{}_{}", j + 1, r + 1), beta[j][r], beta_col++);
    }
  }
  ctx.write_csv(o.name + "_recovery.csv", table);
  ctx.write_json(o.name + "_fit.json", fit_to_json(fit));
}

void run_baseline(Context& ctx, const BaselineOptionsCli& o) {
  const auto panel = load_panel(o.panel);
  const std::size_t T = panel.times();
  if (o.holdout >= T) fail(ErrorKind::InvalidInput, "--holdout leaves no training data");
  const std::size_t origin = T - o.holdout;
  const auto train = panel.slice(0, origin);
  const std::size_t pmax = o.pmax > 0 ? o.pmax : schwert_max_lag(train.observed_times());
  const auto baseline = fit_ar_baseline(train, pmax);
  ctx.write_json(o.name + ".json", ar_baseline_to_json(baseline));
  std::size_t ok = 0;
  for (const auto& node : baseline.nodes) ok += node.ok ? 1 : 0;
  std::cout << fmt::format("AR baseline (p_max {}): {} of {} nodes fitted\n", pmax, ok, baseline.nodes.size());
  if (o.holdout == 0) return;

  const auto mode = parse_forecast_mode(o.mode);
  const auto pred = ar_forecast(baseline, panel, o.holdout, mode, origin);
  const Eigen::MatrixXd actual = panel.values().rightCols(static_cast<Eigen::Index>(o.holdout));
  const std::vector<Date> dates(panel.dates().begin() + static_cast<std::ptrdiff_t>(origin), panel.dates().end());
  const auto score = mase(actual, pred, train.values());
  ctx.write_csv(o.name + "_forecast.csv", csv_text([&](std::ostream& out) {
                  write_forecast_csv(out, panel.labels(), dates, pred, &actual);
                }));
  ctx.write_csv(o.name + "_mase.csv", csv_text([&](std::ostream& out) {
                  write_mase_csv(out, panel.labels(), dates, score);
                }));
  std::cout << fmt::format("AR {} forecast over {} weeks: mean MASE {}\n", to_string(mode), o.holdout,
                           format_number(score.overall_mean));
}

}  // namespace

void register_model(CLI::App& app, Context& ctx, Registry& reg) {
  auto fo = std::make_shared<FitOptionsCli>();
  auto* f = app.add_subcommand("fit", "Fit one GNAR model");
  add_model_inputs(f, fo->in);
  f->add_option("--order", fo->order, "Model order, e.g. GNAR-2-10 or 2:1,0")->required();
  f->add_option("--name", fo->name, "Output base name")->capture_default_str();
  reg.on(f, [&ctx, fo] { run_fit(ctx, *fo); });

  auto so = std::make_shared<SelectOptionsCli>();
  auto* s = app.add_subcommand("select", "Information-criterion search over the order grid");
  add_model_inputs(s, so->in);
  s->add_option("--pmax", so->pmax, "Largest lag (default: Schwert's rule on the observed weeks)");
  s->add_option("--smax", so->smax, "Largest stage (default: smallest eccentricity, at most 7)");
  s->add_option("--criterion", so->criterion, "bic or aic")->capture_default_str()->check(CLI::IsMember({"bic", "aic"}));
  s->add_option("--alignment", so->alignment, "common or per-candidate estimation sample")
      ->capture_default_str()
      ->check(CLI::IsMember({"common", "per-candidate"}));
  s->add_option("--top", so->top, "Rows printed")->capture_default_str();
  s->add_option("--name", so->name, "Output base name")->capture_default_str();
  reg.on(s, [&ctx, so] { run_select(ctx, *so); });

  auto wo = std::make_shared<ForecastOptionsCli>();
  auto* w = app.add_subcommand("forecast", "Hold out the last weeks, refit and forecast them");
  add_model_inputs(w, wo->in);
  w->add_option("--order", wo->order, "Model order")->required();
  w->add_option("--holdout", wo->holdout, "Weeks withheld and scored with MASE")->capture_default_str();
  w->add_option("--horizon", wo->horizon, "Steps beyond the data when --holdout 0");
  w->add_option("--mode", wo->mode, "rolling or recursive")->capture_default_str()->check(CLI::IsMember({"rolling", "recursive"}));
  w->add_option("--name", wo->name, "Output base name")->capture_default_str();
  reg.on(w, [&ctx, wo] { run_forecast(ctx, *wo); });

  auto mo = std::make_shared<SimulateOptionsCli>();
  auto* m = app.add_subcommand("simulate", "Simulate a global-alpha GNAR panel");
  m->add_option("--graph", mo->graph, "Graph JSON or edge list")->required()->check(CLI::ExistingFile);
  m->add_option("--order", mo->order, "Model order")->required();
  m->add_option("--alpha", mo->alpha, "alpha_1 .. alpha_p")->required()->expected(1, -1)->delimiter(',');
  m->add_option("--beta", mo->beta, "Stage coefficients, lags separated by ';' (e.g. \"0.14,0.41;-0.07\")");
  m->add_option("--scheme", mo->scheme, "Weights")->capture_default_str()->check(CLI::IsMember({"spl", "uniform", "idw", "pb"}));
  m->add_option("--points", mo->points, "Points CSV for idw and pb");
  auto* sd = m->add_option("--sigma", mo->sigma, "Innovation standard deviation")->capture_default_str();
  m->add_option("--sigma2", mo->sigma2, "Innovation variance (alternative to --sigma)")->excludes(sd);
  m->add_option("--times", mo->times, "Time points kept, including the p initial ones")->capture_default_str();
  m->add_option("--burn-in", mo->burn_in, "Leading time points discarded")->capture_default_str();
  m->add_option("--init-mean", mo->init_mean, "Mean of the p initial values")->capture_default_str();
  m->add_option("--init-sd", mo->init_sd, "Standard deviation of the initial values (default: sigma)");
  m->add_option("--start", mo->start, "First date of the weekly index")->capture_default_str();
  m->add_flag("--fit-back", mo->fit_back, "Refit the generating order and write a truth/estimate/CI table");
  m->add_option("--name", mo->name, "Output base name")->capture_default_str();
  reg.on(m, [&ctx, mo] { run_simulate(ctx, *mo); });

  auto baseline = app.add_subcommand("baseline", "Reference models without the network");
  baseline->require_subcommand(1);
  auto bo = std::make_shared<BaselineOptionsCli>();
  auto* b = baseline->add_subcommand("ar", "Per-node AR(p) with BIC order choice");
  b->add_option("--panel", bo->panel, "Wide panel CSV")->required()->check(CLI::ExistingFile);
  b->add_option("--pmax", bo->pmax, "Largest lag (default: Schwert's rule)");
  b->add_option("--holdout", bo->holdout, "Weeks withheld and scored with MASE")->capture_default_str();
  b->add_option("--mode", bo->mode, "rolling or recursive")->capture_default_str()->check(CLI::IsMember({"rolling", "recursive"}));
  b->add_option("--name", bo->name, "Output base name")->capture_default_str();
  reg.on(b, [&ctx, bo] { run_baseline(ctx, *bo); });
}

}  // namespace gnar::cli
