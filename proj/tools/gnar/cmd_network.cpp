#include <memory>
#include <sstream>

#include <fmt/format.h>

#include <gnar/error.hpp>

#include "common.hpp"

namespace gnar::cli {
namespace {

struct BuildOptions {
  std::string kind;
  std::string points;
  std::string edges;
  std::string base;
  std::string hubs;
  std::size_t k = 0;
  double dmax = 0.0;
  std::size_t n = 0;
  std::string name;
};

struct SummarizeOptions {
  std::string graph;
  std::size_t brg_samples = 100;
  std::string name;
};

Graph build(const BuildOptions& o) {
  auto need = [&](const std::string& v, const char* flag) {
    if (v.empty()) fail(ErrorKind::InvalidInput, fmt::format("--kind {} needs {}", o.kind, flag));
  };
  if (o.kind == "complete") {
    if (!o.points.empty()) return build_complete(labels_of(load_points(o.points)));
    if (o.n == 0) fail(ErrorKind::InvalidInput, "--kind complete needs --n or --points");
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < o.n; ++i) labels.push_back(std::to_string(i));
    return build_complete(std::move(labels));
  }
  if (o.kind == "edgelist") {
    need(o.edges, "--edges");
    if (o.points.empty()) return load_graph(o.edges);
    std::istringstream in(read_text_file(o.edges));
    return build_from_edgelist(labels_of(load_points(o.points)), read_edgelist_csv(in));
  }
  if (o.kind == "hub") {
    need(o.base, "--base");
    need(o.points, "--points");
    need(o.hubs, "--hubs");
    std::istringstream in(read_text_file(o.hubs));
    const auto hubs = read_node_list_csv(in);
    return build_economic_hub(load_graph(o.base), load_points(o.points), hubs);
  }
  need(o.points, "--points");
  const auto points = load_points(o.points);
  if (o.kind == "knn") {
    if (o.k == 0) fail(ErrorKind::InvalidInput, "--kind knn needs --k >= 1");
    return build_knn(points, o.k);
  }
  if (o.kind == "dnn") {
    if (!(o.dmax > 0.0)) fail(ErrorKind::InvalidInput, "--kind dnn needs --dmax > 0 (km)");
    return build_dnn(points, o.dmax);
  }
  if (o.kind == "delaunay") return build_delaunay(points);
  if (o.kind == "gabriel") return derive_gabriel(points);
  if (o.kind == "soi") return derive_soi(points);
  if (o.kind == "relative") return derive_relative(points);
  fail(ErrorKind::InvalidInput, fmt::format("unknown graph kind '{}'", o.kind));
}

}  // namespace

void register_network(CLI::App& app, Context& ctx, Registry& reg) {
  auto* network = app.add_subcommand("network", "Build and summarise graphs");
  network->require_subcommand(1);

  auto bo = std::make_shared<BuildOptions>();
  auto* b = network->add_subcommand("build", "Construct a graph and write it as JSON");
  b->add_option("--kind", bo->kind, "Construction")
      ->required()
      ->check(CLI::IsMember({"knn", "dnn", "delaunay", "gabriel", "soi", "relative", "edgelist", "hub", "complete"}));
  b->add_option("--points", bo->points, "Points CSV (node,lat,lon[,population])");
  b->add_option("--edges", bo->edges, "Edge-list CSV (from,to)");
  b->add_option("--base", bo->base, "Base graph for --kind hub (JSON or edge list)");
  b->add_option("--hubs", bo->hubs, "Hub node list CSV (first column)");
  b->add_option("--k", bo->k, "Neighbours for knn");
  b->add_option("--dmax", bo->dmax, "Distance threshold in km for dnn");
  b->add_option("--n", bo->n, "Node count for complete graphs without --points");
  b->add_option("--name", bo->name, "Output base name (default: the kind)");
  reg.on(b, [&ctx, bo] {
    const Graph g = build(*bo);
    Json params{{"kind", bo->kind}};
    if (bo->kind == "knn") params["k"] = bo->k;
    if (bo->kind == "dnn") params["dmax_km"] = bo->dmax;
    Json body{{"construction", params}};
    const Json graph = graph_to_json(g);
    for (auto it = graph.begin(); it != graph.end(); ++it) body[it.key()] = it.value();
    body["summary"] = {{"nodes", g.size()}, {"edges", g.edge_count()}};
    ctx.write_json((bo->name.empty() ? bo->kind : bo->name) + ".json", body);
    std::cout << fmt::format("{}: {} nodes, {} edges\n", bo->kind, g.size(), g.edge_count());
  });

  auto so = std::make_shared<SummarizeOptions>();
  auto* s = network->add_subcommand("summarize", "Degree, path length and clustering with a G(n,m) baseline");
  s->alias("summarise");
  s->add_option("--graph", so->graph, "Graph JSON or edge list")->required()->check(CLI::ExistingFile);
  s->add_option("--brg-samples", so->brg_samples, "Random-graph draws for the baseline")->capture_default_str();
  s->add_option("--name", so->name, "Network name in the output (default: file stem)");
  reg.on(s, [&ctx, so] {
    const Graph g = load_graph(so->graph);
    const auto summary = network_summary(g, so->brg_samples, ctx.seed);
    const std::string name = so->name.empty() ? std::filesystem::path(so->graph).stem().string() : so->name;
    ctx.write_csv(name + "_summary.csv", csv_text([&](std::ostream& out) { write_summary_csv(out, name, summary); }));
    std::cout << fmt::format("{}: avg degree {:.2f}, avg SPL {:.2f}, clustering {:.2f} (G(n,m): SPL {:.2f}, clustering {:.2f})\n",
                             name, summary.avg_degree, summary.avg_spl, summary.avg_local_clustering, summary.brg_avg_spl,
                             summary.brg_avg_clustering);
  });
}

}  // namespace gnar::cli
