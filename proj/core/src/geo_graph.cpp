#include "gnar/geo_graph.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "gnar/error.hpp"

namespace gnar {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Relative slack under which two squared lengths count as equal in the
// Gabriel/Relative/SOI filters, so exact boundary cases survive rounding.
constexpr double kTieTolerance = 1e-12;

Edge make_edge(std::size_t a, std::size_t b) { return a < b ? Edge{a, b} : Edge{b, a}; }

double squared_distance(const Vec2& a, const Vec2& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

long double orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (static_cast<long double>(b.x) - a.x) * (static_cast<long double>(c.y) - a.y) -
         (static_cast<long double>(b.y) - a.y) * (static_cast<long double>(c.x) - a.x);
}

// Positive iff d lies strictly inside the circumcircle of the CCW triangle abc.
bool in_circumcircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const long double adx = static_cast<long double>(a.x) - d.x;
  const long double ady = static_cast<long double>(a.y) - d.y;
  const long double bdx = static_cast<long double>(b.x) - d.x;
  const long double bdy = static_cast<long double>(b.y) - d.y;
  const long double cdx = static_cast<long double>(c.x) - d.x;
  const long double cdy = static_cast<long double>(c.y) - d.y;
  const long double ad = adx * adx + ady * ady;
  const long double bd = bdx * bdx + bdy * bdy;
  const long double cd = cdx * cdx + cdy * cdy;
  const long double t1 = ad * (bdx * cdy - cdx * bdy);
  const long double t2 = bd * (adx * cdy - cdx * ady);
  const long double t3 = cd * (adx * bdy - bdx * ady);
  const long double det = t1 - t2 + t3;
  const long double scale = std::fabs(t1) + std::fabs(t2) + std::fabs(t3);
  return det > scale * 1e-14L;
}

class Triangulation {
 public:
  explicit Triangulation(std::span<const Vec2> pts) : pts_(pts) {}

  void add(std::size_t a, std::size_t b, std::size_t c) {
    if (orient(pts_[a], pts_[b], pts_[c]) < 0) std::swap(b, c);
    const std::size_t t = tris_.size();
    tris_.push_back({a, b, c});
    link(t);
  }

  // Lawson flipping until every interior edge is locally Delaunay.
  void make_delaunay() {
    std::vector<Edge> stack;
    for (const auto& [key, tri] : directed_) {
      if (key.first < key.second) stack.push_back(key);
    }
    // Each flip strictly increases the minimum angle vector, so the loop is
    // finite; the cap only guards against floating-point cycling.
    std::size_t budget = 64 * pts_.size() * pts_.size() + 1024;
    while (!stack.empty() && budget-- > 0) {
      const auto [u, v] = stack.back();
      stack.pop_back();
      const auto f = directed_.find({u, v});
      const auto r = directed_.find({v, u});
      if (f == directed_.end() || r == directed_.end()) continue;
      const std::size_t t1 = f->second;
      const std::size_t t2 = r->second;
      const std::size_t c = opposite(t1, u, v);
      const std::size_t d = opposite(t2, v, u);
      if (!in_circumcircle(pts_[u], pts_[v], pts_[c], pts_[d])) continue;
      unlink(t1);
      unlink(t2);
      tris_[t1] = {u, d, c};
      tris_[t2] = {d, v, c};
      link(t1);
      link(t2);
      stack.push_back(make_edge(u, d));
      stack.push_back(make_edge(d, v));
      stack.push_back(make_edge(v, c));
      stack.push_back(make_edge(c, u));
    }
  }

  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    for (const auto& [key, tri] : directed_) out.push_back(make_edge(key.first, key.second));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

 private:
  std::size_t opposite(std::size_t t, std::size_t a, std::size_t b) const {
    for (std::size_t v : tris_[t]) {
      if (v != a && v != b) return v;
    }
    return tris_[t][0];
  }

  void link(std::size_t t) {
    const auto& tri = tris_[t];
    for (int k = 0; k < 3; ++k) directed_[{tri[k], tri[(k + 1) % 3]}] = t;
  }

  void unlink(std::size_t t) {
    const auto& tri = tris_[t];
    for (int k = 0; k < 3; ++k) directed_.erase({tri[k], tri[(k + 1) % 3]});
  }

  std::span<const Vec2> pts_;
  std::vector<std::array<std::size_t, 3>> tris_;
  std::map<Edge, std::size_t> directed_;
};

std::vector<Edge> delaunay_from_points(std::span<const GeoPoint> points) {
  validate_points(points);
  const auto projected = project_equirectangular(points);
  return delaunay_edges(projected);
}

Graph graph_from(std::span<const GeoPoint> points, std::vector<Edge> edges) {
  return Graph(labels_of(points), std::move(edges));
}

}  // namespace

// Graph

Graph::Graph(std::vector<std::string> labels, std::vector<Edge> edges)
    : labels_(std::move(labels)), adjacency_(labels_.size()) {
  {
    std::unordered_set<std::string> seen;
    for (const auto& l : labels_) {
      if (!seen.insert(l).second) fail(ErrorKind::InvalidInput, fmt::format("duplicate node label '{}'", l));
    }
  }
  const std::size_t n = labels_.size();
  for (auto& e : edges) {
    if (e.first >= n || e.second >= n) {
      fail(ErrorKind::InvalidInput, fmt::format("edge ({}, {}) out of range for {} nodes", e.first, e.second, n));
    }
    if (e.first == e.second) fail(ErrorKind::InvalidInput, fmt::format("self-loop at node '{}'", labels_[e.first]));
    e = make_edge(e.first, e.second);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  edges_ = std::move(edges);
  for (const auto& [a, b] : edges_) {
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
  }
  for (auto& nb : adjacency_) std::sort(nb.begin(), nb.end());
}

bool Graph::has_edge(std::size_t i, std::size_t j) const {
  const auto& nb = adjacency_.at(i);
  return std::binary_search(nb.begin(), nb.end(), j);
}

std::optional<std::size_t> Graph::index_of(const std::string& label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels_.begin());
}

// Points

void validate_points(std::span<const GeoPoint> points) {
  std::unordered_set<std::string> seen;
  for (const auto& p : points) {
    if (!seen.insert(p.node_id).second) fail(ErrorKind::InvalidInput, fmt::format("duplicate node id '{}'", p.node_id));
    if (!std::isfinite(p.lat_deg) || !std::isfinite(p.lon_deg)) {
      fail(ErrorKind::InvalidInput, fmt::format("non-finite coordinates for '{}'", p.node_id));
    }
    if (p.lat_deg < -90.0 || p.lat_deg > 90.0 || p.lon_deg < -180.0 || p.lon_deg > 180.0) {
      fail(ErrorKind::InvalidInput, fmt::format("coordinates out of range for '{}'", p.node_id));
    }
    if (p.population && (!std::isfinite(*p.population) || *p.population < 0.0)) {
      fail(ErrorKind::InvalidInput, fmt::format("invalid population for '{}'", p.node_id));
    }
  }
}

double great_circle_distance(const GeoPoint& a, const GeoPoint& b, double radius_km) {
  if (!std::isfinite(a.lat_deg) || !std::isfinite(a.lon_deg) || !std::isfinite(b.lat_deg) ||
      !std::isfinite(b.lon_deg)) {
    fail(ErrorKind::InvalidInput, "non-finite coordinates in great-circle distance");
  }
  if (!(radius_km > 0.0)) fail(ErrorKind::InvalidInput, "sphere radius must be positive");
  if (a.lat_deg == b.lat_deg && a.lon_deg == b.lon_deg) return 0.0;
  const double d1 = a.lat_deg * kDegToRad;
  const double d2 = b.lat_deg * kDegToRad;
  const double dl = (a.lon_deg - b.lon_deg) * kDegToRad;
  const double c = std::sin(d1) * std::sin(d2) + std::cos(d1) * std::cos(d2) * std::cos(dl);
  return radius_km * std::acos(std::clamp(c, -1.0, 1.0));
}

Eigen::MatrixXd distance_matrix(std::span<const GeoPoint> points, double radius_km) {
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      d(i, j) = d(j, i) = great_circle_distance(points[i], points[j], radius_km);
    }
  }
  return d;
}

std::vector<std::string> labels_of(std::span<const GeoPoint> points) {
  std::vector<std::string> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.node_id);
  return out;
}

// Planar geometry

std::vector<Vec2> project_equirectangular(std::span<const GeoPoint> points) {
  if (points.empty()) return {};
  double mean_lat = 0.0;
  for (const auto& p : points) mean_lat += p.lat_deg;
  mean_lat /= static_cast<double>(points.size());
  const double shrink = std::cos(mean_lat * kDegToRad);
  std::vector<Vec2> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back({p.lon_deg * shrink, p.lat_deg});
  return out;
}

std::vector<Edge> delaunay_edges(std::span<const Vec2> pts) {
  const std::size_t n = pts.size();
  if (n < 3) fail(ErrorKind::DegenerateGeometry, "Delaunay triangulation needs at least 3 points");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(pts[a].x, pts[a].y) < std::tie(pts[b].x, pts[b].y);
  });
  for (std::size_t k = 1; k < n; ++k) {
    const auto& a = pts[order[k - 1]];
    const auto& b = pts[order[k]];
    if (a.x == b.x && a.y == b.y) {
      fail(ErrorKind::InvalidInput, fmt::format("coincident points {} and {}", order[k - 1], order[k]));
    }
  }

  // First point not collinear with the leading run.
  std::size_t apex = 2;
  while (apex < n && orient(pts[order[0]], pts[order[1]], pts[order[apex]]) == 0) ++apex;
  if (apex == n) fail(ErrorKind::DegenerateGeometry, "all points are collinear");

  Triangulation tri(pts);
  for (std::size_t k = 0; k + 1 < apex; ++k) tri.add(order[k], order[k + 1], order[apex]);

  // Counter-clockwise hull of the seed fan.
  std::vector<std::size_t> hull;
  if (orient(pts[order[0]], pts[order[apex - 1]], pts[order[apex]]) > 0) {
    for (std::size_t k = 0; k <= apex; ++k) hull.push_back(order[k]);
  } else {
    hull.push_back(order[0]);
    hull.push_back(order[apex]);
    for (std::size_t k = apex - 1; k >= 1; --k) hull.push_back(order[k]);
  }

  std::vector<char> visible;
  for (std::size_t k = apex + 1; k < n; ++k) {
    const std::size_t p = order[k];
    const std::size_t m = hull.size();
    visible.assign(m, 0);
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t a = hull[j];
      const std::size_t b = hull[(j + 1) % m];
      if (orient(pts[a], pts[b], pts[p]) < 0) {
        visible[j] = 1;
        tri.add(b, a, p);
      }
    }
    std::vector<std::size_t> next;
    next.reserve(m + 1);
    for (std::size_t j = 0; j < m; ++j) {
      const bool in_edge = visible[(j + m - 1) % m] != 0;
      const bool out_edge = visible[j] != 0;
      if (in_edge && out_edge) continue;
      next.push_back(hull[j]);
      if (out_edge && !in_edge) next.push_back(p);
    }
    hull = std::move(next);
  }

  tri.make_delaunay();
  return tri.edges();
}

std::vector<Edge> gabriel_filter(std::span<const Vec2> pts, std::span<const Edge> candidates) {
  std::vector<Edge> out;
  for (const auto& [x, y] : candidates) {
    const double dxy = squared_distance(pts[x], pts[y]);
    bool keep = true;
    for (std::size_t z = 0; z < pts.size() && keep; ++z) {
      if (z == x || z == y) continue;
      const double bound = squared_distance(pts[x], pts[z]) + squared_distance(pts[y], pts[z]);
      keep = dxy <= bound * (1.0 + kTieTolerance);
    }
    if (keep) out.push_back(make_edge(x, y));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Edge> soi_filter(std::span<const Vec2> pts, std::span<const Edge> candidates) {
  const std::size_t n = pts.size();
  std::vector<double> nn(n, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) nn[i] = std::min(nn[i], std::sqrt(squared_distance(pts[i], pts[j])));
    }
  }
  std::vector<Edge> out;
  for (const auto& [x, y] : candidates) {
    const double d = std::sqrt(squared_distance(pts[x], pts[y]));
    const double reach = nn[x] + nn[y];
    // Tangent circles touch once; two intersections need d strictly inside.
    if (d < reach * (1.0 - kTieTolerance)) out.push_back(make_edge(x, y));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Edge> relative_filter(std::span<const Vec2> pts, std::span<const Edge> candidates) {
  std::vector<Edge> out;
  for (const auto& [x, y] : candidates) {
    const double dxy = squared_distance(pts[x], pts[y]);
    bool keep = true;
    for (std::size_t z = 0; z < pts.size() && keep; ++z) {
      if (z == x || z == y) continue;
      const double bound = std::max(squared_distance(pts[x], pts[z]), squared_distance(pts[y], pts[z]));
      keep = dxy <= bound * (1.0 + kTieTolerance);
    }
    if (keep) out.push_back(make_edge(x, y));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Constructions

Graph build_knn(std::span<const GeoPoint> points, std::size_t k, double radius_km) {
  validate_points(points);
  const std::size_t n = points.size();
  if (k < 1 || k + 1 > n) {
    fail(ErrorKind::InvalidInput, fmt::format("k = {} outside [1, {}]", k, n == 0 ? 0 : n - 1));
  }
  const Eigen::MatrixXd d = distance_matrix(points, radius_km);
  std::vector<Edge> edges;
  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < n; ++i) {
    others.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) others.push_back(j);
    }
    std::sort(others.begin(), others.end(), [&](std::size_t a, std::size_t b) {
      const double da = d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a));
      const double db = d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b));
      if (da != db) return da < db;
      return points[a].node_id < points[b].node_id;
    });
    for (std::size_t r = 0; r < k; ++r) edges.push_back(make_edge(i, others[r]));
  }
  return graph_from(points, std::move(edges));
}

Graph build_dnn(std::span<const GeoPoint> points, double d_max_km, double radius_km) {
  validate_points(points);
  if (!(d_max_km > 0.0)) fail(ErrorKind::InvalidInput, "distance threshold must be positive");
  const Eigen::MatrixXd d = distance_matrix(points, radius_km);
  std::vector<Edge> edges;
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < d.cols(); ++j) {
      if (d(i, j) > 0.0 && d(i, j) <= d_max_km) {
        edges.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      }
    }
  }
  return graph_from(points, std::move(edges));
}

Graph build_delaunay(std::span<const GeoPoint> points) {
  return graph_from(points, delaunay_from_points(points));
}

Graph derive_gabriel(std::span<const GeoPoint> points) {
  const auto dt = delaunay_from_points(points);
  return graph_from(points, gabriel_filter(project_equirectangular(points), dt));
}

Graph derive_soi(std::span<const GeoPoint> points) {
  const auto dt = delaunay_from_points(points);
  return graph_from(points, soi_filter(project_equirectangular(points), dt));
}

Graph derive_relative(std::span<const GeoPoint> points) {
  const auto dt = delaunay_from_points(points);
  return graph_from(points, relative_filter(project_equirectangular(points), dt));
}

Graph build_from_edgelist(std::vector<std::string> labels,
                          std::span<const std::pair<std::string, std::string>> edges) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < labels.size(); ++i) index.emplace(labels[i], i);
  std::vector<Edge> out;
  out.reserve(edges.size());
  for (std::size_t row = 0; row < edges.size(); ++row) {
    const auto& [from, to] = edges[row];
    const auto a = index.find(from);
    const auto b = index.find(to);
    if (a == index.end() || b == index.end()) {
      fail(ErrorKind::InvalidInput,
           fmt::format("edge {} ({}, {}): unknown node '{}'", row + 1, from, to, a == index.end() ? from : to));
    }
    if (a->second == b->second) {
      fail(ErrorKind::InvalidInput, fmt::format("edge {} ({}, {}): self-loop", row + 1, from, to));
    }
    out.emplace_back(a->second, b->second);
  }
  return Graph(std::move(labels), std::move(out));
}

Graph build_economic_hub(const Graph& base, std::span<const GeoPoint> points,
                         std::span<const std::string> hubs, double radius_km) {
  if (hubs.empty()) fail(ErrorKind::InvalidInput, "economic hub list is empty");
  validate_points(points);
  const std::size_t n = base.size();
  std::vector<const GeoPoint*> located(n, nullptr);
  for (const auto& p : points) {
    if (const auto i = base.index_of(p.node_id)) located[*i] = &p;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (located[i] == nullptr) fail(ErrorKind::InvalidInput, fmt::format("no coordinates for node '{}'", base.labels()[i]));
  }
  std::vector<std::size_t> hub_idx;
  for (const auto& h : hubs) {
    const auto i = base.index_of(h);
    if (!i) fail(ErrorKind::InvalidInput, fmt::format("hub '{}' is not a node of the base graph", h));
    hub_idx.push_back(*i);
  }
  std::vector<Edge> edges = base.edges();
  for (std::size_t i = 0; i < n; ++i) {
    if (std::find(hub_idx.begin(), hub_idx.end(), i) != hub_idx.end()) continue;
    std::size_t best = hub_idx.front();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t h : hub_idx) {
      const double d = great_circle_distance(*located[i], *located[h], radius_km);
      if (d < best_d || (d == best_d && base.labels()[h] < base.labels()[best])) {
        best = h;
        best_d = d;
      }
    }
    edges.push_back(make_edge(i, best));
  }
  return Graph(base.labels(), std::move(edges));
}

Graph build_complete(std::vector<std::string> labels) {
  const std::size_t n = labels.size();
  if (n < 2) fail(ErrorKind::InvalidInput, "complete graph needs at least 2 nodes");
  std::vector<Edge> edges;
  edges.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  }
  return Graph(std::move(labels), std::move(edges));
}

// Structure

StageNeighbourhoods stage_neighbourhoods(const Graph& g, std::size_t r_max) {
  if (r_max < 1) fail(ErrorKind::InvalidInput, "r_max must be at least 1");
  const std::size_t n = g.size();
  std::vector<std::vector<std::vector<std::size_t>>> stages(n, std::vector<std::vector<std::size_t>>(r_max));
  std::vector<std::size_t> depth(n);
  constexpr auto kUnseen = std::numeric_limits<std::size_t>::max();
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(depth.begin(), depth.end(), kUnseen);
    depth[i] = 0;
    queue.assign(1, i);
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop_front();
      if (depth[u] == r_max) continue;
      for (std::size_t v : g.neighbours(u)) {
        if (depth[v] != kUnseen) continue;
        depth[v] = depth[u] + 1;
        stages[i][depth[v] - 1].push_back(v);
        queue.push_back(v);
      }
    }
    for (auto& s : stages[i]) std::sort(s.begin(), s.end());
  }
  return StageNeighbourhoods(r_max, std::move(stages));
}

PathLengths shortest_path_lengths(const Graph& g) {
  const std::size_t n = g.size();
  std::vector<int> hops(n * n, PathLengths::kUnreachable);
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < n; ++i) {
    int* row = hops.data() + i * n;
    row[i] = 0;
    queue.assign(1, i);
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop_front();
      for (std::size_t v : g.neighbours(u)) {
        if (row[v] != PathLengths::kUnreachable) continue;
        row[v] = row[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return PathLengths(n, std::move(hops));
}

double average_local_clustering(const Graph& g) {
  if (g.size() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto& nb = g.neighbours(i);
    const std::size_t k = nb.size();
    if (k < 2) continue;  // counts as zero
    std::size_t links = 0;
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b) links += g.has_edge(nb[a], nb[b]) ? 1 : 0;
    }
    total += 2.0 * static_cast<double>(links) / static_cast<double>(k * (k - 1));
  }
  return total / static_cast<double>(g.size());
}

Graph random_gnm(std::size_t n, std::size_t m, std::mt19937_64& rng) {
  const std::size_t pairs = n < 2 ? 0 : n * (n - 1) / 2;
  if (m > pairs) fail(ErrorKind::InvalidInput, fmt::format("G(n, m): m = {} exceeds {} possible edges", m, pairs));
  // Floyd's sampling of m distinct pair indices.
  std::set<std::size_t> chosen;
  for (std::size_t j = pairs - m; j < pairs; ++j) {
    std::uniform_int_distribution<std::size_t> pick(0, j);
    const std::size_t t = pick(rng);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  std::vector<Edge> edges;
  edges.reserve(m);
  for (std::size_t idx : chosen) {
    // Row-major unranking of the strict upper triangle.
    std::size_t i = 0;
    std::size_t remaining = idx;
    while (remaining >= n - 1 - i) {
      remaining -= n - 1 - i;
      ++i;
    }
    edges.emplace_back(i, i + 1 + remaining);
  }
  std::vector<std::string> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = std::to_string(i);
  return Graph(std::move(labels), std::move(edges));
}

namespace {

struct SplStats {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double disconnected_fraction = 0.0;
};

SplStats spl_stats(const Graph& g) {
  const std::size_t n = g.size();
  if (n < 2) return {};
  const PathLengths spl = shortest_path_lengths(g);
  double sum = 0.0;
  std::size_t connected = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || !spl.reachable(i, j)) continue;
      sum += spl(i, j);
      ++connected;
    }
  }
  const double ordered = static_cast<double>(n * (n - 1));
  SplStats s;
  if (connected > 0) s.mean = sum / static_cast<double>(connected);
  s.disconnected_fraction = 1.0 - static_cast<double>(connected) / ordered;
  return s;
}

}  // namespace

NetworkSummary network_summary(const Graph& g, std::size_t brg_samples, std::uint64_t seed) {
  NetworkSummary s;
  s.nodes = g.size();
  s.edges = g.edge_count();
  s.avg_degree = g.size() == 0 ? 0.0 : 2.0 * static_cast<double>(g.edge_count()) / static_cast<double>(g.size());
  const SplStats own = spl_stats(g);
  s.avg_spl = own.mean;
  s.disconnected_fraction = own.disconnected_fraction;
  s.avg_local_clustering = average_local_clustering(g);
  s.brg_samples = brg_samples;
  s.seed = seed;

  if (brg_samples == 0) {
    s.brg_avg_spl = s.brg_avg_clustering = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  std::mt19937_64 rng(seed);
  double spl_sum = 0.0;
  std::size_t spl_count = 0;
  double clust_sum = 0.0;
  double disc_sum = 0.0;
  for (std::size_t b = 0; b < brg_samples; ++b) {
    const Graph r = random_gnm(g.size(), g.edge_count(), rng);
    const SplStats rs = spl_stats(r);
    if (std::isfinite(rs.mean)) {
      spl_sum += rs.mean;
      ++spl_count;
    }
    disc_sum += rs.disconnected_fraction;
    clust_sum += average_local_clustering(r);
  }
  s.brg_avg_spl = spl_count > 0 ? spl_sum / static_cast<double>(spl_count)
                                : std::numeric_limits<double>::quiet_NaN();
  s.brg_avg_clustering = clust_sum / static_cast<double>(brg_samples);
  s.brg_disconnected_fraction = disc_sum / static_cast<double>(brg_samples);
  return s;
}

}  // namespace gnar
