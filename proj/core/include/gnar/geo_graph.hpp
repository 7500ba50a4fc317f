#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace gnar {

inline constexpr double kEarthRadiusKm = 6371.0;

struct GeoPoint {
  std::string node_id;
  double lat_deg = 0.0;
  double lon_deg = 0.0;
  std::optional<double> population;
};

/// Unordered vertex pair, always stored with first < second.
using Edge = std::pair<std::size_t, std::size_t>;

/// Simple, undirected, unweighted graph over labelled vertices.
/// Immutable once built; every constructor normalises and deduplicates edges.
class Graph {
 public:
  Graph() = default;

  /// Throws InvalidInput on duplicate labels, self-loops or out-of-range
  /// endpoints. Duplicate edges (in either orientation) are stored once.
  Graph(std::vector<std::string> labels, std::vector<Edge> edges);

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<std::size_t>& neighbours(std::size_t i) const { return adjacency_.at(i); }
  std::size_t degree(std::size_t i) const { return adjacency_.at(i).size(); }
  bool has_edge(std::size_t i, std::size_t j) const;
  std::optional<std::size_t> index_of(const std::string& label) const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::vector<std::string> labels_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> adjacency_;
};

/// r-th stage neighbourhoods N^(r)(i) for r = 1..r_max; stage r holds the
/// vertices at shortest-path length exactly r from i, sorted by index.
class StageNeighbourhoods {
 public:
  StageNeighbourhoods() = default;
  StageNeighbourhoods(std::size_t r_max, std::vector<std::vector<std::vector<std::size_t>>> stages)
      : r_max_(r_max), stages_(std::move(stages)) {}

  std::size_t size() const noexcept { return stages_.size(); }
  std::size_t r_max() const noexcept { return r_max_; }
  /// r is one-based; r > r_max() is a logic error.
  const std::vector<std::size_t>& stage(std::size_t i, std::size_t r) const {
    return stages_.at(i).at(r - 1);
  }

 private:
  std::size_t r_max_ = 0;
  std::vector<std::vector<std::vector<std::size_t>>> stages_;
};

/// All-pairs hop counts. kUnreachable marks disconnected pairs.
class PathLengths {
 public:
  static constexpr int kUnreachable = std::numeric_limits<int>::max();

  PathLengths() = default;
  PathLengths(std::size_t n, std::vector<int> hops) : n_(n), hops_(std::move(hops)) {}

  std::size_t size() const noexcept { return n_; }
  int operator()(std::size_t i, std::size_t j) const { return hops_[i * n_ + j]; }
  bool reachable(std::size_t i, std::size_t j) const { return (*this)(i, j) != kUnreachable; }

 private:
  std::size_t n_ = 0;
  std::vector<int> hops_;
};

struct NetworkSummary {
  std::size_t nodes = 0;
  std::size_t edges = 0;
  double avg_degree = 0.0;
  double avg_spl = 0.0;
  double avg_local_clustering = 0.0;
  /// Fraction of ordered vertex pairs with no connecting path.
  double disconnected_fraction = 0.0;
  double brg_avg_spl = 0.0;
  double brg_avg_clustering = 0.0;
  double brg_disconnected_fraction = 0.0;
  std::size_t brg_samples = 0;
  std::uint64_t seed = 0;
};

// Points and distances

/// Throws InvalidInput for duplicate ids, non-finite or out-of-range
/// coordinates, and negative populations.
void validate_points(std::span<const GeoPoint> points);

/// Spherical law of cosines with the cosine clamped to [-1, 1].
double great_circle_distance(const GeoPoint& a, const GeoPoint& b,
                             double radius_km = kEarthRadiusKm);

Eigen::MatrixXd distance_matrix(std::span<const GeoPoint> points,
                                double radius_km = kEarthRadiusKm);

std::vector<std::string> labels_of(std::span<const GeoPoint> points);

// Planar geometry used by the Delaunay family

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Equirectangular projection about the mean latitude: x = lon cos(mean lat), y = lat.
std::vector<Vec2> project_equirectangular(std::span<const GeoPoint> points);

/// Delaunay edges by incremental hull triangulation followed by Lawson flips.
/// Cocircular configurations keep whichever diagonal the sweep produced.
/// Throws DegenerateGeometry for fewer than 3 points or all-collinear input,
/// InvalidInput for coincident points.
std::vector<Edge> delaunay_edges(std::span<const Vec2> points);

/// Keeps (x, y) iff |xy|^2 <= |xz|^2 + |yz|^2 for every other z.
std::vector<Edge> gabriel_filter(std::span<const Vec2> points, std::span<const Edge> candidates);

/// Keeps (x, y) iff |xy| < d_x + d_y, d_x being x's nearest-neighbour distance.
std::vector<Edge> soi_filter(std::span<const Vec2> points, std::span<const Edge> candidates);

/// Keeps (x, y) iff |xy| <= max(|xz|, |yz|) for every other z.
std::vector<Edge> relative_filter(std::span<const Vec2> points, std::span<const Edge> candidates);

// Network constructions

Graph build_knn(std::span<const GeoPoint> points, std::size_t k,
                double radius_km = kEarthRadiusKm);
Graph build_dnn(std::span<const GeoPoint> points, double d_max_km,
                double radius_km = kEarthRadiusKm);
Graph build_delaunay(std::span<const GeoPoint> points);
Graph derive_gabriel(std::span<const GeoPoint> points);
Graph derive_soi(std::span<const GeoPoint> points);
Graph derive_relative(std::span<const GeoPoint> points);
Graph build_from_edgelist(std::vector<std::string> labels,
                          std::span<const std::pair<std::string, std::string>> edges);
Graph build_economic_hub(const Graph& base, std::span<const GeoPoint> points,
                         std::span<const std::string> hubs,
                         double radius_km = kEarthRadiusKm);
Graph build_complete(std::vector<std::string> labels);

// Structure

StageNeighbourhoods stage_neighbourhoods(const Graph& g, std::size_t r_max);
PathLengths shortest_path_lengths(const Graph& g);
double average_local_clustering(const Graph& g);

/// Uniform G(n, m) draw; vertices labelled "0".."n-1".
Graph random_gnm(std::size_t n, std::size_t m, std::mt19937_64& rng);

NetworkSummary network_summary(const Graph& g, std::size_t brg_samples = 100,
                               std::uint64_t seed = 0);

}  // namespace gnar
