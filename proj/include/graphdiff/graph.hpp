#ifndef GRAPHDIFF_GRAPH_HPP
#define GRAPHDIFF_GRAPH_HPP

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace graphdiff {

/// Dense vertex index, stable once the graph is built.
struct VertexId {
  std::size_t value = 0;
  friend bool operator==(VertexId, VertexId) = default;
  friend auto operator<=>(VertexId, VertexId) = default;
};

/// Dense edge index, stable once the graph is built.
struct EdgeId {
  std::size_t value = 0;
  friend bool operator==(EdgeId, EdgeId) = default;
  friend auto operator<=>(EdgeId, EdgeId) = default;
};

inline constexpr double kInfiniteLength = std::numeric_limits<double>::infinity();

/// An edge is parametrized by [0, length]. Infinite edges are rays [0, inf)
/// attached to their initial vertex only.
struct Edge {
  EdgeId id;
  VertexId initial;
  std::optional<VertexId> terminal;
  double length = 1.0;

  bool infinite() const { return !terminal.has_value(); }
  bool self_loop() const { return terminal && *terminal == initial; }
};

/// Input to build_graph. Vertex references are by name.
struct GraphDescription {
  struct EdgeSpec {
    std::string from;
    std::optional<std::string> to;
    double length = 1.0;  // kInfiniteLength for rays
  };
  std::vector<std::string> vertices;
  std::vector<EdgeSpec> edges;
  bool strict_topology = false;
  /// Accept graphs without a ray (single intervals, finite networks).
  bool allow_compact = false;
};

/// Where an edge touches a vertex: at coordinate 0 or at coordinate length.
struct EdgeEnd {
  EdgeId edge;
  bool at_terminal = false;
};

class MetricGraph {
 public:
  std::size_t vertex_count() const { return names_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  const Edge& edge(EdgeId e) const { return edges_.at(e.value); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::string& vertex_name(VertexId v) const { return names_.at(v.value); }
  std::optional<VertexId> find_vertex(const std::string& name) const;

  /// E_v: every edge end touching v. A self-loop contributes two ends.
  const std::vector<EdgeEnd>& incident(VertexId v) const { return incident_.at(v.value); }
  std::size_t degree(VertexId v) const { return incident(v).size(); }

  const std::vector<EdgeId>& finite_edges() const { return finite_; }
  const std::vector<EdgeId>& infinite_edges() const { return infinite_; }
  bool strict_topology() const { return strict_; }

  /// Non-fatal topology remarks (degree 1/2 vertices outside strict mode).
  const std::vector<std::string>& warnings() const { return warnings_; }

  /// All-pairs vertex distances along finite edges.
  const Eigen::MatrixXd& vertex_distances() const { return vertex_dist_; }

  /// Sum of finite edge lengths.
  double finite_length() const;

 private:
  friend MetricGraph build_graph(const GraphDescription&);
  friend MetricGraph rescale_graph(const MetricGraph&, double);

  std::vector<std::string> names_;
  std::vector<Edge> edges_;
  std::vector<std::vector<EdgeEnd>> incident_;
  std::vector<EdgeId> finite_;
  std::vector<EdgeId> infinite_;
  std::vector<std::string> warnings_;
  Eigen::MatrixXd vertex_dist_;
  bool strict_ = false;
};

/// Validates and indexes a graph description. Throws std::invalid_argument on
/// disconnected graphs, nonpositive lengths, rays with two endpoints, graphs
/// without a ray (unless allow_compact), and (strict mode) vertices of degree <= 2.
MetricGraph build_graph(const GraphDescription& spec);

/// Floyd-Warshall over finite edges; parallel edges keep the shortest.
Eigen::MatrixXd vertex_distance_matrix(const MetricGraph& g);

/// A point on the graph: an edge and a coordinate in [0, length].
struct GraphPoint {
  EdgeId edge;
  double coord = 0.0;
};

bool valid_point(const MetricGraph& g, const GraphPoint& x);

/// Shortest-path distance between two points of the graph.
double graph_distance(const MetricGraph& g, const GraphPoint& x, const GraphPoint& y);

/// Same topology with finite lengths divided by lambda.
MetricGraph rescale_graph(const MetricGraph& g, double lambda);

/// True if `h` is `g` rescaled by lambda (same topology, lengths l/lambda).
bool is_rescaling_of(const MetricGraph& h, const MetricGraph& g, double lambda);

// Common shapes used by tests, examples and the built-in check suite.
GraphDescription star_graph(std::size_t rays);
/// Two vertices joined by edges of lengths 1 and 2, a self-loop of length 1.5
/// at the second vertex and one ray at each vertex: five edges, a cycle, a
/// loop and parallel edges.
GraphDescription mixed_graph();

}  // namespace graphdiff

#endif  // GRAPHDIFF_GRAPH_HPP
