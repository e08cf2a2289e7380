#include "graphdiff/graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <unordered_map>

namespace graphdiff {

namespace {

struct EndpointDistance {
  VertexId vertex;
  double distance;
};

// Distances from x to the (one or two) endpoints of its edge.
std::vector<EndpointDistance> endpoint_distances(const MetricGraph& g, const GraphPoint& x) {
  const Edge& e = g.edge(x.edge);
  std::vector<EndpointDistance> out{{e.initial, x.coord}};
  if (e.terminal) out.push_back({*e.terminal, e.length - x.coord});
  return out;
}

void check_connected(const MetricGraph& g) {
  const std::size_t n = g.vertex_count();
  if (n == 0) throw std::invalid_argument("graph has no vertices");
  std::vector<bool> seen(n, false);
  std::queue<std::size_t> todo;
  todo.push(0);
  seen[0] = true;
  while (!todo.empty()) {
    const std::size_t v = todo.front();
    todo.pop();
    for (const EdgeEnd& end : g.incident(VertexId{v})) {
      const Edge& e = g.edge(end.edge);
      if (!e.terminal) continue;
      const std::size_t w = end.at_terminal ? e.initial.value : e.terminal->value;
      if (!seen[w]) {
        seen[w] = true;
        todo.push(w);
      }
    }
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (!seen[v]) {
      throw std::invalid_argument("graph is disconnected: vertex '" + g.vertex_name(VertexId{v}) +
                                  "' is unreachable from '" + g.vertex_name(VertexId{0}) + "'");
    }
  }
}

}  // namespace

std::optional<VertexId> MetricGraph::find_vertex(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return VertexId{static_cast<std::size_t>(it - names_.begin())};
}

double MetricGraph::finite_length() const {
  double total = 0.0;
  for (EdgeId e : finite_) total += edge(e).length;
  return total;
}

MetricGraph build_graph(const GraphDescription& spec) {
  MetricGraph g;
  g.strict_ = spec.strict_topology;
  g.names_ = spec.vertices;

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < spec.vertices.size(); ++i) {
    if (!index.emplace(spec.vertices[i], i).second) {
      throw std::invalid_argument("duplicate vertex name '" + spec.vertices[i] + "'");
    }
  }
  auto lookup = [&](const std::string& name, std::size_t edge) {
    const auto it = index.find(name);
    if (it == index.end()) {
      throw std::invalid_argument("edge " + std::to_string(edge) + " references unknown vertex '" +
                                  name + "'");
    }
    return VertexId{it->second};
  };

  g.incident_.resize(spec.vertices.size());
  for (std::size_t i = 0; i < spec.edges.size(); ++i) {
    const auto& es = spec.edges[i];
    Edge e;
    e.id = EdgeId{i};
    e.initial = lookup(es.from, i);
    e.length = es.length;
    if (std::isnan(es.length) || es.length <= 0.0) {
      throw std::invalid_argument("edge " + std::to_string(i) + " has nonpositive length");
    }
    if (es.to) {
      if (std::isinf(es.length)) {
        throw std::invalid_argument("edge " + std::to_string(i) +
                                    " is infinite but has two endpoints");
      }
      e.terminal = lookup(*es.to, i);
    } else if (!std::isinf(es.length)) {
      throw std::invalid_argument("edge " + std::to_string(i) +
                                  " has one endpoint but finite length");
    }
    g.incident_[e.initial.value].push_back({e.id, false});
    if (e.terminal) g.incident_[e.terminal->value].push_back({e.id, true});
    (e.infinite() ? g.infinite_ : g.finite_).push_back(e.id);
    g.edges_.push_back(e);
  }

  if (g.infinite_.empty() && !spec.allow_compact) {
    throw std::invalid_argument("graph must have at least one infinite edge");
  }
  check_connected(g);

  for (std::size_t v = 0; v < g.vertex_count(); ++v) {
    const std::size_t deg = g.degree(VertexId{v});
    if (deg <= 2) {
      const std::string msg = "vertex '" + g.names_[v] + "' has degree " + std::to_string(deg);
      if (g.strict_) throw std::invalid_argument(msg + " (strict topology requires >= 3)");
      g.warnings_.push_back(msg);
    }
  }

  g.vertex_dist_ = vertex_distance_matrix(g);
  return g;
}

Eigen::MatrixXd vertex_distance_matrix(const MetricGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.vertex_count());
  Eigen::MatrixXd d = Eigen::MatrixXd::Constant(n, n, kInfiniteLength);
  d.diagonal().setZero();
  for (const Edge& e : g.edges()) {
    if (!e.terminal) continue;
    const auto a = static_cast<Eigen::Index>(e.initial.value);
    const auto b = static_cast<Eigen::Index>(e.terminal->value);
    if (a == b) continue;
    d(a, b) = std::min(d(a, b), e.length);
    d(b, a) = d(a, b);
  }
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) d(i, j) = std::min(d(i, j), d(i, k) + d(k, j));
  return d;
}

bool valid_point(const MetricGraph& g, const GraphPoint& x) {
  if (x.edge.value >= g.edge_count()) return false;
  return x.coord >= 0.0 && x.coord <= g.edge(x.edge).length && std::isfinite(x.coord);
}

double graph_distance(const MetricGraph& g, const GraphPoint& a, const GraphPoint& b) {
  if (!valid_point(g, a) || !valid_point(g, b)) {
    throw std::invalid_argument("graph_distance: point outside its edge");
  }
  // Canonical argument order keeps d(x,y) == d(y,x) bit for bit.
  const bool swap = b.edge < a.edge || (b.edge == a.edge && b.coord < a.coord);
  const GraphPoint& x = swap ? b : a;
  const GraphPoint& y = swap ? a : b;
  double best = kInfiniteLength;
  if (x.edge == y.edge) best = std::abs(x.coord - y.coord);
  const Eigen::MatrixXd& vd = g.vertex_distances();
  for (const auto& [v, dx] : endpoint_distances(g, x)) {
    for (const auto& [w, dy] : endpoint_distances(g, y)) {
      const double via = dx + vd(static_cast<Eigen::Index>(v.value), static_cast<Eigen::Index>(w.value)) + dy;
      best = std::min(best, via);
    }
  }
  return best;
}

MetricGraph rescale_graph(const MetricGraph& g, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("rescale_graph: lambda must be positive");
  }
  MetricGraph out = g;
  for (Edge& e : out.edges_) {
    if (e.terminal) e.length /= lambda;
  }
  out.vertex_dist_ = g.vertex_dist_ / lambda;
  return out;
}

bool is_rescaling_of(const MetricGraph& h, const MetricGraph& g, double lambda) {
  if (h.vertex_count() != g.vertex_count() || h.edge_count() != g.edge_count()) return false;
  for (std::size_t i = 0; i < g.edge_count(); ++i) {
    const Edge& a = g.edges()[i];
    const Edge& b = h.edges()[i];
    if (a.initial != b.initial || a.terminal != b.terminal) return false;
    if (a.terminal && std::abs(b.length - a.length / lambda) > 1e-12 * a.length / lambda) return false;
  }
  return true;
}

GraphDescription star_graph(std::size_t rays) {
  GraphDescription d;
  d.vertices = {"o"};
  for (std::size_t i = 0; i < rays; ++i) d.edges.push_back({"o", std::nullopt, kInfiniteLength});
  return d;
}

GraphDescription mixed_graph() {
  GraphDescription d;
  d.vertices = {"a", "b"};
  d.edges = {{"a", "b", 1.0},
             {"a", "b", 2.0},
             {"b", "b", 1.5},
             {"a", std::nullopt, kInfiniteLength},
             {"b", std::nullopt, kInfiniteLength}};
  d.strict_topology = true;
  return d;
}

}  // namespace graphdiff
