#ifndef GRAPHDIFF_GRID_HPP
#define GRAPHDIFF_GRID_HPP

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "graphdiff/graph.hpp"

namespace graphdiff {

/// Uniform cells on one edge. Infinite edges are cut at the truncation length.
struct EdgeGrid {
  std::size_t cells = 0;
  double spacing = 0.0;
  double effective_length = 0.0;
  std::size_t offset = 0;  // first global cell index

  double center(std::size_t k) const { return (static_cast<double>(k) + 0.5) * spacing; }
};

/// Finite-volume grid over a metric graph. Cells are numbered edge by edge.
class Grid {
 public:
  /// `h` is the target spacing; each edge gets max(2, ceil(len/h)) cells.
  Grid(std::shared_ptr<const MetricGraph> graph, double h, double truncation);

  const MetricGraph& graph() const { return *graph_; }
  const std::shared_ptr<const MetricGraph>& graph_ptr() const { return graph_; }
  const EdgeGrid& edge(EdgeId e) const { return edges_.at(e.value); }
  std::size_t size() const { return total_; }
  double truncation() const { return truncation_; }
  double target_spacing() const { return h_; }
  double max_spacing() const;

  /// Cell measures w_i, laid out like the values of a GraphFunction.
  const Eigen::VectorXd& weights() const { return weights_; }

  /// Edge and center coordinate of a global cell index.
  GraphPoint cell_point(std::size_t i) const;
  EdgeId cell_edge(std::size_t i) const { return EdgeId{cell_edge_[i]}; }

 private:
  std::shared_ptr<const MetricGraph> graph_;
  std::vector<EdgeGrid> edges_;
  std::vector<std::size_t> cell_edge_;
  Eigen::VectorXd weights_;
  std::size_t total_ = 0;
  double h_ = 0.0;
  double truncation_ = 0.0;
};

/// Cell-averaged samples of a function on the graph.
class GraphFunction {
 public:
  GraphFunction() = default;
  explicit GraphFunction(std::shared_ptr<const Grid> grid);
  GraphFunction(std::shared_ptr<const Grid> grid, Eigen::VectorXd values);

  const Grid& grid() const { return *grid_; }
  const std::shared_ptr<const Grid>& grid_ptr() const { return grid_; }

  Eigen::VectorXd& values() { return values_; }
  const Eigen::VectorXd& values() const { return values_; }

  auto on_edge(EdgeId e) { return values_.segment(offset(e), count(e)); }
  auto on_edge(EdgeId e) const { return values_.segment(offset(e), count(e)); }

 private:
  Eigen::Index offset(EdgeId e) const { return static_cast<Eigen::Index>(grid_->edge(e).offset); }
  Eigen::Index count(EdgeId e) const { return static_cast<Eigen::Index>(grid_->edge(e).cells); }

  std::shared_ptr<const Grid> grid_;
  Eigen::VectorXd values_;
};

/// Samples f(edge, x) at every cell center.
GraphFunction sample_centers(std::shared_ptr<const Grid> grid,
                             const std::function<double(EdgeId, double)>& f);

enum class GraphPart { finite, infinite };

/// A function seen only on a subset of edges. Holds a reference; the
/// function must outlive the view.
struct RestrictedView {
  const GraphFunction* function = nullptr;
  std::vector<EdgeId> edges;
};

RestrictedView restrict(const GraphFunction& f, GraphPart part);
RestrictedView whole(const GraphFunction& f);

/// Midpoint quadrature of f over the graph.
double integrate(const GraphFunction& f);
double integrate(const RestrictedView& f);

/// L^p norm for 1 <= p <= inf. Throws for p < 1.
double lp_norm(const GraphFunction& f, double p);
double lp_norm(const RestrictedView& f, double p);

/// Piecewise-linear reconstruction through cell centers; constant in the
/// half cells next to edge ends and zero past the truncation length.
double evaluate(const GraphFunction& f, const GraphPoint& x);

/// x -> lambda * u(lambda x), sampled onto `target`, which must be a grid on
/// rescale_graph(graph, lambda).
GraphFunction rescale_function(const GraphFunction& u, double lambda,
                               std::shared_ptr<const Grid> target);

}  // namespace graphdiff

#endif  // GRAPHDIFF_GRID_HPP
