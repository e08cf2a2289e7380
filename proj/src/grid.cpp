#include "graphdiff/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace graphdiff {

Grid::Grid(std::shared_ptr<const MetricGraph> graph, double h, double truncation)
    : graph_(std::move(graph)), h_(h), truncation_(truncation) {
  if (!graph_) throw std::invalid_argument("Grid: null graph");
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("Grid: h must be positive");
  if (!graph_->infinite_edges().empty() && !(truncation > 0.0 && std::isfinite(truncation))) {
    throw std::invalid_argument("Grid: truncation length must be positive and finite");
  }
  edges_.reserve(graph_->edge_count());
  for (const Edge& e : graph_->edges()) {
    EdgeGrid eg;
    eg.effective_length = e.infinite() ? truncation : e.length;
    eg.cells = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(eg.effective_length / h - 1e-9)));
    eg.spacing = eg.effective_length / static_cast<double>(eg.cells);
    eg.offset = total_;
    total_ += eg.cells;
    edges_.push_back(eg);
  }
  weights_.resize(static_cast<Eigen::Index>(total_));
  cell_edge_.resize(total_);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const EdgeGrid& eg = edges_[e];
    for (std::size_t k = 0; k < eg.cells; ++k) {
      weights_[static_cast<Eigen::Index>(eg.offset + k)] = eg.spacing;
      cell_edge_[eg.offset + k] = e;
    }
  }
}

double Grid::max_spacing() const {
  double m = 0.0;
  for (const EdgeGrid& eg : edges_) m = std::max(m, eg.spacing);
  return m;
}

GraphPoint Grid::cell_point(std::size_t i) const {
  const std::size_t e = cell_edge_.at(i);
  return {EdgeId{e}, edges_[e].center(i - edges_[e].offset)};
}

GraphFunction::GraphFunction(std::shared_ptr<const Grid> grid)
    : grid_(std::move(grid)), values_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid_->size()))) {}

GraphFunction::GraphFunction(std::shared_ptr<const Grid> grid, Eigen::VectorXd values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != static_cast<Eigen::Index>(grid_->size())) {
    throw std::invalid_argument("GraphFunction: value count does not match grid");
  }
  if (!values_.allFinite()) throw std::invalid_argument("GraphFunction: nonfinite value");
}

GraphFunction sample_centers(std::shared_ptr<const Grid> grid,
                             const std::function<double(EdgeId, double)>& f) {
  GraphFunction out(grid);
  for (std::size_t i = 0; i < grid->size(); ++i) {
    const GraphPoint x = grid->cell_point(i);
    out.values()[static_cast<Eigen::Index>(i)] = f(x.edge, x.coord);
  }
  return out;
}

RestrictedView restrict(const GraphFunction& f, GraphPart part) {
  const MetricGraph& g = f.grid().graph();
  return {&f, part == GraphPart::finite ? g.finite_edges() : g.infinite_edges()};
}

RestrictedView whole(const GraphFunction& f) {
  RestrictedView v{&f, {}};
  for (std::size_t e = 0; e < f.grid().graph().edge_count(); ++e) v.edges.push_back(EdgeId{e});
  return v;
}

double integrate(const RestrictedView& f) {
  double total = 0.0;
  for (EdgeId e : f.edges) total += f.function->grid().edge(e).spacing * f.function->on_edge(e).sum();
  return total;
}

double integrate(const GraphFunction& f) { return integrate(whole(f)); }

double lp_norm(const RestrictedView& f, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (EdgeId e : f.edges) {
      const auto seg = f.function->on_edge(e);
      if (seg.size() > 0) m = std::max(m, seg.cwiseAbs().maxCoeff());
    }
    return m;
  }
  double acc = 0.0;
  for (EdgeId e : f.edges) {
    const double h = f.function->grid().edge(e).spacing;
    const auto seg = f.function->on_edge(e);
    if (p == 1.0) {
      acc += h * seg.cwiseAbs().sum();
    } else if (p == 2.0) {
      acc += h * seg.squaredNorm();
    } else {
      acc += h * seg.cwiseAbs().array().pow(p).sum();
    }
  }
  return p == 1.0 ? acc : std::pow(acc, 1.0 / p);
}

double lp_norm(const GraphFunction& f, double p) { return lp_norm(whole(f), p); }

double evaluate(const GraphFunction& f, const GraphPoint& x) {
  const EdgeGrid& eg = f.grid().edge(x.edge);
  const auto seg = f.on_edge(x.edge);
  if (x.coord > eg.effective_length) return 0.0;
  const double s = x.coord / eg.spacing - 0.5;
  if (s <= 0.0) return seg[0];
  const auto last = static_cast<Eigen::Index>(eg.cells - 1);
  if (s >= static_cast<double>(last)) return seg[last];
  const auto k = static_cast<Eigen::Index>(std::floor(s));
  const double frac = s - static_cast<double>(k);
  return (1.0 - frac) * seg[k] + frac * seg[k + 1];
}

GraphFunction rescale_function(const GraphFunction& u, double lambda,
                               std::shared_ptr<const Grid> target) {
  if (!(lambda > 0.0)) throw std::invalid_argument("rescale_function: lambda must be positive");
  if (!is_rescaling_of(target->graph(), u.grid().graph(), lambda)) {
    throw std::invalid_argument("rescale_function: target grid is not on the rescaled graph");
  }
  return sample_centers(target, [&](EdgeId e, double x) {
    return lambda * evaluate(u, GraphPoint{e, lambda * x});
  });
}

}  // namespace graphdiff
