#include "graphdiff/initial_data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace graphdiff {

DatumKind parse_datum_kind(const std::string& name) {
  if (name == "bump") return DatumKind::bump;
  if (name == "gaussian") return DatumKind::gaussian;
  if (name == "indicator") return DatumKind::indicator;
  throw std::invalid_argument("unknown initial datum kind '" + name + "'");
}

std::string to_string(DatumKind k) {
  switch (k) {
    case DatumKind::bump: return "bump";
    case DatumKind::gaussian: return "gaussian";
    case DatumKind::indicator: return "indicator";
  }
  return "?";
}

GraphFunction make_datum(std::shared_ptr<const Grid> grid, const DatumSpec& spec) {
  const MetricGraph& g = grid->graph();
  if (spec.edge.value >= g.edge_count()) {
    throw std::invalid_argument("initial datum references edge " + std::to_string(spec.edge.value) +
                                " but the graph has " + std::to_string(g.edge_count()));
  }
  if (!(spec.width > 0.0)) throw std::invalid_argument("initial datum width must be positive");
  if (!std::isfinite(spec.mass)) throw std::invalid_argument("initial datum mass must be finite");

  GraphFunction u(grid);
  const EdgeGrid& eg = grid->edge(spec.edge);
  auto seg = u.on_edge(spec.edge);
  const double c = spec.center;
  const double w = spec.width;
  for (std::size_t k = 0; k < eg.cells; ++k) {
    const double x = eg.center(k);
    double v = 0.0;
    switch (spec.kind) {
      case DatumKind::bump:
        if (std::abs(x - c) < w) v = 0.5 * (1.0 + std::cos(std::numbers::pi * (x - c) / w));
        break;
      case DatumKind::gaussian:
        v = std::exp(-0.5 * (x - c) * (x - c) / (w * w));
        break;
      case DatumKind::indicator: {
        const double left = static_cast<double>(k) * eg.spacing;
        const double overlap = std::min(left + eg.spacing, c + w) - std::max(left, c - w);
        v = std::max(0.0, overlap) / eg.spacing;
        break;
      }
    }
    seg[static_cast<Eigen::Index>(k)] = v;
  }
  const double m = integrate(u);
  if (!(m > 0.0)) {
    throw std::invalid_argument("initial datum has no support on edge " + std::to_string(spec.edge.value));
  }
  u.values() *= spec.mass / m;
  return u;
}

GraphFunction make_datum(std::shared_ptr<const Grid> grid, const std::vector<DatumSpec>& specs) {
  GraphFunction total(grid);
  for (const DatumSpec& s : specs) total.values() += make_datum(grid, s).values();
  return total;
}

}  // namespace graphdiff
