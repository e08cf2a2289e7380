#include "graphdiff/asymptotics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace graphdiff {

double gaussian_profile(double s) {
  return std::exp(-0.25 * s * s) / std::sqrt(4.0 * std::numbers::pi);
}

double profile_U_M(const MetricGraph& g, const ProfileParams& p, double t, const GraphPoint& x) {
  if (!(t > 0.0)) throw std::invalid_argument("profile_U_M: t must be positive");
  if (p.rays == 0 || !(p.diffusivity > 0.0)) throw std::invalid_argument("profile_U_M: invalid parameters");
  const double at = p.diffusivity * t;
  const double amplitude = 2.0 * p.mass / static_cast<double>(p.rays) / std::sqrt(at);
  if (!g.edge(x.edge).infinite()) return amplitude * gaussian_profile(0.0);
  return amplitude * gaussian_profile(x.coord / std::sqrt(at));
}

GraphFunction profile_on_grid(std::shared_ptr<const Grid> grid, const ProfileParams& p, double t) {
  const MetricGraph& g = grid->graph();
  return sample_centers(grid, [&](EdgeId e, double x) { return profile_U_M(g, p, t, {e, x}); });
}

ProfileParams profile_params_for(const GraphFunction& u0, double diffusivity) {
  return {integrate(u0), u0.grid().graph().infinite_edges().size(), diffusivity};
}

WeightedError weighted_error(const GraphFunction& u, double t, double p, const ProfileParams& params) {
  if (!(p >= 1.0)) throw std::invalid_argument("weighted_error: p must be >= 1");
  if (!(t > 0.0)) throw std::invalid_argument("weighted_error: t must be positive");
  GraphFunction diff = profile_on_grid(u.grid_ptr(), params, t);
  diff.values() = u.values() - diff.values();
  const double inv_p = std::isinf(p) ? 0.0 : 1.0 / p;
  WeightedError out;
  out.infinite_part = std::pow(t, 0.5 * (1.0 - inv_p)) * lp_norm(restrict(diff, GraphPart::infinite), p);
  out.finite_part = std::sqrt(t) * lp_norm(restrict(diff, GraphPart::finite), p);
  return out;
}

double fit_decay_exponent(const std::vector<DecaySample>& series, double window_lo, double window_hi) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t n = 0;
  for (const auto& [t, norm] : series) {
    if (t < window_lo || t > window_hi) continue;
    if (!(t > 0.0) || !(norm > 0.0)) throw std::invalid_argument("fit_decay_exponent: nonpositive sample");
    const double x = std::log(t);
    const double y = std::log(norm);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 5) throw std::invalid_argument("fit_decay_exponent: need at least 5 samples in the window");
  const double nn = static_cast<double>(n);
  return (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
}

double tail_mass(const GraphFunction& u, double radius) {
  const Grid& grid = u.grid();
  if (radius >= grid.truncation()) {
    throw std::invalid_argument("tail_mass: radius must be below the truncation length");
  }
  double total = 0.0;
  for (EdgeId e : grid.graph().infinite_edges()) {
    const EdgeGrid& eg = grid.edge(e);
    const auto seg = u.on_edge(e);
    for (std::size_t k = 0; k < eg.cells; ++k) {
      const double left = static_cast<double>(k) * eg.spacing;
      const double right = left + eg.spacing;
      if (right <= radius) continue;
      const double covered = right - std::max(left, radius);
      total += covered * std::abs(seg[static_cast<Eigen::Index>(k)]);
    }
  }
  return total;
}

}  // namespace graphdiff
