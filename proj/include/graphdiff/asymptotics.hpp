#ifndef GRAPHDIFF_ASYMPTOTICS_HPP
#define GRAPHDIFF_ASYMPTOTICS_HPP

#include <utility>
#include <vector>

#include "graphdiff/grid.hpp"

namespace graphdiff {

struct ProfileParams {
  double mass = 1.0;          // M
  std::size_t rays = 1;       // N, number of infinite edges
  double diffusivity = 1.0;   // A
};

/// G(s) = exp(-s^2/4) / sqrt(4 pi).
double gaussian_profile(double s);

/// Large-time profile: (2M/N) (At)^{-1/2} G(x / sqrt(At)) on the rays,
/// with x measured from the attaching vertex, and the constant
/// (2M/N) (At)^{-1/2} G(0) on the finite edges.
double profile_U_M(const MetricGraph& g, const ProfileParams& p, double t, const GraphPoint& x);

/// The profile sampled at the cell centers of a grid.
GraphFunction profile_on_grid(std::shared_ptr<const Grid> grid, const ProfileParams& p, double t);

/// Profile parameters from a discrete datum: M by quadrature, N from the graph.
ProfileParams profile_params_for(const GraphFunction& u0, double diffusivity = 1.0);

struct WeightedError {
  double infinite_part = 0.0;  // t^{(1-1/p)/2} ||u - U_M||_{L^p(rays)}
  double finite_part = 0.0;    // t^{1/2} ||u - U_M||_{L^p(finite edges)}
};

WeightedError weighted_error(const GraphFunction& u, double t, double p, const ProfileParams& params);

struct DecaySample {
  double t;
  double norm;
};

/// Least-squares slope of log(norm) against log(t) over samples with t in
/// [window_lo, window_hi]. Needs at least 5 samples there, all positive.
double fit_decay_exponent(const std::vector<DecaySample>& series, double window_lo, double window_hi);

/// int of |u| over ray points farther than R from their vertex.
double tail_mass(const GraphFunction& u, double radius);

}  // namespace graphdiff

#endif  // GRAPHDIFF_ASYMPTOTICS_HPP
