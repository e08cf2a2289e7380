#include "graphdiff/time_stepping.hpp"

#include <cmath>
#include <stdexcept>

#include "graphdiff/csv.hpp"

namespace graphdiff {

TimeScheme parse_scheme(const std::string& name) {
  if (name == "implicit_euler") return TimeScheme::implicit_euler;
  if (name == "crank_nicolson") return TimeScheme::crank_nicolson;
  if (name == "explicit_euler") return TimeScheme::explicit_euler;
  throw std::invalid_argument("unknown time scheme '" + name + "'");
}

std::string to_string(TimeScheme s) {
  switch (s) {
    case TimeScheme::implicit_euler: return "implicit_euler";
    case TimeScheme::crank_nicolson: return "crank_nicolson";
    case TimeScheme::explicit_euler: return "explicit_euler";
  }
  return "?";
}

std::size_t step_count(double final_time, double dt) {
  if (!(final_time > 0.0)) throw std::invalid_argument("final time must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  return static_cast<std::size_t>(std::ceil(final_time / dt - 1e-9));
}

void check_truncation_window(const Grid& grid, double final_time, double diffusivity,
                             double reach) {
  if (grid.graph().infinite_edges().empty()) return;
  const double front = 10.0 * std::sqrt(diffusivity * final_time) + reach;
  if (front > grid.truncation() * (1.0 + 1e-12)) {
    throw std::invalid_argument("L_trunc=" + format_number(grid.truncation()) +
                                " is below the validity front " + format_number(front) +
                                " for T=" + format_number(final_time));
  }
}

Observation basic_observation(const GraphFunction& u, double t) {
  Observation o;
  o.t = t;
  o.mass = integrate(u);
  o.l1 = lp_norm(u, 1.0);
  o.l2 = lp_norm(u, 2.0);
  o.linf = lp_norm(u, kInfiniteLength);
  return o;
}

}  // namespace graphdiff
