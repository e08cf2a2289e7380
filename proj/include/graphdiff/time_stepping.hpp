#ifndef GRAPHDIFF_TIME_STEPPING_HPP
#define GRAPHDIFF_TIME_STEPPING_HPP

#include <functional>
#include <string>
#include <vector>

#include "graphdiff/grid.hpp"

namespace graphdiff {

enum class TimeScheme { implicit_euler, crank_nicolson, explicit_euler };

TimeScheme parse_scheme(const std::string& name);
std::string to_string(TimeScheme s);

struct HeatState {
  double t = 0.0;
  GraphFunction u;
  double initial_mass = 0.0;
};

/// Norms sampled by the solvers at requested times. `grad_l2` is filled by
/// the local solver, `energy` by the nonlocal one.
struct Observation {
  double t = 0.0;
  double mass = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
  double grad_l2 = 0.0;
  double energy = 0.0;
};

struct RunOptions {
  double final_time = 1.0;
  double dt = 0.0;  // 0 selects final_time / 2000
  TimeScheme scheme = TimeScheme::crank_nicolson;
  std::vector<double> observe_times;
  /// Called with the state at each observation time.
  std::function<void(const HeatState&)> on_observe;
  /// Keep ||u||^2 and the energy/gradient quadrature at every step.
  bool record_steps = true;
  /// Keep the full solution at every step (relaxation sweeps).
  bool keep_trajectory = false;
};

struct RunRecord {
  double dt = 0.0;
  TimeScheme scheme = TimeScheme::crank_nicolson;
  std::vector<Observation> observations;
  std::vector<double> l2_squared;    // per step, index 0 is the datum
  std::vector<double> grad_squared;  // ||u_x||^2 (local) or E(u) (nonlocal)
  std::vector<Eigen::VectorXd> trajectory;
  HeatState final_state;
};

/// Splits [0, T] into whole steps no longer than dt.
std::size_t step_count(double final_time, double dt);

/// Rejects runs whose diffusive front (10 sqrt(diffusivity*T)) plus `reach`
/// passes the truncation length of the infinite edges.
void check_truncation_window(const Grid& grid, double final_time, double diffusivity = 1.0,
                             double reach = 0.0);

Observation basic_observation(const GraphFunction& u, double t);

}  // namespace graphdiff

#endif  // GRAPHDIFF_TIME_STEPPING_HPP
