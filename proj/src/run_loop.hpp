#ifndef GRAPHDIFF_SRC_RUN_LOOP_HPP
#define GRAPHDIFF_SRC_RUN_LOOP_HPP

#include <algorithm>
#include <cmath>

#include "graphdiff/time_stepping.hpp"

namespace graphdiff::detail {

// Shared driver for the local and nonlocal solvers. `advance` updates the
// values in place by one step; `measure` returns the gradient/energy
// quadrature stored per step and in observations.
template <class Advance, class Measure, class Fill>
RunRecord run_loop(const GraphFunction& u0, const RunOptions& options, std::size_t steps, double dt,
                   Advance&& advance, Measure&& measure, Fill&& fill) {
  RunRecord run;
  run.dt = dt;
  run.scheme = options.scheme;

  std::vector<std::size_t> obs_steps;
  for (double t : options.observe_times) {
    if (t < 0.0 || t > options.final_time * (1.0 + 1e-12)) {
      throw std::invalid_argument("observation time outside [0, T]");
    }
    obs_steps.push_back(static_cast<std::size_t>(std::llround(t / dt)));
  }
  std::sort(obs_steps.begin(), obs_steps.end());
  obs_steps.erase(std::unique(obs_steps.begin(), obs_steps.end()), obs_steps.end());

  HeatState state{0.0, u0, integrate(u0)};
  auto next_obs = obs_steps.begin();
  auto observe = [&](std::size_t n) {
    while (next_obs != obs_steps.end() && *next_obs == n) {
      Observation o = basic_observation(state.u, state.t);
      fill(o, state.u.values());
      run.observations.push_back(o);
      if (options.on_observe) options.on_observe(state);
      ++next_obs;
    }
  };
  auto record = [&] {
    if (options.record_steps) {
      run.l2_squared.push_back(state.u.values().dot(state.u.grid().weights().cwiseProduct(state.u.values())));
      run.grad_squared.push_back(measure(state.u.values()));
    }
    if (options.keep_trajectory) run.trajectory.push_back(state.u.values());
  };

  record();
  observe(0);
  for (std::size_t n = 1; n <= steps; ++n) {
    advance(state.u.values());
    state.t = static_cast<double>(n) * dt;
    record();
    observe(n);
  }
  run.final_state = std::move(state);
  return run;
}

}  // namespace graphdiff::detail

#endif  // GRAPHDIFF_SRC_RUN_LOOP_HPP
