#include <doctest.h>

#include <cmath>
#include <random>

#include "graphdiff/initial_data.hpp"
#include "graphdiff/local_solver.hpp"

using namespace graphdiff;

namespace {

std::shared_ptr<const Grid> grid_on(GraphDescription d, double h, double truncation = 10.0) {
  return std::make_shared<const Grid>(std::make_shared<const MetricGraph>(build_graph(d)), h, truncation);
}

GraphDescription interval(double length) {
  GraphDescription d;
  d.vertices = {"a", "b"};
  d.edges = {{"a", "b", length}};
  d.allow_compact = true;
  return d;
}

Eigen::VectorXd random_vector(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = u(rng);
  return v;
}

// Trapezoidal sum of 2 ||u_x||^2 over the stored steps.
double dissipated(const RunRecord& run) {
  double s = 0.0;
  for (std::size_t n = 1; n < run.grad_squared.size(); ++n)
    s += run.dt * (run.grad_squared[n - 1] + run.grad_squared[n]);
  return s;
}

}  // namespace

TEST_CASE("single interval reduces to the Neumann stencil") {
  const auto g = grid_on(interval(1.0), 0.125);
  const LocalOperator op = assemble_local(g);
  const Eigen::MatrixXd a = Eigen::MatrixXd(op.laplacian());
  const Eigen::Index n = a.rows();
  REQUIRE(n == 8);
  const double h2 = 0.125 * 0.125;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double expected = 0.0;
      if (i == j) expected = (i == 0 || i == n - 1) ? -1.0 / h2 : -2.0 / h2;
      if (std::abs(i - j) == 1) expected = 1.0 / h2;
      CHECK(a(i, j) == doctest::Approx(expected).epsilon(1e-13).scale(1.0));
    }
  }
}

TEST_CASE("3-star vertex trace is the mean of the first cells") {
  const auto g = grid_on(star_graph(3), 0.1, 5.0);
  const LocalOperator op = assemble_local(g);
  const Eigen::MatrixXd t = Eigen::MatrixXd(op.trace);
  for (EdgeId e : g->graph().infinite_edges()) {
    const auto first = static_cast<Eigen::Index>(g->edge(e).offset);
    CHECK(t(0, first) == doctest::Approx(1.0 / 3.0));
  }
  CHECK(t.row(0).sum() == doctest::Approx(1.0));
}

TEST_CASE("unequal spacings weight the trace by conductance") {
  GraphDescription d;
  d.vertices = {"v", "w"};
  d.edges = {{"v", "w", 0.5}, {"v", std::nullopt, kInfiniteLength}, {"v", std::nullopt, kInfiniteLength}};
  // Edge 0 gets h = 0.25 (2 cells), rays get h = 0.1: conductances 8, 20, 20.
  const auto g = grid_on(d, 0.1, 1.0);
  CHECK(g->edge(EdgeId{0}).spacing == doctest::Approx(0.1));
  const auto g2 = std::make_shared<const Grid>(g->graph_ptr(), 0.3, 1.2);
  const LocalOperator op = assemble_local(g2);
  const Eigen::MatrixXd t = Eigen::MatrixXd(op.trace);
  const double c0 = 2.0 / g2->edge(EdgeId{0}).spacing, c1 = 2.0 / g2->edge(EdgeId{1}).spacing;
  CHECK(t(0, 0) == doctest::Approx(c0 / (c0 + 2 * c1)));
}

TEST_CASE("constants are equilibria and stepping preserves them") {
  const auto g = grid_on(mixed_graph(), 0.05, 5.0);
  const LocalOperator op = assemble_local(g);
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(g->size()), 2.5);
  CHECK(op.apply(c).cwiseAbs().maxCoeff() < 1e-9);
  for (TimeScheme s : {TimeScheme::implicit_euler, TimeScheme::crank_nicolson}) {
    const HeatState next = step_local(op, {0.0, GraphFunction(g, c), 0.0}, 10.0, s);
    CHECK((next.u.values().array() - 2.5).abs().maxCoeff() < 1e-11);
  }
  CHECK_THROWS_AS(LocalStepper(op, 0.1, TimeScheme::explicit_euler), std::invalid_argument);
  CHECK_THROWS_AS(LocalStepper(op, -0.1, TimeScheme::implicit_euler), std::invalid_argument);
}

TEST_CASE("implicit Euler decays a cosine mode by the discrete eigenvalue") {
  const double l = 2.0, h = 0.01, dt = 0.01;
  const auto g = grid_on(interval(l), h);
  const LocalOperator op = assemble_local(g);
  GraphFunction u = sample_centers(g, [&](EdgeId, double x) { return std::cos(M_PI * x / l); });
  const HeatState next = step_local(op, {0.0, u, 0.0}, dt, TimeScheme::implicit_euler);
  const double lambda_h = 4.0 / (h * h) * std::pow(std::sin(M_PI * h / (2.0 * l)), 2);
  const Eigen::VectorXd expected = u.values() / (1.0 + dt * lambda_h);
  CHECK((next.u.values() - expected).cwiseAbs().maxCoeff() < 1e-12);
  // And the continuum factor up to O(h^2).
  const double ratio = next.u.values()[0] / u.values()[0];
  CHECK(ratio == doctest::Approx(1.0 / (1.0 + dt * M_PI * M_PI / (l * l))).epsilon(1e-5));
}

TEST_CASE("mass is conserved over 1000 steps on the 3-star") {
  const auto g = grid_on(star_graph(3), 0.05, 30.0);
  const LocalOperator op = assemble_local(g);
  const GraphFunction u0 = make_datum(g, DatumSpec{DatumKind::bump, EdgeId{0}, 1.0, 0.5, 1.0});
  for (TimeScheme s : {TimeScheme::implicit_euler, TimeScheme::crank_nicolson}) {
    RunOptions o;
    o.final_time = 5.0;
    o.dt = 0.005;
    o.scheme = s;
    o.observe_times = {0.0, 5.0};
    const RunRecord run = solve_heat(op, u0, o);
    CHECK(std::abs(run.observations.back().mass - 1.0) < 1e-10);
  }
}

TEST_CASE("zero datum stays zero") {
  const auto g = grid_on(star_graph(3), 0.1, 20.0);
  const LocalOperator op = assemble_local(g);
  RunOptions o;
  o.final_time = 1.0;
  o.observe_times = {0.5, 1.0};
  const RunRecord run = solve_heat(op, GraphFunction(g), o);
  CHECK(run.final_state.u.values().cwiseAbs().maxCoeff() == 0.0);
  CHECK(discrete_energy_identity(run) == 0.0);
}

TEST_CASE("truncation window is enforced") {
  const auto g = grid_on(star_graph(3), 0.1, 50.0);
  const LocalOperator op = assemble_local(g);
  RunOptions o;
  o.final_time = 30.0;  // 10 sqrt(30) > 50
  CHECK_THROWS_WITH_AS(solve_heat(op, GraphFunction(g), o), doctest::Contains("L_trunc"), std::invalid_argument);
}

TEST_CASE("property: operator symmetry in the weighted inner product") {
  std::mt19937_64 rng(99);
  for (const auto& d : {star_graph(3), mixed_graph(), star_graph(5)}) {
    const auto g = grid_on(d, 0.07, 3.0);
    const LocalOperator op = assemble_local(g);
    const Eigen::VectorXd& w = g->weights();
    for (int k = 0; k < 10; ++k) {
      const Eigen::VectorXd u = random_vector(g->size(), rng), v = random_vector(g->size(), rng);
      const double lhs = (w.array() * op.apply(u).array() * v.array()).sum();
      const double rhs = (w.array() * u.array() * op.apply(v).array()).sum();
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
      // Weighted column sums vanish: int A u = 0.
      CHECK(std::abs((w.array() * op.apply(u).array()).sum()) < 1e-9);
    }
  }
}

TEST_CASE("property: implicit Euler maximum principle and contraction") {
  std::mt19937_64 rng(123);
  for (const auto& d : {star_graph(3), mixed_graph()}) {
    const auto g = grid_on(d, 0.05, 15.0);
    const LocalOperator op = assemble_local(g);
    for (int trial = 0; trial < 3; ++trial) {
      const GraphFunction u0(g, random_vector(g->size(), rng));
      const double lo = u0.values().minCoeff(), hi = u0.values().maxCoeff();
      RunOptions o;
      o.final_time = 2.0;
      o.dt = 0.05;
      o.scheme = TimeScheme::implicit_euler;
      for (int k = 0; k <= 40; ++k) o.observe_times.push_back(0.05 * k);
      o.on_observe = [&](const HeatState& s) {
        CHECK(s.u.values().maxCoeff() <= hi + 1e-12);
        CHECK(s.u.values().minCoeff() >= lo - 1e-12);
      };
      const RunRecord run = solve_heat(op, u0, o);
      for (std::size_t i = 1; i < run.observations.size(); ++i) {
        CHECK(run.observations[i].l1 <= run.observations[i - 1].l1 + 1e-10);
        CHECK(run.observations[i].l2 <= run.observations[i - 1].l2 + 1e-10);
        CHECK(run.observations[i].linf <= run.observations[i - 1].linf + 1e-10);
      }
    }
  }
}

TEST_CASE("gradient quadrature equals the stiffness form") {
  const auto g = grid_on(interval(1.0), 1e-3);
  const LocalOperator op = assemble_local(g);
  const GraphFunction u = sample_centers(g, [](EdgeId, double x) { return std::cos(M_PI * x); });
  // int_0^1 (pi sin(pi x))^2 = pi^2 / 2
  CHECK(op.gradient_squared(u.values()) == doctest::Approx(M_PI * M_PI / 2.0).epsilon(1e-5));
}

TEST_CASE("energy identity on a single-mode datum") {
  const double t_final = 0.1;
  auto run_mode = [&](double h, double dt) {
    const auto g = grid_on(interval(1.0), h);
    const LocalOperator op = assemble_local(g);
    const GraphFunction u0 = sample_centers(g, [](EdgeId, double x) { return std::cos(M_PI * x); });
    RunOptions o;
    o.final_time = t_final;
    o.dt = dt;
    o.scheme = TimeScheme::crank_nicolson;
    return solve_heat(op, u0, o);
  };
  SUBCASE("dissipation matches the closed form of one Fourier mode") {
    const RunRecord run = run_mode(1e-3, 1e-4);
    // 2 int_0^T ||u_x||^2 = ||u0||^2 (1 - exp(-2 pi^2 T)) with ||u0||^2 = 1/2.
    CHECK(std::abs(dissipated(run) - 0.5 * (1.0 - std::exp(-2.0 * M_PI * M_PI * t_final))) < 1e-6);
    CHECK(discrete_energy_identity(run) < 1e-6);
  }
  SUBCASE("residual is small and second order") {
    const double r1 = discrete_energy_identity(run_mode(1e-2, 1e-3));
    const double r2 = discrete_energy_identity(run_mode(5e-3, 5e-4));
    CHECK(r1 <= 1e-4);
    CHECK(r1 / r2 >= 3.0);
  }
}

TEST_CASE("gradient decay: t^(3/4) ||u_x|| is bounded along the run") {
  const auto g = grid_on(star_graph(3), 0.05, 110.0);
  const LocalOperator op = assemble_local(g);
  const GraphFunction u0 = make_datum(g, DatumSpec{DatumKind::bump, EdgeId{0}, 1.0, 0.5, 1.0});
  RunOptions o;
  o.final_time = 100.0;
  o.dt = 0.02;
  o.observe_times = {1.0, 4.0, 16.0, 64.0, 100.0};
  const RunRecord run = solve_heat(op, u0, o);
  double prev = kInfiniteLength;
  for (const auto& ob : run.observations) {
    const double v = std::pow(ob.t, 0.75) * ob.grad_l2;
    CHECK(std::isfinite(v));
    CHECK(v < 1.0);
    if (ob.t <= 64.0) CHECK(v < prev);
    prev = v;
  }
}
