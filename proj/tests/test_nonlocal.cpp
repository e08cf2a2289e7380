#include <doctest.h>

#include <cmath>
#include <random>

#include "graphdiff/initial_data.hpp"
#include "graphdiff/local_solver.hpp"
#include "graphdiff/nonlocal_solver.hpp"
#include "oracles.hpp"

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

// Path a-b-c-d with unit edges and a ray at each end: edges 0 and 2 are
// non-adjacent at distance 1.
GraphDescription three_segment_path() {
  GraphDescription d;
  d.vertices = {"a", "b", "c", "d"};
  d.edges = {{"a", "b", 1.0}, {"b", "c", 1.0}, {"c", "d", 1.0},
             {"a", std::nullopt, kInfiniteLength}, {"d", std::nullopt, kInfiniteLength}};
  return d;
}

Kernel unit_tent() { return normalize_unit_second_moment(builtin_kernel("tent")); }

}  // namespace

TEST_CASE("two cells: hand-computed couplings, energy and decay") {
  const auto g = grid_on(interval(1.0), 0.5);
  const NonlocalOperator op = assemble_nonlocal(g, builtin_kernel("tent"), 1.0);
  // Centers 0.25 and 0.75: J(0.5) * w = 0.5 * 0.5.
  const Eigen::MatrixXd k = Eigen::MatrixXd(op.couplings);
  CHECK(k(0, 0) == 0.0);
  CHECK(k(0, 1) == doctest::Approx(0.25));
  CHECK(k(1, 0) == doctest::Approx(0.25));
  CHECK(op.diagonal[0] == doctest::Approx(0.25));

  const Eigen::Vector2d u(1.0, 0.0);
  CHECK(apply_operator(op, u)[0] == doctest::Approx(-0.25));
  CHECK(apply_operator(op, u)[1] == doctest::Approx(0.25));
  // sum_i w_i sum_j K_ij (u_i - u_j)^2 = 2 * 0.5 * 0.25.
  CHECK(energy(op, u) == doctest::Approx(0.25));

  // Difference mode decays like exp(-2 K t); implicit Euler by 1/(1 + 2 K dt).
  const double dt = 0.1;
  const HeatState s = step_nonlocal(op, {0.0, GraphFunction(g, Eigen::Vector2d(1.0, -1.0)), 0.0}, dt,
                                    TimeScheme::implicit_euler);
  CHECK(s.u.values()[0] == doctest::Approx(1.0 / (1.0 + 2.0 * 0.25 * dt)));
  CHECK(s.u.values()[1] == doctest::Approx(-1.0 / (1.0 + 2.0 * 0.25 * dt)));
  GraphFunction v(g, Eigen::Vector2d(1.0, -1.0));
  for (int n = 0; n < 1000; ++n) v = step_nonlocal(op, {0.0, v, 0.0}, 1e-3, TimeScheme::crank_nicolson).u;
  CHECK(v.values()[0] == doctest::Approx(std::exp(-2.0 * 0.25 * 1.0)).epsilon(1e-6));
}

TEST_CASE("assembly guards") {
  const auto g = grid_on(star_graph(3), 0.1, 5.0);
  CHECK_THROWS_WITH_AS(assemble_nonlocal(g, builtin_kernel("tent"), 0.15), doctest::Contains("unresolved"),
                       std::invalid_argument);
  CHECK_THROWS_AS(assemble_nonlocal(g, builtin_kernel("tent"), 0.0), std::invalid_argument);
  const auto big = grid_on(star_graph(3), 1e-3, 2000.0);
  CHECK_THROWS_AS(assemble_nonlocal(big, builtin_kernel("tent"), 100.0), std::length_error);
  const NonlocalOperator op = assemble_nonlocal(g, unit_tent(), 1.0);
  CHECK_THROWS_AS(NonlocalStepper(op, 1.0 / op.max_diagonal(), TimeScheme::explicit_euler), std::invalid_argument);
  CHECK_NOTHROW(NonlocalStepper(op, 0.5 / op.max_diagonal(), TimeScheme::explicit_euler));
  CHECK_THROWS_AS(apply_operator(op, Eigen::VectorXd::Ones(3)), std::invalid_argument);
}

TEST_CASE("pair enumeration matches brute force") {
  for (const auto& d : {mixed_graph(), three_segment_path(), star_graph(4)}) {
    const auto g = grid_on(d, 0.1, 3.0);
    const double cutoff = 0.73;
    const PairList pairs = enumerate_pairs(*g, cutoff);
    std::size_t expected = 0;
    for (std::size_t i = 0; i < g->size(); ++i) {
      std::size_t row = 0;
      for (std::size_t j = 0; j < g->size(); ++j) {
        if (i != j && graph_distance(g->graph(), g->cell_point(i), g->cell_point(j)) <= cutoff) ++row;
      }
      CHECK(pairs.rows[i].size() == row);
      expected += row;
    }
    CHECK(pairs.nonzeros() == expected);
    for (std::size_t i = 0; i < g->size(); i += 7) {
      for (const auto& [j, dist] : pairs.rows[i]) {
        CHECK(dist == doctest::Approx(graph_distance(g->graph(), g->cell_point(i), g->cell_point(j))).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("pair cache filters for smaller cutoffs") {
  const auto g = grid_on(mixed_graph(), 0.05, 3.0);
  PairDistanceCache cache(g);
  const auto wide = cache.pairs(1.0);
  const auto narrow = cache.pairs(0.4);
  const PairList direct = enumerate_pairs(*g, 0.4);
  CHECK(narrow->nonzeros() == direct.nonzeros());
  CHECK(wide->nonzeros() > narrow->nonzeros());
  const NonlocalOperator a = assemble_nonlocal(cache, unit_tent(), 0.4);
  const NonlocalOperator b = assemble_nonlocal(g, unit_tent(), 0.4);
  CHECK((Eigen::MatrixXd(a.couplings) - Eigen::MatrixXd(b.couplings)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("constants, zero-mean image and symmetry") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1, 1);
  for (const auto& d : {star_graph(3), mixed_graph(), three_segment_path()}) {
    const auto g = grid_on(d, 0.05, 4.0);
    const NonlocalOperator op = assemble_nonlocal(g, builtin_kernel("truncated_gaussian", {{"sigma", 0.1}}), 1.0);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(g->size()));
    CHECK(apply_operator(op, one).cwiseAbs().maxCoeff() == 0.0);
    CHECK(energy(op, one) == 0.0);
    Eigen::VectorXd v(one.size());
    for (auto& x : v) x = u(rng);
    CHECK(std::abs(integrate(apply_operator(op, GraphFunction(g, v)))) < 1e-12 * op.max_diagonal());
    const Eigen::MatrixXd k = Eigen::MatrixXd(op.couplings);
    const Eigen::VectorXd& w = g->weights();
    for (int trial = 0; trial < 200; ++trial) {
      const auto i = std::uniform_int_distribution<Eigen::Index>(0, k.rows() - 1)(rng);
      const auto j = std::uniform_int_distribution<Eigen::Index>(0, k.rows() - 1)(rng);
      CHECK(std::abs(k(i, j) * w[i] - k(j, i) * w[j]) <= 1e-12 * std::max(1.0, std::abs(k(i, j) * w[i])));
    }
    // Operator norm bound.
    CHECK(apply_operator(op, v).cwiseAbs().maxCoeff() <= 2.0 * op.max_diagonal() * v.cwiseAbs().maxCoeff() + 1e-12);
  }
}

TEST_CASE("antisymmetric data on a symmetric star stays antisymmetric") {
  const auto g = grid_on(star_graph(2), 0.05, 4.0);
  const NonlocalOperator op = assemble_nonlocal(g, unit_tent(), 0.5);
  const GraphFunction u = sample_centers(g, [](EdgeId e, double x) { return (e.value == 0 ? 1.0 : -1.0) * std::exp(-x); });
  const GraphFunction lu = apply_operator(op, u);
  CHECK((lu.on_edge(EdgeId{0}) + lu.on_edge(EdgeId{1})).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("interior Taylor expansion: L_eps phi approaches A phi_xx") {
  const auto g = grid_on(interval(4.0), 2e-3);
  const auto phi = [](double x) { return std::exp(-(x - 2.0) * (x - 2.0)); };
  const auto phi_xx = [](double x) { return (4.0 * (x - 2.0) * (x - 2.0) - 2.0) * std::exp(-(x - 2.0) * (x - 2.0)); };
  const GraphFunction u = sample_centers(g, [&](EdgeId, double x) { return phi(x); });
  const Kernel k = unit_tent();
  double prev = kInfiniteLength;
  for (double eps : {0.4, 0.2, 0.1}) {
    const GraphFunction lu = apply_operator(assemble_nonlocal(g, k, eps), u);
    double err = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) {
      const double x = g->cell_point(i).coord;
      if (x < 0.5 || x > 3.5) continue;
      err = std::max(err, std::abs(lu.values()[static_cast<Eigen::Index>(i)] - phi_xx(x)));
    }
    MESSAGE("eps=" << eps << " err=" << err);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 5e-3);
}

TEST_CASE("explicit steps preserve positivity and mass; implicit runs contract") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  const auto g = grid_on(mixed_graph(), 0.05, 10.0);
  const NonlocalOperator op = assemble_nonlocal(g, unit_tent(), 0.5);
  Eigen::VectorXd v(static_cast<Eigen::Index>(g->size()));
  for (auto& x : v) x = u(rng) < 0.1 ? u(rng) : 0.0;
  const GraphFunction u0(g, v);
  for (TimeScheme s : {TimeScheme::explicit_euler, TimeScheme::implicit_euler, TimeScheme::crank_nicolson}) {
    RunOptions o;
    o.final_time = 0.5;
    o.dt = s == TimeScheme::explicit_euler ? 0.5 / op.max_diagonal() : 0.005;
    o.scheme = s;
    for (int k = 0; k <= 10; ++k) o.observe_times.push_back(0.05 * k);
    const RunRecord run = solve_nonlocal(op, u0, o);
    for (std::size_t i = 1; i < run.observations.size(); ++i) {
      const auto& a = run.observations[i - 1];
      const auto& b = run.observations[i];
      CHECK(std::abs(b.mass - a.mass) <= 1e-12 * std::abs(a.mass));
      CHECK(b.l2 <= a.l2 + 1e-10);
      if (s != TimeScheme::crank_nicolson) {
        CHECK(b.l1 <= a.l1 + 1e-10);
        CHECK(b.linf <= a.linf + 1e-10);
      }
    }
    if (s == TimeScheme::explicit_euler) CHECK(run.final_state.u.values().minCoeff() >= 0.0);
  }
}

TEST_CASE("energy identity residual is first order for implicit Euler") {
  const auto g = grid_on(star_graph(3), 0.05, 12.0);
  const NonlocalOperator op = assemble_nonlocal(g, unit_tent(), 1.0);
  const GraphFunction u0 = make_datum(g, DatumSpec{DatumKind::bump, EdgeId{0}, 1.0, 0.5, 1.0});
  auto residual = [&](double dt, TimeScheme s) {
    RunOptions o;
    o.final_time = 1.0;
    o.dt = dt;
    o.scheme = s;
    return nonlocal_energy_identity(solve_nonlocal(op, u0, o));
  };
  const double r1 = residual(0.02, TimeScheme::implicit_euler);
  const double r2 = residual(0.01, TimeScheme::implicit_euler);
  const double norm0 = std::pow(lp_norm(u0, 2.0), 2);
  CHECK(r1 <= 0.02 * op.max_diagonal() * norm0);
  CHECK(r1 / r2 == doctest::Approx(2.0).epsilon(0.1));
  // Crank-Nicolson with averaged endpoint energies is second order.
  const double c1 = residual(0.02, TimeScheme::crank_nicolson);
  const double c2 = residual(0.01, TimeScheme::crank_nicolson);
  CHECK(c1 < r1);
  CHECK(c1 / c2 == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("t E(u(t)) stays below the initial L2 norm squared") {
  const auto g = grid_on(star_graph(3), 0.1, 80.0);
  const NonlocalOperator op = assemble_nonlocal(g, unit_tent(), 1.0);
  const GraphFunction u0 = make_datum(g, DatumSpec{DatumKind::bump, EdgeId{0}, 1.0, 0.5, 1.0});
  RunOptions o;
  o.final_time = 50.0;
  o.dt = 0.05;
  o.scheme = TimeScheme::implicit_euler;
  for (double t = 1.0; t <= 50.0; t += 1.0) o.observe_times.push_back(t);
  const RunRecord run = solve_nonlocal(op, u0, o);
  for (const auto& ob : run.observations) CHECK(ob.t * ob.energy <= 1.05 * run.l2_squared.front());
}

TEST_CASE("no regularization: a jump survives the first step") {
  const auto g = grid_on(star_graph(3), 0.05, 12.0);
  const Kernel k = unit_tent();
  const NonlocalOperator op = assemble_nonlocal(g, k, 1.0);
  const GraphFunction u0 = make_datum(g, DatumSpec{DatumKind::indicator, EdgeId{0}, 2.0, 1.0, 1.0});
  const double dt = 0.01;
  const HeatState s = step_nonlocal(op, {0.0, u0, 0.0}, dt, TimeScheme::implicit_euler);
  const auto jump = [](const GraphFunction& u) { return u.on_edge(EdgeId{0})[20] - u.on_edge(EdgeId{0})[19]; };
  CHECK(jump(u0) == doctest::Approx(0.5));
  CHECK(jump(s.u) >= std::exp(-2.0 * k.l1_norm() * dt) * jump(u0) / 2.0);
}

TEST_CASE("relaxation sweep") {
  const Kernel k = unit_tent();
  SUBCASE("error decreases with eps on the 3-star") {
    const auto g = grid_on(star_graph(3), 0.01, 11.0);
    const GraphFunction u0 = make_datum(g, DatumSpec{DatumKind::bump, EdgeId{0}, 1.0, 0.8, 1.0});
    RelaxationOptions o;
    o.final_time = 1.0;
    o.dt = 0.01;
    const auto rows = relaxation_sweep(g, k, u0, {0.4, 0.2, 0.1}, o);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].space_time_l2_error > rows[1].space_time_l2_error);
    CHECK(rows[1].space_time_l2_error > rows[2].space_time_l2_error);
    o.jobs = 3;
    const auto parallel = relaxation_sweep(g, k, u0, {0.4, 0.2, 0.1}, o);
    for (std::size_t i = 0; i < 3; ++i) CHECK(parallel[i].space_time_l2_error == rows[i].space_time_l2_error);
  }
  SUBCASE("unnormalized kernels compare against the local flow at time A t") {
    const auto g = grid_on(star_graph(3), 0.02, 16.0);
    const GraphFunction u0 = make_datum(g, DatumSpec{DatumKind::bump, EdgeId{0}, 1.0, 0.8, 1.0});
    RelaxationOptions o;
    o.final_time = 1.0;
    o.dt = 0.01;
    const Kernel doubled = k.scaled(2.0);  // A = 2
    const auto scaled = relaxation_sweep(g, doubled, u0, {0.2}, o);
    // The A = 2 flow over [0, 1] is the A = 1 flow over [0, 2], sampled at half the rate.
    RelaxationOptions o2 = o;
    o2.final_time = 2.0;
    o2.dt = 0.02;
    const auto unit = relaxation_sweep(g, k, u0, {0.2}, o2);
    CHECK(scaled[0].space_time_l2_error == doctest::Approx(unit[0].space_time_l2_error / std::sqrt(2.0)).epsilon(1e-9));
  }
  SUBCASE("unresolved eps is rejected") {
    const auto g = grid_on(star_graph(3), 0.1, 11.0);
    RelaxationOptions o;
    CHECK_THROWS_AS(relaxation_sweep(g, k, GraphFunction(g), {0.1}, o), std::invalid_argument);
  }
}

TEST_CASE("cross-edge energy") {
  const auto g = grid_on(three_segment_path(), 0.01, 5.0);
  const GraphFunction phi = sample_centers(g, [](EdgeId e, double x) {
    const double s = e.value < 3 ? static_cast<double>(e.value) + x : 0.0;
    return std::sin(s);
  });
  CHECK_THROWS_AS(cross_edge_energy(*g, unit_tent(), 0.5, phi, EdgeId{0}, EdgeId{1}), std::invalid_argument);
  CHECK_THROWS_AS(cross_edge_energy(*g, unit_tent(), 0.5, phi, EdgeId{0}, EdgeId{0}), std::invalid_argument);

  SUBCASE("tent kernel vanishes exactly once eps < distance") {
    const Kernel tent = builtin_kernel("tent");
    CHECK(cross_edge_energy(*g, tent, 1.5, phi, EdgeId{0}, EdgeId{2}) > 0.0);
    for (double eps : {0.99, 0.5, 0.25}) CHECK(cross_edge_energy(*g, tent, eps, phi, EdgeId{0}, EdgeId{2}) == 0.0);
  }
  SUBCASE("truncated Gaussian: strictly decreasing, matches direct summation") {
    const Kernel gauss = builtin_kernel("truncated_gaussian");
    double prev = kInfiniteLength;
    for (double eps : {0.4, 0.2, 0.1}) {
      const double v = cross_edge_energy(*g, gauss, eps, phi, EdgeId{0}, EdgeId{2});
      // Direct double sum: x on edge 0, y on edge 2, d = (1 - x) + 1 + y.
      const EdgeGrid& eg = g->edge(EdgeId{0});
      double direct = 0.0;
      for (std::size_t i = 0; i < eg.cells; ++i) {
        for (std::size_t j = 0; j < eg.cells; ++j) {
          const double x = eg.center(i), y = eg.center(j);
          const double d = 2.0 - x + y;
          const double diff = std::sin(2.0 + y) - std::sin(x);
          direct += std::pow(eps, -3) * gauss(d / eps) * diff * diff * eg.spacing * eg.spacing;
        }
      }
      // Pairs sitting exactly on the cutoff may round either way.
      CHECK(v == doctest::Approx(direct).epsilon(1e-7));
      CHECK(v < prev);
      prev = v;
    }
  }
}
