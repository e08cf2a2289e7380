#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <random>
#include <thread>

#include "graphdiff/asymptotics.hpp"
#include "graphdiff/experiments.hpp"
#include "graphdiff/local_solver.hpp"
#include "graphdiff/nonlocal_solver.hpp"

namespace graphdiff {

namespace {

using Checks = std::vector<CheckResult>;
using Rng = std::mt19937_64;

CheckResult check(std::string name, double residual, double threshold) {
  return {std::move(name), residual <= threshold, residual, threshold};
}

struct Case {
  std::string name;
  GraphDescription graph;
};

std::vector<Case> builtin_graphs() {
  GraphDescription path;
  path.vertices = {"a", "b", "c"};
  path.edges = {{"a", "b", 1.5}, {"b", "c", 0.7}, {"a", std::nullopt, kInfiniteLength},
                {"c", std::nullopt, kInfiniteLength}};
  return {{"star3", star_graph(3)}, {"mixed", mixed_graph()}, {"path", path}};
}

std::shared_ptr<const Grid> make_grid(const GraphDescription& d, double h, double truncation) {
  return std::make_shared<const Grid>(std::make_shared<const MetricGraph>(build_graph(d)), h, truncation);
}

GraphFunction random_function(const std::shared_ptr<const Grid>& grid, Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Eigen::VectorXd v(static_cast<Eigen::Index>(grid->size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = dist(rng);
  return {grid, v};
}

double weighted_dot(const Grid& grid, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (grid.weights().array() * a.array() * b.array()).sum();
}

// Largest relative increase of l1/l2/linf between consecutive observations.
std::array<double, 3> contraction_residuals(const std::vector<Observation>& obs) {
  std::array<double, 3> worst{0.0, 0.0, 0.0};
  for (std::size_t i = 1; i < obs.size(); ++i) {
    worst[0] = std::max(worst[0], (obs[i].l1 - obs[i - 1].l1) / obs.front().l1);
    worst[1] = std::max(worst[1], (obs[i].l2 - obs[i - 1].l2) / obs.front().l2);
    worst[2] = std::max(worst[2], (obs[i].linf - obs[i - 1].linf) / obs.front().linf);
  }
  return worst;
}

double mass_drift(const std::vector<Observation>& obs) {
  double worst = 0.0;
  for (const auto& o : obs) worst = std::max(worst, std::abs(o.mass - obs.front().mass));
  return worst / std::max(1.0, std::abs(obs.front().mass));
}

std::vector<double> every(double step, double hi) {
  std::vector<double> t;
  for (double s = 0.0; s <= hi + 1e-12; s += step) t.push_back(s);
  return t;
}

void add_contraction(Checks& out, const std::string& prefix, const std::vector<Observation>& obs) {
  const auto r = contraction_residuals(obs);
  out.push_back(check(prefix + "_l1_contraction", r[0], 1e-10));
  out.push_back(check(prefix + "_l2_contraction", r[1], 1e-10));
  out.push_back(check(prefix + "_linf_contraction", r[2], 1e-10));
}

Checks local_checks(const Case& c, Rng& rng) {
  Checks out;
  const auto grid = make_grid(c.graph, 0.05, 12.0);
  const LocalOperator op = assemble_local(grid);
  const std::string p = "local_" + c.name;

  double sym = 0.0;
  for (int k = 0; k < 5; ++k) {
    const Eigen::VectorXd u = random_function(grid, rng, -1, 1).values();
    const Eigen::VectorXd v = random_function(grid, rng, -1, 1).values();
    const double lhs = weighted_dot(*grid, op.apply(u), v);
    const double rhs = weighted_dot(*grid, u, op.apply(v));
    sym = std::max(sym, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
  }
  out.push_back(check(p + "_operator_symmetry", sym, 1e-12));

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(grid->size()));
  out.push_back(check(p + "_constants_equilibrium", op.apply(ones).cwiseAbs().maxCoeff(), 1e-9));

  // Rough datum supported away from the truncated ends.
  GraphFunction u0 = random_function(grid, rng, -1, 1);
  for (EdgeId e : grid->graph().infinite_edges()) {
    auto seg = u0.on_edge(e);
    const Eigen::Index keep = std::min<Eigen::Index>(seg.size(), 40);
    seg.tail(seg.size() - keep).setZero();
  }
  RunOptions o;
  o.final_time = 1.0;
  o.dt = 0.005;
  o.scheme = TimeScheme::implicit_euler;
  o.observe_times = every(0.05, 1.0);
  const double lo = u0.values().minCoeff();
  const double hi = u0.values().maxCoeff();
  double mp = 0.0;
  o.on_observe = [&](const HeatState& s) {
    mp = std::max({mp, s.u.values().maxCoeff() - hi, lo - s.u.values().minCoeff()});
  };
  const RunRecord ie = solve_heat(op, u0, o);
  o.on_observe = nullptr;
  out.push_back(check(p + "_mass_conservation_ie", mass_drift(ie.observations), 1e-10));
  out.push_back(check(p + "_maximum_principle", mp, 1e-12));
  add_contraction(out, p + "_ie", ie.observations);

  o.scheme = TimeScheme::crank_nicolson;
  o.dt = 0.001;
  const RunRecord cn = solve_heat(op, u0, o);
  out.push_back(check(p + "_mass_conservation_cn", mass_drift(cn.observations), 1e-10));
  out.push_back(check(p + "_cn_l2_contraction", contraction_residuals(cn.observations)[1], 1e-10));
  return out;
}

Checks nonlocal_checks(const Case& c, Rng& rng) {
  Checks out;
  const auto grid = make_grid(c.graph, 0.05, 12.0);
  const Kernel kernel = normalize_unit_second_moment(builtin_kernel("tent"));
  const NonlocalOperator op = assemble_nonlocal(grid, kernel, 0.5);
  const std::string p = "nonlocal_" + c.name;
  const Eigen::VectorXd& w = grid->weights();

  double sym = 0.0;
  for (Eigen::Index i = 0; i < op.couplings.outerSize(); ++i) {
    for (decltype(op.couplings)::InnerIterator it(op.couplings, i); it; ++it) {
      const double kij = it.value() * w[i];
      const double kji = op.couplings.coeff(it.col(), i) * w[it.col()];
      sym = std::max(sym, std::abs(kij - kji) / std::max(std::abs(kij), 1e-300));
    }
  }
  out.push_back(check(p + "_weighted_symmetry", sym, 1e-12));

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(grid->size()));
  out.push_back(check(p + "_constants_in_kernel", apply_operator(op, ones).cwiseAbs().maxCoeff(), 1e-12));

  const GraphFunction rough = random_function(grid, rng, -1, 1);
  const double lu = integrate(apply_operator(op, rough));
  out.push_back(check(p + "_zero_mean_image", std::abs(lu), 1e-12 * op.max_diagonal() * grid->size()));

  GraphFunction u0 = random_function(grid, rng, 0, 1);
  for (EdgeId e : grid->graph().infinite_edges()) {
    auto seg = u0.on_edge(e);
    const Eigen::Index keep = std::min<Eigen::Index>(seg.size(), 40);
    seg.tail(seg.size() - keep).setZero();
  }
  RunOptions o;
  o.final_time = 1.0;
  o.observe_times = every(0.05, 1.0);
  for (TimeScheme s : {TimeScheme::implicit_euler, TimeScheme::explicit_euler}) {
    o.scheme = s;
    o.dt = s == TimeScheme::explicit_euler ? 0.5 / (2.0 * op.max_diagonal()) : 0.01;
    const RunRecord run = solve_nonlocal(op, u0, o);
    const std::string tag = p + "_" + to_string(s);
    out.push_back(check(tag + "_mass_conservation", mass_drift(run.observations), 1e-12));
    out.push_back(check(tag + "_positivity", std::max(0.0, -run.final_state.u.values().minCoeff()), 0.0));
    add_contraction(out, tag, run.observations);
    double bound = 0.0;
    const double norm0 = run.l2_squared.front();
    for (const auto& ob : run.observations) bound = std::max(bound, ob.t * ob.energy / norm0);
    out.push_back(check(tag + "_energy_bound", bound, 1.05));
  }
  return out;
}

Checks no_regularization_check() {
  const auto grid = make_grid(star_graph(3), 0.05, 12.0);
  const Kernel kernel = normalize_unit_second_moment(builtin_kernel("tent"));
  const NonlocalOperator op = assemble_nonlocal(grid, kernel, 1.0);
  DatumSpec d;
  d.kind = DatumKind::indicator;
  d.center = 2.0;
  d.width = 1.0;
  const GraphFunction u0 = make_datum(grid, d);
  const double dt = 0.01;
  const HeatState s1 = step_nonlocal(op, {0.0, u0, integrate(u0)}, dt, TimeScheme::implicit_euler);
  // Cells on either side of x = 1 on edge 0.
  const auto jump = [&](const GraphFunction& u) {
    const auto seg = u.on_edge(EdgeId{0});
    return seg[20] - seg[19];
  };
  const double bound = std::exp(-2.0 * kernel.l1_norm() * dt) * jump(u0) / 2.0;
  return {check("nonlocal_no_regularization", std::max(0.0, bound - jump(s1.u)), 0.0)};
}

Checks kernel_checks() {
  Checks out;
  const std::vector<Kernel> kernels{builtin_kernel("tent"), builtin_kernel("indicator", {{"scale", 3.0}}),
                                    builtin_kernel("truncated_gaussian"),
                                    builtin_kernel("tent", {{"radius", 2.0}, {"scale", 0.5}})};
  for (const Kernel& k : kernels) {
    const double r = k.support_radius();
    const auto z2 = [&](double z) { return z * z * k(z); };
    const double a = 0.5 * (adaptive_simpson(z2, -r, 0.0, 1e-12) + adaptive_simpson(z2, 0.0, r, 1e-12));
    const auto j = [&](double z) { return std::abs(k(z)); };
    const double l1 = adaptive_simpson(j, -r, 0.0, 1e-12) + adaptive_simpson(j, 0.0, r, 1e-12);
    const std::string p = "kernel_" + k.name() + "_r" + std::to_string(static_cast<int>(r));
    out.push_back(check(p + "_second_moment", std::abs(a - k.second_moment_half()) / k.second_moment_half(), 1e-8));
    out.push_back(check(p + "_l1_norm", std::abs(l1 - k.l1_norm()) / k.l1_norm(), 1e-8));

    double rescale = 0.0;
    for (double eps : {1.0, 0.5, 0.1}) {
      const auto f = [&](double x) { return x * x * rescaled(k, eps, std::abs(x)); };
      const double q = adaptive_simpson(f, -eps * r, 0.0, 1e-12) + adaptive_simpson(f, 0.0, eps * r, 1e-12);
      rescale = std::max(rescale, std::abs(q - 2.0 * k.second_moment_half()) / (2.0 * k.second_moment_half()));
    }
    out.push_back(check(p + "_rescaled_moment", rescale, 1e-8));

    const Kernel n = normalize_unit_second_moment(k);
    out.push_back(check(p + "_normalized", std::abs(n.second_moment_half() - 1.0), 1e-12));

    double mono = 0.0;
    for (int i = 0; i < 400; ++i) {
      const double z1 = 1.1 * r * i / 400.0;
      const double z2b = 1.1 * r * (i + 1) / 400.0;
      mono = std::max({mono, k(z2b) - k(z1), -k(z1), std::abs(k(z1) - k(-z1))});
    }
    out.push_back(check(p + "_admissible", mono, 0.0));
  }
  return out;
}

GraphDescription random_graph(Rng& rng) {
  std::uniform_int_distribution<int> nv(1, 4);
  std::uniform_real_distribution<double> len(0.2, 3.0);
  const int n = nv(rng);
  GraphDescription d;
  for (int i = 0; i < n; ++i) d.vertices.push_back("v" + std::to_string(i));
  // Spanning tree, then extra edges (parallel edges and loops allowed).
  for (int i = 1; i < n; ++i) {
    std::uniform_int_distribution<int> parent(0, i - 1);
    d.edges.push_back({d.vertices[parent(rng)], d.vertices[i], len(rng)});
  }
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::uniform_int_distribution<int> extra(0, 8 - static_cast<int>(d.edges.size()) - 1);
  const int m = extra(rng);
  std::bernoulli_distribution ray(0.3);
  for (int i = 0; i < m; ++i) {
    if (ray(rng)) {
      d.edges.push_back({d.vertices[pick(rng)], std::nullopt, kInfiniteLength});
    } else {
      d.edges.push_back({d.vertices[pick(rng)], d.vertices[pick(rng)], len(rng)});
    }
  }
  d.edges.push_back({d.vertices[pick(rng)], std::nullopt, kInfiniteLength});
  return d;
}

GraphPoint random_point(const MetricGraph& g, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pe(0, g.edge_count() - 1);
  const EdgeId e{pe(rng)};
  const double len = std::min(g.edge(e).length, 10.0);
  return {e, std::uniform_real_distribution<double>(0.0, len)(rng)};
}

Checks distance_checks(Rng& rng) {
  double symmetry = 0.0, identity = 0.0, triangle = 0.0;
  for (int gi = 0; gi < 20; ++gi) {
    const MetricGraph g = build_graph(random_graph(rng));
    for (int k = 0; k < 50; ++k) {
      const GraphPoint x = random_point(g, rng);
      const GraphPoint y = random_point(g, rng);
      const GraphPoint z = random_point(g, rng);
      const double dxy = graph_distance(g, x, y);
      symmetry = std::max(symmetry, std::abs(dxy - graph_distance(g, y, x)));
      identity = std::max(identity, graph_distance(g, x, x));
      triangle = std::max(triangle, dxy - graph_distance(g, x, z) - graph_distance(g, z, y));
    }
  }
  return {check("distance_symmetry", symmetry, 0.0), check("distance_identity", identity, 0.0),
          check("distance_triangle_inequality", std::max(0.0, triangle), 1e-12)};
}

Checks profile_checks() {
  const MetricGraph g = build_graph(star_graph(3));
  const ProfileParams p{1.0, 3, 1.0};
  double worst = 0.0;
  for (double lambda : {0.5, 2.0, 3.0}) {
    for (double t : {0.5, 1.0, 4.0}) {
      for (double x : {0.0, 0.3, 1.0, 2.5}) {
        const double lhs = lambda * profile_U_M(g, p, lambda * lambda * t, {EdgeId{1}, lambda * x});
        const double rhs = profile_U_M(g, p, t, {EdgeId{1}, x});
        worst = std::max(worst, std::abs(lhs - rhs));
      }
    }
  }
  return {check("profile_self_similarity", worst, 1e-14)};
}

}  // namespace

std::vector<CheckResult> run_invariant_suite(std::uint64_t seed, unsigned jobs) {
  std::vector<std::function<Checks(Rng&)>> groups;
  for (const Case& c : builtin_graphs()) {
    groups.emplace_back([c](Rng& rng) { return local_checks(c, rng); });
    groups.emplace_back([c](Rng& rng) { return nonlocal_checks(c, rng); });
  }
  groups.emplace_back([](Rng&) { return no_regularization_check(); });
  groups.emplace_back([](Rng&) { return kernel_checks(); });
  groups.emplace_back([](Rng& rng) { return distance_checks(rng); });
  groups.emplace_back([](Rng&) { return profile_checks(); });

  // Each group owns an RNG derived from (seed, index) so results do not
  // depend on scheduling.
  std::vector<Checks> results(groups.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < groups.size(); i = next++) {
      Rng rng(seed * 1000003u + i);
      try {
        results[i] = groups[i](rng);
      } catch (const std::exception& e) {
        results[i] = {{"group_" + std::to_string(i) + "_error: " + e.what(), false, 1.0, 0.0}};
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned k = 1; k < std::max(1u, jobs); ++k) pool.emplace_back(worker);
    worker();
  }
  std::vector<CheckResult> all;
  for (auto& r : results) all.insert(all.end(), r.begin(), r.end());
  return all;
}

}  // namespace graphdiff
