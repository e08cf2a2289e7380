#include "graphdiff/local_solver.hpp"

#include <stdexcept>

#include "run_loop.hpp"

namespace graphdiff {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

}  // namespace

LocalOperator assemble_local(std::shared_ptr<const Grid> grid) {
  const MetricGraph& g = grid->graph();
  const auto n = idx(grid->size());
  Triplets s;
  for (const Edge& e : g.edges()) {
    const EdgeGrid& eg = grid->edge(e.id);
    const double c = 1.0 / eg.spacing;
    for (std::size_t k = 0; k + 1 < eg.cells; ++k) {
      const Eigen::Index a = idx(eg.offset + k);
      const Eigen::Index b = a + 1;
      s.emplace_back(a, a, c);
      s.emplace_back(b, b, c);
      s.emplace_back(a, b, -c);
      s.emplace_back(b, a, -c);
    }
  }

  Triplets tr;
  for (std::size_t v = 0; v < g.vertex_count(); ++v) {
    const auto& ends = g.incident(VertexId{v});
    std::vector<std::pair<Eigen::Index, double>> cells;
    double total = 0.0;
    for (const EdgeEnd& end : ends) {
      const EdgeGrid& eg = grid->edge(end.edge);
      const std::size_t k = end.at_terminal ? eg.cells - 1 : 0;
      const double c = 2.0 / eg.spacing;
      cells.emplace_back(idx(eg.offset + k), c);
      total += c;
    }
    for (const auto& [i, ci] : cells) {
      tr.emplace_back(idx(v), i, ci / total);
      for (const auto& [j, cj] : cells) {
        const double value = (i == j ? ci : 0.0) - ci * cj / total;
        if (value != 0.0) s.emplace_back(i, j, value);
      }
    }
  }

  LocalOperator op;
  op.grid = std::move(grid);
  op.stiffness.resize(n, n);
  op.stiffness.setFromTriplets(s.begin(), s.end());
  op.stiffness.prune(0.0);
  op.trace.resize(idx(g.vertex_count()), n);
  op.trace.setFromTriplets(tr.begin(), tr.end());
  return op;
}

Eigen::VectorXd LocalOperator::apply(const Eigen::VectorXd& u) const {
  if (u.size() != stiffness.rows()) throw std::invalid_argument("LocalOperator: size mismatch");
  return -(stiffness * u).cwiseQuotient(grid->weights());
}

Eigen::SparseMatrix<double> LocalOperator::laplacian() const {
  Eigen::SparseMatrix<double> a = -(grid->weights().cwiseInverse().asDiagonal() * stiffness);
  return a;
}

double LocalOperator::gradient_squared(const Eigen::VectorXd& u) const {
  return u.dot(stiffness * u);
}

LocalStepper::LocalStepper(const LocalOperator& op, double dt, TimeScheme scheme)
    : op_(&op), dt_(dt), scheme_(scheme) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_local: dt must be positive");
  if (scheme == TimeScheme::explicit_euler) {
    throw std::invalid_argument("local solver supports implicit_euler and crank_nicolson");
  }
  const double theta = scheme == TimeScheme::implicit_euler ? 1.0 : 0.5;
  Eigen::SparseMatrix<double> w(op.stiffness.rows(), op.stiffness.cols());
  w.setIdentity();
  w = op.grid->weights().asDiagonal() * w;
  const Eigen::SparseMatrix<double> lhs = w + (theta * dt) * op.stiffness;
  solver_.compute(lhs);
  if (solver_.info() != Eigen::Success) throw std::runtime_error("step_local: factorization failed");
  rhs_ = w - ((1.0 - theta) * dt) * op.stiffness;
}

void LocalStepper::advance(Eigen::VectorXd& u) const {
  const Eigen::VectorXd b = rhs_ * u;
  u = solver_.solve(b);
  if (solver_.info() != Eigen::Success) throw std::runtime_error("step_local: solve failed");
}

HeatState step_local(const LocalOperator& op, const HeatState& s, double dt, TimeScheme scheme) {
  if (s.u.grid_ptr() != op.grid && s.u.grid().size() != op.grid->size()) {
    throw std::invalid_argument("step_local: state is not on the operator grid");
  }
  LocalStepper stepper(op, dt, scheme);
  HeatState next = s;
  stepper.advance(next.u.values());
  next.t = s.t + dt;
  return next;
}

RunRecord solve_heat(const LocalOperator& op, const GraphFunction& u0, const RunOptions& options) {
  if (u0.grid().size() != op.grid->size()) throw std::invalid_argument("solve_heat: grid mismatch");
  const double dt_target = options.dt > 0.0 ? options.dt : options.final_time / 2000.0;
  const std::size_t steps = step_count(options.final_time, dt_target);
  const double dt = options.final_time / static_cast<double>(steps);
  check_truncation_window(*op.grid, options.final_time);
  LocalStepper stepper(op, dt, options.scheme);
  return detail::run_loop(
      u0, options, steps, dt, [&](Eigen::VectorXd& u) { stepper.advance(u); },
      [&](const Eigen::VectorXd& u) { return op.gradient_squared(u); },
      [&](Observation& o, const Eigen::VectorXd& u) {
        o.grad_l2 = std::sqrt(std::max(0.0, op.gradient_squared(u)));
      });
}

double discrete_energy_identity(const RunRecord& run) {
  if (run.grad_squared.size() < 2 || run.grad_squared.size() != run.l2_squared.size()) {
    throw std::invalid_argument("discrete_energy_identity: run has no gradient records");
  }
  double dissipated = 0.0;
  for (std::size_t n = 0; n + 1 < run.grad_squared.size(); ++n) {
    dissipated += 0.5 * run.dt * (run.grad_squared[n] + run.grad_squared[n + 1]);
  }
  return std::abs(2.0 * dissipated - (run.l2_squared.front() - run.l2_squared.back()));
}

}  // namespace graphdiff
