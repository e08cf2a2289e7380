#include "graphdiff/nonlocal_solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "graphdiff/local_solver.hpp"
#include "run_loop.hpp"

namespace graphdiff {

namespace {

constexpr std::size_t kMaxPairs = 60'000'000;

// Endpoint table of one edge: up to two (vertex, coordinate) pairs.
struct EdgeEnds {
  std::array<std::size_t, 2> vertex{};
  std::array<double, 2> coord{};
  int count = 0;
};

class DistanceTable {
 public:
  explicit DistanceTable(const Grid& grid) : grid_(grid), vd_(grid.graph().vertex_distances()) {
    for (const Edge& e : grid.graph().edges()) {
      EdgeEnds ends;
      ends.vertex[0] = e.initial.value;
      ends.coord[0] = 0.0;
      ends.count = 1;
      if (e.terminal) {
        ends.vertex[1] = e.terminal->value;
        ends.coord[1] = e.length;
        ends.count = 2;
      }
      ends_.push_back(ends);
    }
  }

  const EdgeEnds& ends(std::size_t e) const { return ends_[e]; }
  double vertex_distance(std::size_t v, std::size_t w) const {
    return vd_(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(w));
  }

  double between(std::size_t e, double x, std::size_t f, double y) const {
    double best = e == f ? std::abs(x - y) : kInfiniteLength;
    const EdgeEnds& a = ends_[e];
    const EdgeEnds& b = ends_[f];
    for (int p = 0; p < a.count; ++p) {
      const double dx = std::abs(x - a.coord[p]);
      for (int q = 0; q < b.count; ++q) {
        best = std::min(best, dx + vertex_distance(a.vertex[p], b.vertex[q]) + std::abs(y - b.coord[q]));
      }
    }
    return best;
  }

  // Symmetric in (i, j) bit for bit.
  double cells(std::size_t i, std::size_t j) const {
    if (j < i) std::swap(i, j);
    const GraphPoint x = grid_.cell_point(i);
    const GraphPoint y = grid_.cell_point(j);
    return between(x.edge.value, x.coord, y.edge.value, y.coord);
  }

 private:
  const Grid& grid_;
  const Eigen::MatrixXd& vd_;
  std::vector<EdgeEnds> ends_;
};

// Cells of edge f whose centers lie in [lo, hi].
std::pair<long, long> cell_range(const EdgeGrid& eg, double lo, double hi) {
  const long first = std::max(0L, static_cast<long>(std::ceil(lo / eg.spacing - 0.5 - 1e-9)));
  const long last = std::min(static_cast<long>(eg.cells) - 1,
                             static_cast<long>(std::floor(hi / eg.spacing - 0.5 + 1e-9)));
  return {first, last};
}

template <class Fn>
void parallel_rows(std::size_t n, unsigned workers, Fn&& fn) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n / 256 + 1)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  }
}

Eigen::SparseMatrix<double> weighted_system(const NonlocalOperator& op, double scale) {
  // scale * (W D - W K): symmetric, zero row sums.
  const Eigen::VectorXd& w = op.grid->weights();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(op.couplings.nonZeros() + static_cast<std::size_t>(op.couplings.rows()));
  for (Eigen::Index i = 0; i < op.couplings.outerSize(); ++i) {
    t.emplace_back(i, i, scale * w[i] * op.diagonal[i]);
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(op.couplings, i); it; ++it) {
      t.emplace_back(i, it.col(), -scale * w[i] * it.value());
    }
  }
  Eigen::SparseMatrix<double> m(op.couplings.rows(), op.couplings.cols());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

}  // namespace

std::size_t PairList::nonzeros() const {
  std::size_t n = 0;
  for (const auto& r : rows) n += r.size();
  return n;
}

PairList enumerate_pairs(const Grid& grid, double cutoff) {
  const MetricGraph& g = grid.graph();
  const DistanceTable table(grid);
  const std::size_t n = grid.size();

  // Rough density guard before allocating anything.
  const double per_row = 2.0 * cutoff / [&] {
    double m = kInfiniteLength;
    for (std::size_t e = 0; e < g.edge_count(); ++e) m = std::min(m, grid.edge(EdgeId{e}).spacing);
    return m;
  }() + 1.0;
  if (per_row * static_cast<double>(n) > static_cast<double>(kMaxPairs)) {
    throw std::length_error("nonlocal kernel matrix too dense for this grid (" +
                            std::to_string(static_cast<long long>(per_row * n)) + " pairs)");
  }

  PairList out;
  out.cutoff = cutoff;
  out.rows.resize(n);
  const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  parallel_rows(n, workers, [&](std::size_t i) {
    const GraphPoint x = grid.cell_point(i);
    const std::size_t e = x.edge.value;
    const EdgeEnds& ex = table.ends(e);
    std::vector<std::pair<std::size_t, std::size_t>> ranges;  // global [first, last]
    auto add = [&](std::size_t f, double lo, double hi) {
      const EdgeGrid& eg = grid.edge(EdgeId{f});
      const auto [a, b] = cell_range(eg, lo, hi);
      if (a <= b) ranges.emplace_back(eg.offset + static_cast<std::size_t>(a), eg.offset + static_cast<std::size_t>(b));
    };
    add(e, x.coord - cutoff, x.coord + cutoff);
    for (int p = 0; p < ex.count; ++p) {
      const double dx = std::abs(x.coord - ex.coord[p]);
      for (std::size_t f = 0; f < g.edge_count(); ++f) {
        const EdgeEnds& ef = table.ends(f);
        for (int q = 0; q < ef.count; ++q) {
          const double budget = cutoff - dx - table.vertex_distance(ex.vertex[p], ef.vertex[q]);
          if (budget < 0.0) continue;
          add(f, ef.coord[q] - budget, ef.coord[q] + budget);
        }
      }
    }
    std::sort(ranges.begin(), ranges.end());
    auto& row = out.rows[i];
    std::size_t next = 0;
    for (const auto& [a, b] : ranges) {
      for (std::size_t j = std::max(a, next); j <= b; ++j) {
        if (j == i) continue;
        const double d = table.cells(i, j);
        if (d <= cutoff) row.push_back({j, d});
      }
      next = std::max(next, b + 1);
    }
  });
  if (out.nonzeros() > kMaxPairs) throw std::length_error("nonlocal kernel matrix too dense");
  return out;
}

std::shared_ptr<const PairList> PairDistanceCache::pairs(double cutoff) {
  std::lock_guard lock(mutex_);
  if (!cached_ || cached_->cutoff < cutoff) {
    cached_ = std::make_shared<const PairList>(enumerate_pairs(*grid_, cutoff));
  }
  if (cached_->cutoff == cutoff) return cached_;
  auto filtered = std::make_shared<PairList>();
  filtered->cutoff = cutoff;
  filtered->rows.resize(cached_->rows.size());
  for (std::size_t i = 0; i < cached_->rows.size(); ++i) {
    for (const auto& entry : cached_->rows[i]) {
      if (entry.distance <= cutoff) filtered->rows[i].push_back(entry);
    }
  }
  return filtered;
}

NonlocalOperator assemble_nonlocal(PairDistanceCache& cache, const Kernel& kernel, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("assemble_nonlocal: eps must be positive");
  const auto& grid = cache.grid();
  const double reach = eps * kernel.support_radius();
  if (reach < 2.0 * grid->max_spacing()) {
    throw std::invalid_argument("kernel unresolved by grid: eps*support=" + std::to_string(reach) +
                                " < 2*max h=" + std::to_string(2.0 * grid->max_spacing()));
  }
  const auto pairs = cache.pairs(reach);
  const Eigen::VectorXd& w = grid->weights();
  const auto n = static_cast<Eigen::Index>(grid->size());

  NonlocalOperator op{grid, kernel, eps, {}, Eigen::VectorXd::Zero(n)};
  op.couplings.resize(n, n);
  Eigen::VectorXi nnz(n);
  for (Eigen::Index i = 0; i < n; ++i) nnz[i] = static_cast<int>(pairs->rows[static_cast<std::size_t>(i)].size());
  op.couplings.reserve(nnz);
  for (Eigen::Index i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (const auto& [j, d] : pairs->rows[static_cast<std::size_t>(i)]) {
      const double k = rescaled(kernel, eps, d) * w[static_cast<Eigen::Index>(j)];
      if (k == 0.0) continue;
      op.couplings.insert(i, static_cast<Eigen::Index>(j)) = k;
      row_sum += k;
    }
    op.diagonal[i] = row_sum;
  }
  op.couplings.makeCompressed();
  return op;
}

NonlocalOperator assemble_nonlocal(std::shared_ptr<const Grid> grid, const Kernel& kernel, double eps) {
  PairDistanceCache cache(std::move(grid));
  return assemble_nonlocal(cache, kernel, eps);
}

Eigen::VectorXd apply_operator(const NonlocalOperator& op, const Eigen::VectorXd& u) {
  if (u.size() != op.couplings.rows()) throw std::invalid_argument("apply_operator: grid mismatch");
  Eigen::VectorXd out(u.size());
  for (Eigen::Index i = 0; i < op.couplings.outerSize(); ++i) {
    double acc = 0.0;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(op.couplings, i); it; ++it) {
      acc += it.value() * (u[it.col()] - u[i]);
    }
    out[i] = acc;
  }
  return out;
}

GraphFunction apply_operator(const NonlocalOperator& op, const GraphFunction& u) {
  if (u.grid().size() != op.grid->size()) throw std::invalid_argument("apply_operator: grid mismatch");
  return GraphFunction(u.grid_ptr(), apply_operator(op, u.values()));
}

double energy(const NonlocalOperator& op, const Eigen::VectorXd& u) {
  if (u.size() != op.couplings.rows()) throw std::invalid_argument("energy: grid mismatch");
  const Eigen::VectorXd& w = op.grid->weights();
  double total = 0.0;
  for (Eigen::Index i = 0; i < op.couplings.outerSize(); ++i) {
    double acc = 0.0;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(op.couplings, i); it; ++it) {
      const double diff = u[i] - u[it.col()];
      acc += it.value() * diff * diff;
    }
    total += w[i] * acc;
  }
  return total;
}

double energy(const NonlocalOperator& op, const GraphFunction& u) { return energy(op, u.values()); }

NonlocalStepper::NonlocalStepper(const NonlocalOperator& op, double dt, TimeScheme scheme)
    : op_(&op), dt_(dt), scheme_(scheme) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_nonlocal: dt must be positive");
  if (scheme == TimeScheme::explicit_euler) {
    if (dt * 2.0 * op.max_diagonal() > 1.0 + 1e-12) {
      throw std::invalid_argument("step_nonlocal: explicit dt=" + std::to_string(dt) +
                                  " violates dt*2*max D <= 1 (max D=" +
                                  std::to_string(op.max_diagonal()) + ")");
    }
    return;
  }
  const double theta = scheme == TimeScheme::implicit_euler ? 1.0 : 0.5;
  const auto n = op.couplings.rows();
  Eigen::SparseMatrix<double> w(n, n);
  w.setIdentity();
  w = op.grid->weights().asDiagonal() * w;
  solver_.compute(w + weighted_system(op, theta * dt));
  if (solver_.info() != Eigen::Success) throw std::runtime_error("step_nonlocal: factorization failed");
  rhs_ = w - weighted_system(op, (1.0 - theta) * dt);
}

void NonlocalStepper::advance(Eigen::VectorXd& u) const {
  if (scheme_ == TimeScheme::explicit_euler) {
    u += dt_ * apply_operator(*op_, u);
    return;
  }
  const Eigen::VectorXd b = rhs_ * u;
  u = solver_.solve(b);
  if (solver_.info() != Eigen::Success) throw std::runtime_error("step_nonlocal: solve failed");
}

HeatState step_nonlocal(const NonlocalOperator& op, const HeatState& s, double dt, TimeScheme scheme) {
  if (s.u.grid().size() != op.grid->size()) throw std::invalid_argument("step_nonlocal: grid mismatch");
  NonlocalStepper stepper(op, dt, scheme);
  HeatState next = s;
  stepper.advance(next.u.values());
  next.t = s.t + dt;
  return next;
}

RunRecord solve_nonlocal(const NonlocalOperator& op, const GraphFunction& u0, const RunOptions& options) {
  if (u0.grid().size() != op.grid->size()) throw std::invalid_argument("solve_nonlocal: grid mismatch");
  const double dt_target = options.dt > 0.0 ? options.dt : options.final_time / 2000.0;
  const std::size_t steps = step_count(options.final_time, dt_target);
  const double dt = options.final_time / static_cast<double>(steps);
  check_truncation_window(*op.grid, options.final_time, op.kernel.second_moment_half(),
                          op.eps * op.kernel.support_radius());
  NonlocalStepper stepper(op, dt, options.scheme);
  return detail::run_loop(
      u0, options, steps, dt, [&](Eigen::VectorXd& u) { stepper.advance(u); },
      [&](const Eigen::VectorXd& u) { return energy(op, u); },
      [&](Observation& o, const Eigen::VectorXd& u) { o.energy = energy(op, u); });
}

double nonlocal_energy_identity(const RunRecord& run) {
  const auto& e = run.grad_squared;
  if (e.size() < 2 || e.size() != run.l2_squared.size()) {
    throw std::invalid_argument("nonlocal_energy_identity: run has no energy records");
  }
  double dissipated = 0.0;
  for (std::size_t n = 0; n + 1 < e.size(); ++n) {
    switch (run.scheme) {
      case TimeScheme::implicit_euler: dissipated += run.dt * e[n + 1]; break;
      case TimeScheme::explicit_euler: dissipated += run.dt * e[n]; break;
      case TimeScheme::crank_nicolson: dissipated += 0.5 * run.dt * (e[n] + e[n + 1]); break;
    }
  }
  return std::abs(run.l2_squared.back() + dissipated - run.l2_squared.front());
}

std::vector<RelaxationRow> relaxation_sweep(std::shared_ptr<const Grid> grid, const Kernel& kernel,
                                            const GraphFunction& u0, std::vector<double> eps_list,
                                            const RelaxationOptions& options) {
  if (eps_list.empty()) throw std::invalid_argument("relaxation_sweep: empty eps list");
  for (double eps : eps_list) {
    if (!(eps > 0.0)) throw std::invalid_argument("relaxation_sweep: eps must be positive");
    if (eps * kernel.support_radius() < 2.0 * grid->max_spacing()) {
      throw std::invalid_argument("relaxation_sweep: eps=" + std::to_string(eps) +
                                  " is not resolved by the grid");
    }
  }
  const double a = kernel.second_moment_half();
  const double dt_target = options.dt > 0.0 ? options.dt : options.final_time / 2000.0;
  const std::size_t steps = step_count(options.final_time, dt_target);
  const double dt = options.final_time / static_cast<double>(steps);
  const double max_eps = *std::max_element(eps_list.begin(), eps_list.end());
  check_truncation_window(*grid, options.final_time, a, max_eps * kernel.support_radius());

  // Local reference u(A t) on the same step grid.
  const LocalOperator local = assemble_local(grid);
  RunOptions ref_opts;
  ref_opts.final_time = a * options.final_time;
  ref_opts.dt = a * dt;
  ref_opts.scheme = options.scheme;
  ref_opts.record_steps = false;
  ref_opts.keep_trajectory = true;
  const RunRecord reference = solve_heat(local, u0, ref_opts);

  PairDistanceCache cache(grid);
  cache.pairs(max_eps * kernel.support_radius());
  const Eigen::VectorXd& w = grid->weights();
  std::vector<RelaxationRow> rows(eps_list.size());
  auto run_one = [&](std::size_t k) {
    const double eps = eps_list[k];
    const NonlocalOperator op = assemble_nonlocal(cache, kernel, eps);
    const NonlocalStepper stepper(op, dt, options.scheme);
    Eigen::VectorXd u = u0.values();
    double acc = 0.0;
    for (std::size_t n = 1; n <= steps; ++n) {
      stepper.advance(u);
      const Eigen::VectorXd diff = u - reference.trajectory[n];
      acc += dt * diff.dot(w.cwiseProduct(diff));
    }
    rows[k] = {eps, std::sqrt(acc)};
  };
  const unsigned jobs = std::max(1u, options.jobs);
  if (jobs == 1) {
    for (std::size_t k = 0; k < eps_list.size(); ++k) run_one(k);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned j = 0; j < jobs; ++j) {
      pool.emplace_back([&, j] {
        for (std::size_t k = j; k < eps_list.size(); k += jobs) run_one(k);
      });
    }
  }
  return rows;
}

double cross_edge_energy(const Grid& grid, const Kernel& kernel, double eps, const GraphFunction& phi,
                         EdgeId e, EdgeId f) {
  if (!(eps > 0.0)) throw std::invalid_argument("cross_edge_energy: eps must be positive");
  const MetricGraph& g = grid.graph();
  const Edge& a = g.edge(e);
  const Edge& b = g.edge(f);
  auto touches = [](const Edge& x, VertexId v) { return x.initial == v || (x.terminal && *x.terminal == v); };
  if (e == f || touches(b, a.initial) || (a.terminal && touches(b, *a.terminal))) {
    throw std::invalid_argument("cross_edge_energy: edges share a vertex");
  }
  const DistanceTable table(grid);
  const double reach = eps * kernel.support_radius();
  const EdgeGrid& ga = grid.edge(e);
  const EdgeGrid& gb = grid.edge(f);
  const auto ua = phi.on_edge(e);
  const auto ub = phi.on_edge(f);
  double total = 0.0;
  for (std::size_t i = 0; i < ga.cells; ++i) {
    const double x = ga.center(i);
    double row = 0.0;
    for (std::size_t j = 0; j < gb.cells; ++j) {
      const double d = table.between(e.value, x, f.value, gb.center(j));
      if (d > reach) continue;
      const double diff = ub[static_cast<Eigen::Index>(j)] - ua[static_cast<Eigen::Index>(i)];
      row += rescaled(kernel, eps, d) * diff * diff * gb.spacing;
    }
    total += row * ga.spacing;
  }
  return total;
}

}  // namespace graphdiff
