#ifndef GRAPHDIFF_NONLOCAL_SOLVER_HPP
#define GRAPHDIFF_NONLOCAL_SOLVER_HPP

#include <memory>
#include <mutex>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "graphdiff/kernel.hpp"
#include "graphdiff/time_stepping.hpp"

namespace graphdiff {

/// Cell pairs (i, j), i != j, whose centers lie within `cutoff` of each
/// other in graph distance. Rows are sorted by j.
struct PairList {
  struct Entry {
    std::size_t column;
    double distance;
  };
  double cutoff = 0.0;
  std::vector<std::vector<Entry>> rows;
  std::size_t nonzeros() const;
};

/// Computes the pair list of a grid for the largest cutoff requested so far
/// and filters it for smaller ones.
class PairDistanceCache {
 public:
  explicit PairDistanceCache(std::shared_ptr<const Grid> grid) : grid_(std::move(grid)) {}
  std::shared_ptr<const PairList> pairs(double cutoff);
  const std::shared_ptr<const Grid>& grid() const { return grid_; }

 private:
  std::shared_ptr<const Grid> grid_;
  std::shared_ptr<const PairList> cached_;
  std::mutex mutex_;
};

/// Enumerates every pair of cell centers within `cutoff`.
PairList enumerate_pairs(const Grid& grid, double cutoff);

/// L u = K u - D u with K_ij = J_eps(d(x_i, x_j)) w_j and D_i = sum_j K_ij.
struct NonlocalOperator {
  std::shared_ptr<const Grid> grid;
  Kernel kernel;
  double eps = 1.0;
  Eigen::SparseMatrix<double, Eigen::RowMajor> couplings;
  Eigen::VectorXd diagonal;

  double max_diagonal() const { return diagonal.size() ? diagonal.maxCoeff() : 0.0; }
};

/// Throws if eps * support < 2 max h, or if the band would be too dense.
NonlocalOperator assemble_nonlocal(std::shared_ptr<const Grid> grid, const Kernel& kernel, double eps);
NonlocalOperator assemble_nonlocal(PairDistanceCache& cache, const Kernel& kernel, double eps);

/// (L u)_i = sum_j K_ij (u_j - u_i).
Eigen::VectorXd apply_operator(const NonlocalOperator& op, const Eigen::VectorXd& u);
GraphFunction apply_operator(const NonlocalOperator& op, const GraphFunction& u);

/// int int J_eps(d(x,y)) (u(x) - u(y))^2 dx dy, midpoint quadrature.
double energy(const NonlocalOperator& op, const Eigen::VectorXd& u);
double energy(const NonlocalOperator& op, const GraphFunction& u);

class NonlocalStepper {
 public:
  /// Explicit Euler requires dt * 2 max D <= 1.
  NonlocalStepper(const NonlocalOperator& op, double dt, TimeScheme scheme);
  void advance(Eigen::VectorXd& u) const;

 private:
  const NonlocalOperator* op_;
  double dt_;
  TimeScheme scheme_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
  Eigen::SparseMatrix<double> rhs_;
};

HeatState step_nonlocal(const NonlocalOperator& op, const HeatState& s, double dt, TimeScheme scheme);

RunRecord solve_nonlocal(const NonlocalOperator& op, const GraphFunction& u0, const RunOptions& options);

/// |‖u(T)‖² + sum dt E(u_{n+theta}) - ‖u0‖²| using the stored per-step
/// energies (right endpoint for implicit Euler, left for explicit, average for
/// Crank-Nicolson). O(dt) for the Euler schemes.
double nonlocal_energy_identity(const RunRecord& run);

struct RelaxationRow {
  double eps = 0.0;
  double space_time_l2_error = 0.0;
};

struct RelaxationOptions {
  double final_time = 1.0;
  double dt = 0.0;  // 0 selects final_time / 2000
  TimeScheme scheme = TimeScheme::implicit_euler;
  unsigned jobs = 1;
};

/// For each eps, ||u^eps - u_local||_{L2((0,T) x graph)} on the shared time
/// grid. The local reference runs at time A*t so unnormalized kernels compare
/// against the correctly scaled heat flow.
std::vector<RelaxationRow> relaxation_sweep(std::shared_ptr<const Grid> grid, const Kernel& kernel,
                                            const GraphFunction& u0, std::vector<double> eps_list,
                                            const RelaxationOptions& options);

/// eps^-3 int_e int_e' J(d/eps) (phi(y) - phi(x))^2 dx dy for two edges
/// without a common vertex.
double cross_edge_energy(const Grid& grid, const Kernel& kernel, double eps, const GraphFunction& phi,
                         EdgeId e, EdgeId f);

}  // namespace graphdiff

#endif  // GRAPHDIFF_NONLOCAL_SOLVER_HPP
