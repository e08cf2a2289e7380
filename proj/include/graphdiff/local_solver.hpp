#ifndef GRAPHDIFF_LOCAL_SOLVER_HPP
#define GRAPHDIFF_LOCAL_SOLVER_HPP

#include <memory>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "graphdiff/time_stepping.hpp"

namespace graphdiff {

/// Finite-volume Laplacian with continuity and Kirchhoff conditions.
///
/// The vertex traces are eliminated: at a vertex with incident first cells
/// u_k and half-spacings h_k/2, the trace is the conductance-weighted mean
///   tau = sum(c_k u_k) / sum(c_k),  c_k = 2/h_k,
/// which makes the net one-sided flux sum(c_k (tau - u_k)) vanish. What
/// remains is a symmetric positive semidefinite `stiffness` S acting on cell
/// values with u^T S u = int |u_x|^2, and the discrete Laplacian is
/// A = -W^{-1} S where W holds the cell measures.
struct LocalOperator {
  std::shared_ptr<const Grid> grid;
  Eigen::SparseMatrix<double> stiffness;
  /// Rows: vertices. tau = trace * u.
  Eigen::SparseMatrix<double> trace;

  /// A u = -W^{-1} S u.
  Eigen::VectorXd apply(const Eigen::VectorXd& u) const;
  /// Explicit A as a sparse matrix.
  Eigen::SparseMatrix<double> laplacian() const;
  /// ||u_x||^2 over the graph, including the half cells next to vertices.
  double gradient_squared(const Eigen::VectorXd& u) const;
};

LocalOperator assemble_local(std::shared_ptr<const Grid> grid);

/// Factor-once stepper for a fixed dt and scheme.
class LocalStepper {
 public:
  LocalStepper(const LocalOperator& op, double dt, TimeScheme scheme);
  void advance(Eigen::VectorXd& u) const;
  double dt() const { return dt_; }

 private:
  const LocalOperator* op_;
  double dt_;
  TimeScheme scheme_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
  Eigen::SparseMatrix<double> rhs_;
};

HeatState step_local(const LocalOperator& op, const HeatState& s, double dt, TimeScheme scheme);

/// Runs from t = 0 to options.final_time. Observations are taken at the
/// step nearest each requested time.
RunRecord solve_heat(const LocalOperator& op, const GraphFunction& u0, const RunOptions& options);

/// |2 sum dt ||u_x||^2 - (||u0||^2 - ||u(T)||^2)| with trapezoidal time
/// quadrature of the stored per-step gradient norms.
double discrete_energy_identity(const RunRecord& run);

}  // namespace graphdiff

#endif  // GRAPHDIFF_LOCAL_SOLVER_HPP
