#ifndef VKPLATE_SOLVER_HPP
#define VKPLATE_SOLVER_HPP

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "vkplate/forms.hpp"
#include "vkplate/morley.hpp"

namespace vkplate {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sparse direct solve (supernodal LU, COLAMD ordering) followed by up to two
/// steps of iterative refinement. Throws SolverError for singular systems.
inline Eigen::VectorXd linear_solve(const SparseMatrix& matrix, const Eigen::VectorXd& rhs) {
  if (matrix.rows() != matrix.cols() || matrix.rows() != rhs.size())
    throw std::invalid_argument("linear_solve: dimension mismatch");
  if (rhs.size() == 0) return rhs;
  SparseMatrix a = matrix;
  a.makeCompressed();
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(a);
  lu.factorize(a);
  if (lu.info() != Eigen::Success) throw SolverError("linear_solve: factorization failed (" + lu.lastErrorMessage() + ")");
  Eigen::VectorXd x = lu.solve(rhs);
  if (!x.allFinite()) throw SolverError("linear_solve: numerically singular matrix");
  const double bnorm = std::max(rhs.norm(), std::numeric_limits<double>::min());
  for (int step = 0; step < 2; ++step) {
    const Eigen::VectorXd r = rhs - a * x;
    if (r.norm() <= 1e-14 * bnorm) break;
    x += lu.solve(r);
  }
  return x;
}

namespace detail {

using StiffnessFactor = Eigen::SimplicialLDLT<SparseMatrix>;

/// Applies diag(A, A)^{-1} from one factorization of the scalar stiffness matrix.
class BlockStiffnessPreconditioner {
 public:
  using StorageIndex = int;
  enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic };

  BlockStiffnessPreconditioner() = default;
  template <class M>
  BlockStiffnessPreconditioner& analyzePattern(const M&) { return *this; }
  template <class M>
  BlockStiffnessPreconditioner& factorize(const M&) { return *this; }
  template <class M>
  BlockStiffnessPreconditioner& compute(const M&) { return *this; }
  void set_factor(const StiffnessFactor* factor) { factor_ = factor; }

  template <class Rhs>
  Eigen::VectorXd solve(const Rhs& b) const {
    const Eigen::Index n = b.size() / 2;
    Eigen::VectorXd x(b.size());
    x.head(n) = factor_->solve(b.head(n));
    x.tail(n) = factor_->solve(b.tail(n));
    return x;
  }
  Eigen::ComputationInfo info() const { return Eigen::Success; }

 private:
  const StiffnessFactor* factor_ = nullptr;
};

/// Newton step: BiCGSTAB preconditioned by the decoupled biharmonic blocks,
/// falling back to the direct solver if the iteration stalls.
inline Eigen::VectorXd jacobian_solve(const SparseMatrix& jac, const StiffnessFactor& a_factor, const Eigen::VectorXd& rhs) {
  Eigen::BiCGSTAB<SparseMatrix, BlockStiffnessPreconditioner> krylov;
  krylov.compute(jac);
  krylov.preconditioner().set_factor(&a_factor);
  krylov.setTolerance(1e-13);
  krylov.setMaxIterations(200);
  Eigen::VectorXd x = krylov.solve(rhs);
  if (krylov.info() == Eigen::Success && x.allFinite()) return x;
  return linear_solve(jac, rhs);
}

}  // namespace detail

struct NewtonConfig {
  double relative_tol = 1e-10;  // times max(1, load-vector norm)
  int max_iter = 20;
  double damping = 0.5;  // backtracking factor
  int max_halvings = 6;
};

struct SolveReport {
  int iterations = 0;
  std::vector<double> residual_history;
  bool converged = false;
  double tolerance = 0.0;
  double load_norm = 0.0;
};

struct NewtonResult {
  StatePair state;
  SolveReport report;
};

/// Damped Newton iteration for N_h(Psi_M; .) = 0. Each step solves
/// [A_pw + 2 B_pw(Psi^k, ., .)] delta = -N_h(Psi^k) (preconditioned Krylov
/// iteration, direct fallback) and backtracks on the l2 residual. Throws SolverError if the Jacobian is singular; returns
/// converged = false when the iteration budget runs out or damping stalls.
inline NewtonResult newton_solve(const std::shared_ptr<const MorleySpace>& space, const ProblemData& data,
                                 const StatePair& initial, const NewtonConfig& cfg = {}) {
  if (cfg.max_iter < 1 || !(cfg.relative_tol > 0.0) || !(cfg.damping > 0.0 && cfg.damping <= 1.0))
    throw std::invalid_argument("newton_solve: invalid configuration");
  if (initial.space().get() != space.get()) throw std::invalid_argument("newton_solve: initial state on a different space");
  NewtonResult result{initial, {}};
  SolveReport& report = result.report;
  const Eigen::VectorXd load = assemble_load(*space, data);
  report.load_norm = load.norm();
  report.tolerance = cfg.relative_tol * std::max(1.0, report.load_norm);

  Eigen::VectorXd x = initial.packed();
  Eigen::VectorXd residual = apply_N(*space, initial, data, &load);
  double rnorm = residual.norm();
  report.residual_history.push_back(rnorm);
  if (space->n_dofs() == 0 || rnorm <= report.tolerance) {
    report.converged = true;
    return result;
  }
  const detail::StiffnessFactor a_factor(assemble_A(*space));
  if (a_factor.info() != Eigen::Success) throw SolverError("newton_solve: stiffness matrix is not positive definite");
  for (int it = 0; it < cfg.max_iter; ++it) {
    const SparseMatrix jac = assemble_jacobian(*space, result.state, data);
    const Eigen::VectorXd delta = detail::jacobian_solve(jac, a_factor, -residual);
    double alpha = 1.0;
    bool accepted = false;
    for (int h = 0; h <= cfg.max_halvings; ++h) {
      const Eigen::VectorXd trial = x + alpha * delta;
      StatePair candidate = StatePair::unpack(space, trial);
      Eigen::VectorXd r = apply_N(*space, candidate, data, &load);
      const double trial_norm = r.norm();
      if (std::isfinite(trial_norm) && (trial_norm < rnorm || trial_norm <= report.tolerance)) {
        x = trial;
        result.state = std::move(candidate);
        residual = std::move(r);
        rnorm = trial_norm;
        accepted = true;
        break;
      }
      alpha *= cfg.damping;
    }
    report.iterations = it + 1;
    if (!accepted) return result;
    report.residual_history.push_back(rnorm);
    if (rnorm <= report.tolerance) {
      report.converged = true;
      return result;
    }
  }
  return result;
}

}  // namespace vkplate

#endif  // VKPLATE_SOLVER_HPP
