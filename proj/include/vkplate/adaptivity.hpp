#ifndef VKPLATE_ADAPTIVITY_HPP
#define VKPLATE_ADAPTIVITY_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vkplate/estimator.hpp"
#include "vkplate/forms.hpp"
#include "vkplate/mesh.hpp"
#include "vkplate/morley.hpp"
#include "vkplate/problems.hpp"
#include "vkplate/solver.hpp"

namespace vkplate {

/// Minimal set M with theta * sum(eta_sq) <= sum_{K in M} eta_sq(K): the
/// shortest prefix of the triangles sorted by decreasing eta_sq (ties by
/// id). Returned ids are ascending. Throws std::domain_error if every entry
/// is zero.
inline std::vector<std::size_t> doerfler_mark(std::span<const double> eta_sq, double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("doerfler_mark: theta must lie in (0, 1]");
  std::vector<std::size_t> order(eta_sq.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (double e : eta_sq)
    if (!(e >= 0.0)) throw std::invalid_argument("doerfler_mark: negative or non-finite indicator");
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return eta_sq[a] > eta_sq[b]; });
  double total = 0.0;
  for (std::size_t t : order) total += eta_sq[t];
  if (total == 0.0) throw std::domain_error("doerfler_mark: estimator vanishes");
  const double goal = theta * total;
  double sum = 0.0;
  std::size_t count = 0;
  while (count < order.size() && sum < goal) sum += eta_sq[order[count++]];
  std::vector<std::size_t> marked(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
  std::sort(marked.begin(), marked.end());
  return marked;
}

enum class Marking { doerfler, all };

struct AmfemConfig {
  double delta = 0.5;  // pre-refine until max h_K = |K|^{1/2} <= delta
  double theta = 0.5;
  int max_levels = 8;
  std::size_t max_ndofs = 200000;
  NewtonConfig newton;
  int osc_order = 0;

  void validate() const {
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("config: delta must lie in (0, 1)");
    if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("config: theta must lie in (0, 1]");
    if (max_levels < 1) throw std::invalid_argument("config: need at least one level");
    if (osc_order < 0 || osc_order > 2) throw std::invalid_argument("config: oscillation order must be 0, 1 or 2");
  }
};

struct LevelRow {
  int level = 0;
  std::size_t ntri = 0;
  std::size_t ndofs = 0;  // dimension of the scalar Morley space
  double eta = 0.0;
  double mu = 0.0;
  double osc = 0.0;
  std::optional<double> err_energy;
  std::optional<double> err_h1pw;
  int newton_iters = 0;
  std::size_t marked = 0;
  double rate_eta = std::numeric_limits<double>::quiet_NaN();  // slope of log eta over log ndofs
  std::vector<double> residual_history;
  double load_norm = 0.0;
};

struct ConvergenceReport {
  std::vector<LevelRow> rows;
  bool completed = true;
  std::string diagnostic;
};

/// Everything known about one solved level; handed to observers.
struct LevelSnapshot {
  int level = 0;
  std::shared_ptr<const Mesh> mesh;
  std::shared_ptr<const MorleySpace> space;
  StatePair state;
  EstimatorReport estimator;
  SolveReport solve;
  std::vector<std::size_t> marked;
};

using LevelObserver = std::function<void(const LevelSnapshot&)>;

/// Solve - estimate - mark - refine loop. Level 0 is the uniform
/// refinement of the initial mesh with max h_K <= delta; its Newton iteration
/// starts from the linear biharmonic solution, later levels from the
/// prolongated previous solution.
inline ConvergenceReport run_levels(const ManufacturedProblem& problem, const AmfemConfig& cfg, Marking marking,
                                    const LevelObserver& observer = {}) {
  cfg.validate();
  ConvergenceReport report;
  auto mesh = std::make_shared<const Mesh>(build_initial_mesh(problem.domain));
  while (mesh->max_mesh_size() > cfg.delta) mesh = std::make_shared<const Mesh>(uniform_refine(*mesh));

  std::optional<LevelSnapshot> previous;
  for (int level = 0; level < cfg.max_levels; ++level) {
    auto space = build_space(mesh);
    StatePair initial = StatePair::zero(space);
    if (previous) {
      initial = prolongate(previous->state, space, mesh_partition(*previous->mesh, *mesh));
    } else {
      ProblemData linear = problem.data;
      linear.nonlinear = false;
      initial = newton_solve(space, linear, initial, cfg.newton).state;
    }
    NewtonResult solved;
    try {
      solved = newton_solve(space, problem.data, initial, cfg.newton);
    } catch (const SolverError& e) {
      report.completed = false;
      report.diagnostic = "level " + std::to_string(level) + ": " + e.what();
      return report;
    }
    if (!solved.report.converged) {
      report.completed = false;
      report.diagnostic = "level " + std::to_string(level) + ": Newton did not converge (residual " +
                          std::to_string(solved.report.residual_history.back()) + ")";
      return report;
    }

    LevelSnapshot snap;
    snap.level = level;
    snap.mesh = mesh;
    snap.space = space;
    snap.state = std::move(solved.state);
    snap.solve = solved.report;
    snap.estimator = estimate(*space, snap.state, problem.data, cfg.osc_order);

    LevelRow row;
    row.level = level;
    row.ntri = mesh->n_triangles();
    row.ndofs = space->n_dofs();
    row.eta = snap.estimator.eta();
    row.mu = snap.estimator.mu();
    row.osc = snap.estimator.osc();
    row.newton_iters = snap.solve.iterations;
    row.residual_history = snap.solve.residual_history;
    row.load_norm = snap.solve.load_norm;
    if (problem.exact) {
      const EnergyNorms norms = energy_norms(*space, snap.state, problem.exact);
      row.err_energy = norms.energy_error;
      row.err_h1pw = norms.h1_error;
    }
    if (!report.rows.empty()) {
      const LevelRow& prev = report.rows.back();
      row.rate_eta = std::log(row.eta / prev.eta) / std::log(static_cast<double>(row.ndofs) / prev.ndofs);
    }

    const bool last = level + 1 == cfg.max_levels || row.ndofs >= cfg.max_ndofs || snap.estimator.eta_sq_total == 0.0;
    if (!last) {
      if (marking == Marking::all) {
        snap.marked.resize(mesh->n_triangles());
        std::iota(snap.marked.begin(), snap.marked.end(), std::size_t{0});
      } else {
        snap.marked = doerfler_mark(snap.estimator.eta_sq, cfg.theta);
      }
      if (snap.marked.empty()) throw std::logic_error("amfem: empty marking with nonzero estimator");
    }
    row.marked = snap.marked.size();
    report.rows.push_back(row);
    if (observer) observer(snap);
    if (last) break;
    mesh = std::make_shared<const Mesh>(refine(*mesh, snap.marked));
    previous = std::move(snap);
  }
  return report;
}

inline ConvergenceReport amfem_run(const ManufacturedProblem& problem, const AmfemConfig& cfg,
                                   const LevelObserver& observer = {}) {
  return run_levels(problem, cfg, Marking::doerfler, observer);
}

inline ConvergenceReport uniform_run(const ManufacturedProblem& problem, const AmfemConfig& cfg,
                                     const LevelObserver& observer = {}) {
  return run_levels(problem, cfg, Marking::all, observer);
}

/// Measured surrogates for the stability (A1) and reduction (A2) constants
/// between a coarse and a fine level. Estimator restrictions are square roots
/// of sums of eta^2 over the respective triangle sets.
struct AxiomDiagnostics {
  int coarse_level = 0;
  double distance = 0.0;  // |||Psi_hat - Psi|||_pw on the fine mesh
  double eta_common = 0.0;
  double eta_hat_common = 0.0;
  double eta_coarse_only = 0.0;
  double eta_hat_fine_only = 0.0;
  double lambda_stab = 0.0;  // |eta_hat(T cap T_hat) - eta(T cap T_hat)| / distance
  double lambda_red = 0.0;   // max(0, eta_hat(T_hat \ T) - 2^{-1/4} eta(T \ T_hat)) / distance
  double mu_coarse_only = 0.0;
  double mu_hat_fine_only = 0.0;
  double mu_reduction = 0.0;  // mu_hat(T_hat \ T) / mu(T \ T_hat)
  bool degenerate = false;    // distance 0 with differing estimators
};

inline AxiomDiagnostics axiom_check(const LevelSnapshot& coarse, const LevelSnapshot& fine) {
  const MeshPartition part = mesh_partition(*coarse.mesh, *fine.mesh);
  AxiomDiagnostics d;
  d.coarse_level = coarse.level;

  // Coarse Hessians are constant on each coarse triangle, hence on each fine one.
  double dist2 = 0.0;
  for (std::size_t t = 0; t < fine.mesh->n_triangles(); ++t) {
    const std::size_t k = part.ancestor[t];
    const SymMatrix2 du = fine.state.u.hessian(t) - coarse.state.u.hessian(k);
    const SymMatrix2 dv = fine.state.v.hessian(t) - coarse.state.v.hessian(k);
    dist2 += fine.mesh->area(t) * (double_dot(du, du) + double_dot(dv, dv));
  }
  d.distance = std::sqrt(dist2);

  const auto& est = coarse.estimator;
  const auto& est_hat = fine.estimator;
  d.eta_common = std::sqrt(restrict_estimator(est, part.common_coarse));
  d.eta_hat_common = std::sqrt(restrict_estimator(est_hat, part.common_fine));
  d.eta_coarse_only = std::sqrt(restrict_estimator(est, part.coarse_only));
  d.eta_hat_fine_only = std::sqrt(restrict_estimator(est_hat, part.fine_only));
  d.mu_coarse_only = std::sqrt(restrict_estimator(std::span<const double>(est.mu_sq), part.coarse_only));
  d.mu_hat_fine_only = std::sqrt(restrict_estimator(std::span<const double>(est_hat.mu_sq), part.fine_only));
  d.mu_reduction = d.mu_coarse_only > 0.0 ? d.mu_hat_fine_only / d.mu_coarse_only : 0.0;

  const double stab = std::abs(d.eta_hat_common - d.eta_common);
  const double red = std::max(0.0, d.eta_hat_fine_only - std::pow(2.0, -0.25) * d.eta_coarse_only);
  if (d.distance > 0.0) {
    d.lambda_stab = stab / d.distance;
    d.lambda_red = red / d.distance;
  } else if (stab > 0.0 || red > 0.0) {
    d.degenerate = true;
    d.lambda_stab = stab > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    d.lambda_red = red > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  return d;
}

/// Runs the level loop and evaluates axiom_check between consecutive levels.
inline std::vector<AxiomDiagnostics> axiom_run(const ManufacturedProblem& problem, const AmfemConfig& cfg,
                                               Marking marking, ConvergenceReport* report_out = nullptr,
                                               const LevelObserver& observer = {}) {
  std::vector<AxiomDiagnostics> out;
  std::optional<LevelSnapshot> previous;
  ConvergenceReport report = run_levels(problem, cfg, marking, [&](const LevelSnapshot& snap) {
    if (previous) out.push_back(axiom_check(*previous, snap));
    previous = snap;
    if (observer) observer(snap);
  });
  if (report_out) *report_out = std::move(report);
  return out;
}

}  // namespace vkplate

#endif  // VKPLATE_ADAPTIVITY_HPP
