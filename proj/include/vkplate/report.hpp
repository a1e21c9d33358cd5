#ifndef VKPLATE_REPORT_HPP
#define VKPLATE_REPORT_HPP

#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vkplate/adaptivity.hpp"
#include "vkplate/estimator.hpp"
#include "vkplate/mesh.hpp"

namespace vkplate {

inline constexpr const char* report_csv_header =
    "level,ntri,ndofs,eta,mu,osc,err_energy,err_h1pw,newton_iters,marked,rate_eta";

namespace detail {

inline std::string format_real(double x) {
  if (std::isnan(x)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10e", x);
  return buf;
}

inline std::string format_optional(const std::optional<double>& x) { return x ? format_real(*x) : ""; }

}  // namespace detail

/// One row per level; error cells stay empty when no exact solution exists.
inline void write_report_csv(std::ostream& out, const ConvergenceReport& report) {
  out << report_csv_header << '\n';
  for (const LevelRow& r : report.rows) {
    out << r.level << ',' << r.ntri << ',' << r.ndofs << ',' << detail::format_real(r.eta) << ','
        << detail::format_real(r.mu) << ',' << detail::format_real(r.osc) << ',' << detail::format_optional(r.err_energy)
        << ',' << detail::format_optional(r.err_h1pw) << ',' << r.newton_iters << ',' << r.marked << ','
        << detail::format_real(r.rate_eta) << '\n';
  }
}

inline void write_estimator_csv(std::ostream& out, const Mesh& mesh, const EstimatorReport& est) {
  out << "triangle_id,area,eta_sq,mu_sq,osc_sq\n";
  for (std::size_t t = 0; t < mesh.n_triangles(); ++t)
    out << t << ',' << detail::format_real(mesh.area(t)) << ',' << detail::format_real(est.eta_sq[t]) << ','
        << detail::format_real(est.mu_sq[t]) << ',' << detail::format_real(est.osc_sq[t]) << '\n';
}

inline void write_axioms_csv(std::ostream& out, const std::vector<AxiomDiagnostics>& diags) {
  out << "coarse_level,distance,eta_common,eta_hat_common,eta_coarse_only,eta_hat_fine_only,lambda_stab,lambda_red,"
         "mu_reduction,degenerate\n";
  for (const auto& d : diags)
    out << d.coarse_level << ',' << detail::format_real(d.distance) << ',' << detail::format_real(d.eta_common) << ','
        << detail::format_real(d.eta_hat_common) << ',' << detail::format_real(d.eta_coarse_only) << ','
        << detail::format_real(d.eta_hat_fine_only) << ',' << detail::format_real(d.lambda_stab) << ','
        << detail::format_real(d.lambda_red) << ',' << detail::format_real(d.mu_reduction) << ','
        << (d.degenerate ? 1 : 0) << '\n';
}

/// Experimental order of convergence -log(e_{l+1}/e_l) / log(N_{l+1}/N_l)
/// with N = ndofs. Positive for decaying quantities; +inf once a quantity
/// drops to zero.
inline double convergence_order(double e0, double e1, double n0, double n1) {
  if (!(n1 > n0)) throw std::invalid_argument("convergence_order: DOF count must increase");
  if (e1 == 0.0) return std::numeric_limits<double>::infinity();
  return -std::log(e1 / e0) / std::log(n1 / n0);
}

struct RateRow {
  int level = 0;  // rate between level-1 and level
  double eta = 0.0;
  std::optional<double> energy;
  std::optional<double> h1;
};

inline std::vector<RateRow> rate_table(const ConvergenceReport& report) {
  if (report.rows.size() < 2) throw std::invalid_argument("rate_table: need at least two levels");
  std::vector<RateRow> rates;
  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    const LevelRow& a = report.rows[i - 1];
    const LevelRow& b = report.rows[i];
    RateRow r;
    r.level = b.level;
    const double n0 = static_cast<double>(a.ndofs), n1 = static_cast<double>(b.ndofs);
    r.eta = convergence_order(a.eta, b.eta, n0, n1);
    if (a.err_energy && b.err_energy) r.energy = convergence_order(*a.err_energy, *b.err_energy, n0, n1);
    if (a.err_h1pw && b.err_h1pw) r.h1 = convergence_order(*a.err_h1pw, *b.err_h1pw, n0, n1);
    rates.push_back(r);
  }
  return rates;
}

/// Least-squares slope of log(value) over log(ndofs) for the last `count` rows.
template <class Get>
double fitted_slope(const ConvergenceReport& report, std::size_t count, Get&& get) {
  if (count < 2 || report.rows.size() < count) throw std::invalid_argument("fitted_slope: not enough levels");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = report.rows.size() - count; i < report.rows.size(); ++i) {
    const double x = std::log(static_cast<double>(report.rows[i].ndofs));
    const double y = std::log(get(report.rows[i]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(count);
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace vkplate

#endif  // VKPLATE_REPORT_HPP
