#pragma once

// Solvers and conditioning diagnostics.
//
// solve_linear: minimum-norm least squares for the marginal probability
// systems. solve_nonlinear: damped Gauss-Newton (Levenberg-Marquardt) with
// multiple seeded starts for the amplitude systems. jacobian_diagnostics /
// theorem1_check: SVD-based rank, ||J^-1|| over the nonzero spectrum, and the
// first-order perturbation bound ||x~ - x|| <= ||J^-1|| ||b~ - b||.
//
// The amplitude systems are square but typically rank-deficient (the global
// phase alone guarantees one null direction), so every "inverse" here is a
// pseudo-inverse restricted to the numerically nonzero spectrum, and the rank
// is always reported next to it.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/QR>
#include <Eigen/SVD>
#include <json.hpp>

#include "qamp/system.hpp"

namespace qamp {

template <typename Scalar = double>
struct JacobianDiagnostics {
  RealVector<Scalar> singular_values;
  int numeric_rank = 0;       // sigma_i > 1e-9 * sigma_max
  Scalar sigma_max = 0;
  Scalar sigma_min = 0;       // smallest singular value above the rank threshold
  Scalar jinv_norm = 0;       // 1 / sigma_min over the nonzero spectrum
};

template <typename Scalar>
JacobianDiagnostics<Scalar> diagnose_matrix(const RealMatrix<Scalar>& J) {
  Eigen::JacobiSVD<RealMatrix<Scalar>> svd(J);
  JacobianDiagnostics<Scalar> d;
  d.singular_values = svd.singularValues();
  d.sigma_max = d.singular_values.size() > 0 ? d.singular_values[0] : Scalar(0);
  const Scalar threshold = Scalar(1e-9) * d.sigma_max;
  for (Eigen::Index i = 0; i < d.singular_values.size(); ++i) {
    if (d.singular_values[i] > threshold) {
      d.numeric_rank = static_cast<int>(i) + 1;
      d.sigma_min = d.singular_values[i];
    }
  }
  d.jinv_norm = d.sigma_min > Scalar(0) ? Scalar(1) / d.sigma_min
                                        : std::numeric_limits<Scalar>::infinity();
  return d;
}

template <typename Scalar>
JacobianDiagnostics<Scalar> jacobian_diagnostics(const NonlinearSystem<Scalar>& system,
                                                 const RealVector<Scalar>& x) {
  return diagnose_matrix<Scalar>(system.jacobian(x));
}

// --- linear least squares ---------------------------------------------------

template <typename Scalar = double>
struct LinearSolveReport {
  RealVector<Scalar> p;        // minimum-norm solution, clipped to [0, inf)
  Scalar residual_norm = 0;    // ||A p_ls - rhs||_2 before clipping
  Scalar clip_delta = 0;       // largest change made by clipping negatives
  JacobianDiagnostics<Scalar> diag;
  bool unique = false;         // full column rank, i.e. solution is unambiguous
};

// Minimum-norm least squares via SVD pseudo-inverse. Negative entries are
// clipped to zero; if the clip changed anything the vector is renormalized to
// sum one, with the clip magnitude reported.
template <typename Scalar>
LinearSolveReport<Scalar> solve_linear(const LinearSystem<Scalar>& system) {
  Eigen::JacobiSVD<RealMatrix<Scalar>> svd(system.A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  LinearSolveReport<Scalar> report;
  report.diag = diagnose_matrix(system.A);
  svd.setThreshold(Scalar(1e-9));
  RealVector<Scalar> p = svd.solve(system.rhs);
  report.residual_norm = (system.A * p - system.rhs).norm();
  report.unique = report.diag.numeric_rank == static_cast<int>(system.A.cols());

  Scalar clip = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] < Scalar(0)) {
      clip = std::max(clip, -p[i]);
      p[i] = Scalar(0);
    }
  }
  report.clip_delta = clip;
  if (clip > Scalar(0) && p.sum() > Scalar(0)) p /= p.sum();
  report.p = std::move(p);
  return report;
}

// --- nonlinear least squares ------------------------------------------------

template <typename Scalar = double>
struct SolveOptions {
  Scalar tol = Scalar(1e-10);        // stop when ||r||_inf <= tol
  Scalar step_tol = Scalar(1e-12);   // stop when no useful step remains
  int max_iterations = 500;
  int restarts = 8;                  // total starts, including the caller's x0
  std::uint64_t seed = 0;            // seeds the extra starts
  Scalar lambda_init = Scalar(1e-3);
};

template <typename Scalar = double>
struct SolveReport {
  RealVector<Scalar> x;              // gauge-fixed solution
  Scalar residual_norm = 0;          // ||f(x) - b||_2
  int iterations = 0;                // iterations of the winning start
  bool converged = false;
  bool diverged = false;             // non-finite residual encountered everywhere
  int best_restart = -1;
  JacobianDiagnostics<Scalar> diag;  // at the returned solution
  bool identifiable = false;         // numeric rank >= N - 1 (global phase allowed)
};

namespace detail {

template <typename Scalar>
struct LmOutcome {
  RealVector<Scalar> x;
  Scalar residual_norm = std::numeric_limits<Scalar>::infinity();
  int iterations = 0;
  bool converged = false;
  bool diverged = false;
};

// One damped Gauss-Newton descent. Damping starts at lambda_init, halves on
// every accepted step and quadruples on rejection; steps solve the damped
// normal equations through QR on the stacked system [J; sqrt(lambda) I].
template <typename Scalar>
LmOutcome<Scalar> lm_single_start(const NonlinearSystem<Scalar>& system,
                                  RealVector<Scalar> x, const SolveOptions<Scalar>& opts) {
  LmOutcome<Scalar> out;
  const Eigen::Index m = system.num_equations();
  const Eigen::Index nv = system.num_vars();

  RealVector<Scalar> r = system.residual(x);
  if (!r.allFinite()) {
    out.diverged = true;
    out.x = std::move(x);
    return out;
  }
  Scalar lambda = opts.lambda_init;

  RealMatrix<Scalar> stacked(m + nv, nv);
  RealVector<Scalar> rhs = RealVector<Scalar>::Zero(m + nv);

  while (out.iterations < opts.max_iterations) {
    if (r.template lpNorm<Eigen::Infinity>() <= opts.tol) {
      out.converged = true;
      break;
    }
    stacked.topRows(m) = system.jacobian(x);
    stacked.bottomRows(nv) = std::sqrt(lambda) * RealMatrix<Scalar>::Identity(nv, nv);
    rhs.head(m) = -r;
    const RealVector<Scalar> step =
        stacked.colPivHouseholderQr().solve(rhs);
    ++out.iterations;

    const RealVector<Scalar> x_new = x + step;
    const RealVector<Scalar> r_new = system.residual(x_new);
    if (!r_new.allFinite() || !step.allFinite()) {
      out.diverged = true;
      break;
    }
    if (r_new.norm() < r.norm()) {
      x = x_new;
      r = r_new;
      lambda *= Scalar(0.5);
      if (step.norm() <= opts.step_tol) {
        out.converged = true;
        break;
      }
    } else {
      lambda *= Scalar(4);
      if (step.norm() <= opts.step_tol) {
        out.converged = true;  // no acceptable step of useful size remains
        break;
      }
    }
  }
  if (r.template lpNorm<Eigen::Infinity>() <= opts.tol) out.converged = true;
  out.x = std::move(x);
  out.residual_norm = r.norm();
  return out;
}

}  // namespace detail

// Multi-start Levenberg-Marquardt. Start 0 is the caller's x0; the remaining
// opts.restarts - 1 starts are Haar-random states drawn from opts.seed. Best
// final residual wins, with ties (within 1e-12) broken by the earliest start.
// The winning solution is gauge-fixed before reporting.
template <typename Scalar>
SolveReport<Scalar> solve_nonlinear(const NonlinearSystem<Scalar>& system,
                                    const RealVector<Scalar>& x0,
                                    const SolveOptions<Scalar>& opts = {}) {
  if (x0.size() != system.num_vars()) {
    throw std::invalid_argument("x0 has length " + std::to_string(x0.size()) + ", expected " +
                                std::to_string(system.num_vars()));
  }
  const int starts = std::max(1, opts.restarts);

  detail::LmOutcome<Scalar> best;
  int best_start = -1;
  for (int s = 0; s < starts; ++s) {
    RealVector<Scalar> start;
    if (s == 0) {
      start = x0;
    } else {
      const auto state =
          random_state<Scalar>(system.n(), stream_seed(opts.seed, "lm-restart", std::uint64_t(s)));
      start = state_to_vars(state);
    }
    auto outcome = detail::lm_single_start(system, std::move(start), opts);
    const bool better =
        best_start < 0 ||
        (!outcome.diverged && (best.diverged ||
                               outcome.residual_norm < best.residual_norm - Scalar(1e-12)));
    if (better) {
      best = std::move(outcome);
      best_start = s;
    }
  }

  SolveReport<Scalar> report;
  report.iterations = best.iterations;
  report.converged = best.converged && !best.diverged;
  report.diverged = best.diverged;
  report.best_restart = best_start;
  report.residual_norm = best.residual_norm;
  report.x = state_to_vars(fix_gauge(vars_to_state<Scalar>(best.x)));
  report.diag = jacobian_diagnostics(system, report.x);
  report.identifiable = report.diag.numeric_rank >= static_cast<int>(system.num_vars()) - 1;
  return report;
}

// --- global-phase alignment ---------------------------------------------------

// Phase alpha maximizing Re <ref, e^{-i alpha} est>, i.e. the rotation that
// brings `est` closest to `ref` in l2.
template <typename Scalar>
Scalar optimal_phase(const ComplexVector<Scalar>& estimate, const ComplexVector<Scalar>& reference) {
  std::complex<Scalar> overlap = 0;
  for (Eigen::Index i = 0; i < estimate.size(); ++i) {
    overlap += std::conj(reference[i]) * estimate[i];
  }
  return std::atan2(overlap.imag(), overlap.real());
}

// min over alpha of ||x_est - R(alpha) x_ref||_2 in the Re/Im layout.
template <typename Scalar>
Scalar phase_aligned_distance(const RealVector<Scalar>& x_est,
                              const RealVector<Scalar>& x_ref) {
  const auto est = vars_to_state<Scalar>(x_est);
  const auto ref = vars_to_state<Scalar>(x_ref);
  const Scalar alpha = optimal_phase(est.amps, ref.amps);
  const std::complex<Scalar> rot = std::polar(Scalar(1), alpha);
  Scalar sq = 0;
  for (Eigen::Index i = 0; i < est.amps.size(); ++i) {
    sq += std::norm(est.amps[i] - rot * ref.amps[i]);
  }
  return std::sqrt(sq);
}

// --- perturbation bound -------------------------------------------------------

enum class BoundStatus { Holds, Violated, NotApplicable };

inline std::string to_string(BoundStatus s) {
  switch (s) {
    case BoundStatus::Holds: return "holds";
    case BoundStatus::Violated: return "violated";
    case BoundStatus::NotApplicable: return "not-applicable";
  }
  return "?";
}

template <typename Scalar = double>
struct BoundCheck {
  Scalar lhs = 0;               // ||x~ - x|| after phase alignment
  Scalar rhs = 0;               // ||J^-1|| ||b~ - b||
  Scalar kappa = Scalar(1.1);
  BoundStatus status = BoundStatus::NotApplicable;
  bool solver_converged = false;
  Scalar perturbation_norm = 0;
  Scalar off_range_fraction = 0;  // part of the perturbation outside range(J)
};

// First-order bound check. The system must carry the exact targets of x_true;
// the perturbed system is solved starting from x_true (single start) so the
// solver tracks the nearby root. Perturbations with a component outside the
// numeric range of J(x_true) are reported not-applicable: no bound tied to
// the nonzero spectrum can control them.
template <typename Scalar>
BoundCheck<Scalar> theorem1_check(const NonlinearSystem<Scalar>& system,
                                  const RealVector<Scalar>& x_true,
                                  const RealVector<Scalar>& b_perturbed,
                                  Scalar kappa = Scalar(1.1),
                                  const SolveOptions<Scalar>& solve_opts = {}) {
  if ((system.evaluate(x_true) - system.target()).template lpNorm<Eigen::Infinity>() >
      Scalar(1e-10)) {
    throw std::invalid_argument("theorem1_check requires a system built in exact mode at x_true");
  }
  BoundCheck<Scalar> check;
  check.kappa = kappa;

  const RealVector<Scalar> delta = b_perturbed - system.target();
  check.perturbation_norm = delta.norm();

  const RealMatrix<Scalar> J = system.jacobian(x_true);
  Eigen::JacobiSVD<RealMatrix<Scalar>> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto diag = diagnose_matrix(J);
  const Eigen::Index rank = diag.numeric_rank;

  if (check.perturbation_norm > Scalar(0)) {
    const auto U = svd.matrixU().leftCols(rank);
    const RealVector<Scalar> off_range = delta - U * (U.transpose() * delta);
    check.off_range_fraction = off_range.norm() / check.perturbation_norm;
  }

  NonlinearSystem<Scalar> perturbed = system;
  perturbed.set_target(b_perturbed);
  SolveOptions<Scalar> opts = solve_opts;
  opts.restarts = 1;  // track the root next to x_true
  const auto report = solve_nonlinear(perturbed, x_true, opts);
  check.solver_converged = report.converged;

  check.lhs = phase_aligned_distance<Scalar>(report.x, x_true);
  check.rhs = diag.jinv_norm * check.perturbation_norm;

  if (check.off_range_fraction > Scalar(1e-9) || report.diverged) {
    check.status = BoundStatus::NotApplicable;
  } else {
    // the 1e-12 floor absorbs pure float noise from the gauge round trip,
    // which matters only when the perturbation itself is zero
    check.status = check.lhs <= kappa * check.rhs + Scalar(1e-12) ? BoundStatus::Holds
                                                                  : BoundStatus::Violated;
  }
  return check;
}

// --- JSON ----------------------------------------------------------------------

inline nlohmann::json solve_report_to_json(const SolveReport<double>& report,
                                           const SolveOptions<double>& opts) {
  nlohmann::json sv = nlohmann::json::array();
  for (Eigen::Index i = 0; i < report.diag.singular_values.size(); ++i) {
    sv.push_back(report.diag.singular_values[i]);
  }
  nlohmann::json x = nlohmann::json::array();
  for (Eigen::Index i = 0; i < report.x.size(); ++i) x.push_back(report.x[i]);
  return nlohmann::json{
      {"x", std::move(x)},
      {"residual_norm", report.residual_norm},
      {"iterations", report.iterations},
      {"converged", report.converged},
      {"diverged", report.diverged},
      {"best_restart", report.best_restart},
      {"sigma_min", report.diag.sigma_min},
      {"sigma_max", report.diag.sigma_max},
      {"numeric_rank", report.diag.numeric_rank},
      {"jinv_norm", report.diag.jinv_norm},
      {"identifiable", report.identifiable},
      {"singular_values", std::move(sv)},
      {"options",
       {{"tol", opts.tol},
        {"step_tol", opts.step_tol},
        {"max_iterations", opts.max_iterations},
        {"restarts", opts.restarts},
        {"seed", opts.seed},
        {"lambda_init", opts.lambda_init}}}};
}

}  // namespace qamp
