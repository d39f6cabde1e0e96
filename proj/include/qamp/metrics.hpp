#pragma once

// Error metrics between an estimated and a true state, the per-entry accuracy
// budgets that plan shot counts for each target metric, and the naive
// all-qubit baseline estimator.
//
// Budget formulas (per-entry accuracy eps for a target error delta):
//   additive-norm   eps = delta^2 / (4 sqrt(2) ||J^-1|| sqrt(2^(n+1)))
//   additive-complex eps = delta / (||J^-1|| sqrt(2^n))
//   tv              eps = delta / (2 sqrt(2) 2^n ||J^-1||)
//   avg-l1          eps = delta^2 / (sqrt(2) ||J^-1||)
// The additive-norm budget uses the full real dimension 2^(n+1) while the
// others carry constants derived with 2^n; the asymmetry is kept as-is (see
// README). Naive baseline budgets: tv eps = delta/2^n, norm targets
// eps = delta^2 (square-root error propagation).

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include "qamp/measurement.hpp"
#include "qamp/solver.hpp"

namespace qamp {

template <typename Scalar = double>
struct ErrorReport {
  Scalar max_norm_err = 0;     // max_i | |a~_i| - |a_i| |
  Scalar complex_err = 0;      // min over global phase of max_i |a~_i - e^{i a} a_i|
  Scalar total_variation = 0;  // sum_i | |a~_i|^2 - |a_i|^2 |
  Scalar avg_l1 = 0;           // mean_i | |a~_i| - |a_i| |
  std::uint64_t shots_total = 0;
};

enum class Metric { AdditiveNorm, AdditiveComplex, TotalVariation, AvgL1 };

inline std::string to_string(Metric m) {
  switch (m) {
    case Metric::AdditiveNorm: return "additive-norm";
    case Metric::AdditiveComplex: return "additive-complex";
    case Metric::TotalVariation: return "tv";
    case Metric::AvgL1: return "avg-l1";
  }
  return "?";
}

inline Metric metric_from_string(const std::string& s) {
  if (s == "additive-norm") return Metric::AdditiveNorm;
  if (s == "additive-complex") return Metric::AdditiveComplex;
  if (s == "tv") return Metric::TotalVariation;
  if (s == "avg-l1") return Metric::AvgL1;
  throw std::invalid_argument("unknown metric '" + s + "'");
}

template <typename Scalar>
Scalar achieved_metric(const ErrorReport<Scalar>& report, Metric metric) {
  switch (metric) {
    case Metric::AdditiveNorm: return report.max_norm_err;
    case Metric::AdditiveComplex: return report.complex_err;
    case Metric::TotalVariation: return report.total_variation;
    case Metric::AvgL1: return report.avg_l1;
  }
  throw std::logic_error("unreachable");
}

// All four metrics of an estimated state against the truth. The phase for
// complex_err is the closed-form overlap maximizer, then the max-modulus
// difference is taken at that phase.
template <typename Scalar>
ErrorReport<Scalar> error_report(const StateVector<Scalar>& estimate,
                                 const StateVector<Scalar>& truth,
                                 std::uint64_t shots_total = 0) {
  if (estimate.dim() != truth.dim()) {
    throw std::invalid_argument("estimate and truth dimensions differ");
  }
  ErrorReport<Scalar> report;
  report.shots_total = shots_total;
  const Scalar alpha = optimal_phase(estimate.amps, truth.amps);
  const std::complex<Scalar> rot = std::polar(Scalar(1), alpha);
  Scalar sum_l1 = 0;
  for (Eigen::Index i = 0; i < truth.dim(); ++i) {
    const Scalar norm_err = std::abs(std::abs(estimate.amps[i]) - std::abs(truth.amps[i]));
    report.max_norm_err = std::max(report.max_norm_err, norm_err);
    sum_l1 += norm_err;
    report.total_variation += std::abs(std::norm(estimate.amps[i]) - std::norm(truth.amps[i]));
    report.complex_err =
        std::max(report.complex_err, std::abs(estimate.amps[i] - rot * truth.amps[i]));
  }
  report.avg_l1 = sum_l1 / static_cast<Scalar>(truth.dim());
  return report;
}

// Probability-vector overload (naive and linear estimators): norms are
// sqrt(p~); phases are unknown, so complex_err is NaN.
template <typename Scalar>
ErrorReport<Scalar> error_report(const RealVector<Scalar>& prob_estimate,
                                 const StateVector<Scalar>& truth,
                                 std::uint64_t shots_total = 0) {
  if (prob_estimate.size() != truth.dim()) {
    throw std::invalid_argument("estimate and truth dimensions differ");
  }
  ErrorReport<Scalar> report;
  report.shots_total = shots_total;
  report.complex_err = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar sum_l1 = 0;
  for (Eigen::Index i = 0; i < truth.dim(); ++i) {
    const Scalar p = std::max(Scalar(0), prob_estimate[i]);
    const Scalar norm_err = std::abs(std::sqrt(p) - std::abs(truth.amps[i]));
    report.max_norm_err = std::max(report.max_norm_err, norm_err);
    sum_l1 += norm_err;
    report.total_variation += std::abs(p - std::norm(truth.amps[i]));
  }
  report.avg_l1 = sum_l1 / static_cast<Scalar>(truth.dim());
  return report;
}

// --- per-entry accuracy budgets ----------------------------------------------

namespace detail {
template <typename Scalar>
void require_positive(Scalar delta, Scalar jinv_norm) {
  if (!(delta > Scalar(0)) || !(jinv_norm > Scalar(0))) {
    throw std::invalid_argument("budget formulas require positive delta and ||J^-1||");
  }
}
}  // namespace detail

// eps = delta^2 / (4 sqrt(2) ||J^-1|| sqrt(N)), N = 2^(n+1)
template <typename Scalar = double>
Scalar epsilon_for_additive(Scalar delta, int n, Scalar jinv_norm) {
  detail::require_positive(delta, jinv_norm);
  if (n < 1) throw std::invalid_argument("qubit count must be positive");
  const Scalar sqrt_n = std::sqrt(static_cast<Scalar>(Eigen::Index(2) << n));
  return delta * delta / (Scalar(4) * std::sqrt(Scalar(2)) * jinv_norm * sqrt_n);
}

// eps = delta / (||J^-1|| sqrt(2^n))
template <typename Scalar = double>
Scalar epsilon_for_additive_complex(Scalar delta, int n, Scalar jinv_norm) {
  detail::require_positive(delta, jinv_norm);
  if (n < 1) throw std::invalid_argument("qubit count must be positive");
  return delta / (jinv_norm * std::sqrt(static_cast<Scalar>(Eigen::Index(1) << n)));
}

// eps = delta / (2 sqrt(2) 2^n ||J^-1||)
template <typename Scalar = double>
Scalar epsilon_for_tv(Scalar delta, int n, Scalar jinv_norm) {
  detail::require_positive(delta, jinv_norm);
  if (n < 1) throw std::invalid_argument("qubit count must be positive");
  return delta / (Scalar(2) * std::sqrt(Scalar(2)) * static_cast<Scalar>(Eigen::Index(1) << n) *
                  jinv_norm);
}

// eps = delta^2 / (sqrt(2) ||J^-1||); independent of n
template <typename Scalar = double>
Scalar epsilon_for_avg_l1(Scalar delta, Scalar jinv_norm) {
  detail::require_positive(delta, jinv_norm);
  return delta * delta / (std::sqrt(Scalar(2)) * jinv_norm);
}

template <typename Scalar = double>
Scalar epsilon_for(Metric metric, Scalar delta, int n, Scalar jinv_norm) {
  switch (metric) {
    case Metric::AdditiveNorm: return epsilon_for_additive(delta, n, jinv_norm);
    case Metric::AdditiveComplex: return epsilon_for_additive_complex(delta, n, jinv_norm);
    case Metric::TotalVariation: return epsilon_for_tv(delta, n, jinv_norm);
    case Metric::AvgL1: return epsilon_for_avg_l1(delta, jinv_norm);
  }
  throw std::logic_error("unreachable");
}

// Naive all-qubit baseline budgets: tv needs 2^n eps = delta; the norm
// targets propagate through the square root, |sqrt(p~) - sqrt(p)| <= sqrt(eps).
template <typename Scalar = double>
Scalar naive_epsilon_for(Metric metric, Scalar delta, int n) {
  if (!(delta > Scalar(0))) throw std::invalid_argument("delta must be positive");
  switch (metric) {
    case Metric::TotalVariation:
      return delta / static_cast<Scalar>(Eigen::Index(1) << n);
    case Metric::AdditiveNorm:
    case Metric::AvgL1:
      return delta * delta;
    case Metric::AdditiveComplex:
      throw std::invalid_argument("the naive baseline estimates norms only, not phases");
  }
  throw std::logic_error("unreachable");
}

// Per-entry accuracy for the linear marginal path: the least-squares
// perturbation ||dp||_2 <= ||A^+|| sqrt(rows) eps feeds either the total
// variation (l1 <= sqrt(dim) l2) or the square-root propagation.
template <typename Scalar = double>
Scalar linear_epsilon_for(Metric metric, Scalar delta, Scalar pinv_norm, int rows, int n) {
  detail::require_positive(delta, pinv_norm);
  const Scalar row_factor = pinv_norm * std::sqrt(static_cast<Scalar>(rows));
  switch (metric) {
    case Metric::TotalVariation:
      return delta / (row_factor * std::sqrt(static_cast<Scalar>(Eigen::Index(1) << n)));
    case Metric::AdditiveNorm:
    case Metric::AvgL1:
      return delta * delta / row_factor;
    case Metric::AdditiveComplex:
      throw std::invalid_argument("the linear path estimates norms only, not phases");
  }
  throw std::logic_error("unreachable");
}

// --- naive baseline -----------------------------------------------------------

template <typename Scalar = double>
struct NaiveEstimate {
  RealVector<Scalar> probs;  // empirical frequencies of the full measurement
  RealVector<Scalar> norms;  // sqrt(p~)
  std::vector<std::uint64_t> counts;
  std::uint64_t shots = 0;
};

// Samples the full computational-basis measurement and propagates to norms.
template <typename Scalar>
NaiveEstimate<Scalar> naive_estimate(const StateVector<Scalar>& state, std::int64_t shots,
                                     std::uint64_t seed) {
  if (shots <= 0) throw std::invalid_argument("naive_estimate requires shots > 0");
  auto est = sample_counts<Scalar>(full_computational_probs(state), shots, seed);
  NaiveEstimate<Scalar> out;
  out.probs = est.probs;
  out.norms = est.probs.array().max(Scalar(0)).sqrt().matrix();
  out.counts = std::move(est.counts);
  out.shots = est.shots;
  return out;
}

}  // namespace qamp
