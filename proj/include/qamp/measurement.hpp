#pragma once

// Born-rule probabilities for single-qubit rotated-basis measurements, joint
// product-basis pair measurements and full computational-basis measurement,
// plus finite-shot multinomial sampling and the Hoeffding shot planner.
//
// The rotated single-qubit basis is
//   |v0> = cos(theta)|0> + e^{i phi} sin(theta)|1>
//   |v1> = sin(theta)|0> - e^{i phi} cos(theta)|1>
// phi = 0 keeps all cross terms real; phi != 0 exposes imaginary cross terms.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qamp/rng.hpp"
#include "qamp/state.hpp"
#include "qamp/types.hpp"

namespace qamp {

enum class TargetKind { Single, Pair, All };

struct BasisTarget {
  TargetKind kind = TargetKind::Single;
  int k = 0;  // 1-based qubit index (Single, Pair)
  int l = 0;  // second qubit of a Pair

  static BasisTarget single(int k) { return {TargetKind::Single, k, 0}; }
  static BasisTarget pair(int k, int l) { return {TargetKind::Pair, k, l}; }
  static BasisTarget all() { return {TargetKind::All, 0, 0}; }
};

// One measurement basis. For Pair targets theta/phi apply to both qubits
// (a product basis); theta = phi = 0 is the computational basis everywhere.
template <typename Scalar = double>
struct BasisSpec {
  BasisTarget target;
  Scalar theta = Scalar(0);
  Scalar phi = Scalar(0);

  bool is_computational() const { return theta == Scalar(0) && phi == Scalar(0); }
};

template <typename Scalar>
void validate_basis_spec(const BasisSpec<Scalar>& spec, int n) {
  if (!std::isfinite(static_cast<double>(spec.theta)) ||
      !std::isfinite(static_cast<double>(spec.phi))) {
    throw std::invalid_argument("basis angles must be finite");
  }
  switch (spec.target.kind) {
    case TargetKind::Single:
      qubit_shift(n, spec.target.k);
      break;
    case TargetKind::Pair:
      qubit_shift(n, spec.target.k);
      qubit_shift(n, spec.target.l);
      if (spec.target.k == spec.target.l) {
        throw std::invalid_argument("pair target requires distinct qubits");
      }
      break;
    case TargetKind::All:
      if (spec.theta != Scalar(0) || spec.phi != Scalar(0)) {
        throw std::invalid_argument("full-register measurement is computational only");
      }
      break;
  }
}

// Orthonormal basis pair for angles (theta, phi).
template <typename Scalar = double>
std::pair<Eigen::Vector2<std::complex<Scalar>>, Eigen::Vector2<std::complex<Scalar>>>
basis_pair(Scalar theta, Scalar phi) {
  if (!std::isfinite(static_cast<double>(theta)) || !std::isfinite(static_cast<double>(phi))) {
    throw std::invalid_argument("basis angles must be finite");
  }
  const Scalar c = std::cos(theta);
  const Scalar t = std::sin(theta);
  const std::complex<Scalar> e = std::polar(Scalar(1), phi);
  Eigen::Vector2<std::complex<Scalar>> v0(c, e * t);
  Eigen::Vector2<std::complex<Scalar>> v1(t, -e * c);
  return {v0, v1};
}

// Z marginal of one qubit: p0 sums |a_i|^2 over indices with bit k = 0.
template <typename Scalar>
std::pair<Scalar, Scalar> marginal_probs_z(const StateVector<Scalar>& state, int k) {
  const Eigen::Index mask = Eigen::Index(1) << qubit_shift(state.n, k);
  Scalar p0 = 0;
  Scalar p1 = 0;
  for (Eigen::Index i = 0; i < state.amps.size(); ++i) {
    (i & mask ? p1 : p0) += std::norm(state.amps[i]);
  }
  return {p0, p1};
}

// Rotated-basis marginal of one qubit:
//   p0 = sum_s |cos(theta) a_{0s} + e^{-i phi} sin(theta) a_{1s}|^2
//   p1 = sum_s |sin(theta) a_{0s} - e^{-i phi} cos(theta) a_{1s}|^2
// with s ranging over the 2^(n-1) settings of the remaining qubits.
template <typename Scalar>
std::pair<Scalar, Scalar> marginal_probs_basis(const StateVector<Scalar>& state,
                                               const BasisSpec<Scalar>& spec) {
  if (spec.target.kind != TargetKind::Single) {
    throw std::invalid_argument("marginal_probs_basis requires a single-qubit target");
  }
  validate_basis_spec(spec, state.n);
  const Eigen::Index mask = Eigen::Index(1) << qubit_shift(state.n, spec.target.k);
  const Scalar c = std::cos(spec.theta);
  const Scalar t = std::sin(spec.theta);
  const std::complex<Scalar> e = std::polar(Scalar(1), -spec.phi);
  Scalar p0 = 0;
  Scalar p1 = 0;
  for (Eigen::Index i = 0; i < state.amps.size(); ++i) {
    if (i & mask) continue;
    const std::complex<Scalar> a0 = state.amps[i];
    const std::complex<Scalar> a1 = state.amps[i | mask];
    p0 += std::norm(c * a0 + e * (t * a1));
    p1 += std::norm(t * a0 - e * (c * a1));
  }
  return {p0, p1};
}

// Joint product-basis measurement of two qubits, both rotated by (theta, phi).
// Outcomes ordered (0,0), (0,1), (1,0), (1,1) on qubits (k, l).
template <typename Scalar>
std::array<Scalar, 4> pair_probs_basis(const StateVector<Scalar>& state,
                                       const BasisSpec<Scalar>& spec) {
  if (spec.target.kind != TargetKind::Pair) {
    throw std::invalid_argument("pair_probs_basis requires a pair target");
  }
  validate_basis_spec(spec, state.n);
  const Eigen::Index mask_k = Eigen::Index(1) << qubit_shift(state.n, spec.target.k);
  const Eigen::Index mask_l = Eigen::Index(1) << qubit_shift(state.n, spec.target.l);
  const auto [v0, v1] = basis_pair(spec.theta, spec.phi);

  std::array<Scalar, 4> probs{};
  for (int outcome = 0; outcome < 4; ++outcome) {
    const auto& vk = (outcome & 2) ? v1 : v0;
    const auto& vl = (outcome & 1) ? v1 : v0;
    // coefficient of a_{(b1 at k, b2 at l, s)} inside <v_b1 x v_b2 x s | psi>
    std::array<std::complex<Scalar>, 4> coeff;
    for (int b1 = 0; b1 < 2; ++b1) {
      for (int b2 = 0; b2 < 2; ++b2) {
        coeff[2 * b1 + b2] = std::conj(vk[b1]) * std::conj(vl[b2]);
      }
    }
    Scalar p = 0;
    for (Eigen::Index i = 0; i < state.amps.size(); ++i) {
      if ((i & mask_k) || (i & mask_l)) continue;
      std::complex<Scalar> z = 0;
      for (int b1 = 0; b1 < 2; ++b1) {
        for (int b2 = 0; b2 < 2; ++b2) {
          const Eigen::Index idx = i | (b1 ? mask_k : 0) | (b2 ? mask_l : 0);
          z += coeff[2 * b1 + b2] * state.amps[idx];
        }
      }
      p += std::norm(z);
    }
    probs[outcome] = p;
  }
  return probs;
}

// Computational-basis joint measurement of qubits (k, l).
template <typename Scalar>
std::array<Scalar, 4> joint_probs_pair(const StateVector<Scalar>& state, int k, int l) {
  BasisSpec<Scalar> spec{BasisTarget::pair(k, l), Scalar(0), Scalar(0)};
  return pair_probs_basis(state, spec);
}

template <typename Scalar>
RealVector<Scalar> full_computational_probs(const StateVector<Scalar>& state) {
  return state.amps.array().abs2().matrix();
}

// Outcome probabilities for an arbitrary basis spec, in label order.
template <typename Scalar>
RealVector<Scalar> probs_for(const StateVector<Scalar>& state, const BasisSpec<Scalar>& spec) {
  switch (spec.target.kind) {
    case TargetKind::Single: {
      const auto [p0, p1] = marginal_probs_basis(state, spec);
      RealVector<Scalar> p(2);
      p << p0, p1;
      return p;
    }
    case TargetKind::Pair: {
      const auto probs = pair_probs_basis(state, spec);
      RealVector<Scalar> p(4);
      p << probs[0], probs[1], probs[2], probs[3];
      return p;
    }
    case TargetKind::All:
      return full_computational_probs(state);
  }
  throw std::logic_error("unreachable");
}

inline std::string bitstring_label(Eigen::Index value, int bits) {
  std::string label(static_cast<std::size_t>(bits), '0');
  for (int b = 0; b < bits; ++b) {
    if ((value >> (bits - 1 - b)) & 1) label[static_cast<std::size_t>(b)] = '1';
  }
  return label;
}

template <typename Scalar>
std::vector<std::string> outcome_labels(const BasisSpec<Scalar>& spec, int n) {
  int bits = 1;
  if (spec.target.kind == TargetKind::Pair) bits = 2;
  if (spec.target.kind == TargetKind::All) bits = n;
  std::vector<std::string> labels;
  labels.reserve(std::size_t(1) << bits);
  for (Eigen::Index v = 0; v < (Eigen::Index(1) << bits); ++v) {
    labels.push_back(bitstring_label(v, bits));
  }
  return labels;
}

// --- finite-shot estimation ---------------------------------------------

enum class EstimateMode { Exact, Empirical, Empty };

template <typename Scalar = double>
struct ProbabilityEstimate {
  int entry_id = -1;
  std::vector<std::string> labels;
  RealVector<Scalar> probs;
  std::vector<std::uint64_t> counts;
  std::uint64_t shots = 0;
  Scalar eps = Scalar(0);  // per-entry confidence radius at the planner's failure budget
  EstimateMode mode = EstimateMode::Exact;
};

// Analytic pass-through used by exact-mode (shots = 0) pipelines.
template <typename Scalar>
ProbabilityEstimate<Scalar> exact_estimate(const RealVector<Scalar>& probs) {
  ProbabilityEstimate<Scalar> est;
  est.probs = probs;
  est.counts.assign(static_cast<std::size_t>(probs.size()), 0);
  est.mode = EstimateMode::Exact;
  return est;
}

// Multinomial draw of `shots` outcomes; empirical probs are counts/shots.
// Deterministic given the seed; draws use inverse-CDF with binary search.
template <typename Scalar = double>
ProbabilityEstimate<Scalar> sample_counts(const RealVector<Scalar>& probs,
                                          std::int64_t shots, std::uint64_t seed) {
  if (shots < 0) throw std::invalid_argument("shot count must be nonnegative");
  if (probs.size() == 0 || !probs.allFinite() || probs.minCoeff() < Scalar(-1e-12)) {
    throw std::invalid_argument("malformed probability vector");
  }
  if (std::abs(probs.sum() - Scalar(1)) > Scalar(1e-9)) {
    throw std::invalid_argument("probabilities sum to " +
                                std::to_string(static_cast<double>(probs.sum())) +
                                ", expected 1 within 1e-9");
  }

  ProbabilityEstimate<Scalar> est;
  est.shots = static_cast<std::uint64_t>(shots);
  est.counts.assign(static_cast<std::size_t>(probs.size()), 0);
  est.probs = RealVector<Scalar>::Zero(probs.size());
  if (shots == 0) {
    est.mode = EstimateMode::Empty;
    return est;
  }

  std::vector<double> cdf(static_cast<std::size_t>(probs.size()));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += std::max(0.0, static_cast<double>(probs[i]));
    cdf[static_cast<std::size_t>(i)] = acc;
  }
  cdf.back() = 1.0;  // guard the u ~ 1 edge

  Rng rng(seed);
  for (std::int64_t s = 0; s < shots; ++s) {
    const double u = rng.next_double();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const auto idx = static_cast<std::size_t>(it - cdf.begin());
    ++est.counts[std::min(idx, est.counts.size() - 1)];
  }
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    est.probs[i] = static_cast<Scalar>(est.counts[static_cast<std::size_t>(i)]) /
                   static_cast<Scalar>(shots);
  }
  est.mode = EstimateMode::Empirical;
  return est;
}

// Two-sided Hoeffding bound: shots = ceil(ln(2/fail) / (2 eps^2)) guarantee
// |p_hat - p| <= eps with probability at least 1 - fail.
inline std::uint64_t shots_for_accuracy(double eps, double fail) {
  if (!(eps > 0.0 && eps < 1.0) || !(fail > 0.0 && fail < 1.0)) {
    throw std::invalid_argument("shots_for_accuracy requires eps, fail in (0, 1)");
  }
  return static_cast<std::uint64_t>(std::ceil(std::log(2.0 / fail) / (2.0 * eps * eps)));
}

}  // namespace qamp
