#pragma once

// Algebraic systems built from measurement plans.
//
// The nonlinear system works on x in R^(2^(n+1)) with the layout
//   x[2j] = Re a_j, x[2j+1] = Im a_j  (j = basis index).
// Every equation is a sum of squared moduli of complex linear forms
//   f(x) = sum_g |z_g(x)|^2,   z_g = sum_j gamma_j a_j,
// so f is quadratic and its Jacobian is linear in x:
//   df/dRe a_j = 2 Re(conj(z) gamma_j),  df/dIm a_j = -2 Im(conj(z) gamma_j).
// Coefficient patterns are kept symbolically (basis spec + outcome), so
// evaluation runs in O(equations * 2^n) without materializing anything big.

#include <array>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qamp/plan.hpp"

namespace qamp {

template <typename Scalar = double>
struct Equation {
  int entry_id = -1;  // index of the plan entry that produced this row
  BasisSpec<Scalar> spec;
  int outcome = 0;  // 0/1 for single targets, 0..3 for pairs
};

template <typename Scalar = double>
class NonlinearSystem {
 public:
  NonlinearSystem(int n, std::vector<Equation<Scalar>> equations, RealVector<Scalar> target)
      : n_(n), equations_(std::move(equations)), target_(std::move(target)) {
    if (static_cast<Eigen::Index>(equations_.size()) != target_.size()) {
      throw std::invalid_argument("equation count does not match target vector length");
    }
  }

  int n() const { return n_; }
  Eigen::Index num_vars() const { return Eigen::Index(2) << n_; }
  Eigen::Index num_equations() const { return static_cast<Eigen::Index>(equations_.size()); }
  const std::vector<Equation<Scalar>>& equations() const { return equations_; }

  const RealVector<Scalar>& target() const { return target_; }
  void set_target(RealVector<Scalar> b) {
    if (b.size() != num_equations()) throw std::invalid_argument("target length mismatch");
    target_ = std::move(b);
  }

  RealVector<Scalar> evaluate(const RealVector<Scalar>& x) const {
    check_x(x);
    RealVector<Scalar> f(num_equations());
    for (Eigen::Index q = 0; q < num_equations(); ++q) {
      f[q] = accumulate(equations_[static_cast<std::size_t>(q)], x, nullptr, 0);
    }
    return f;
  }

  RealMatrix<Scalar> jacobian(const RealVector<Scalar>& x) const {
    check_x(x);
    RealMatrix<Scalar> J = RealMatrix<Scalar>::Zero(num_equations(), num_vars());
    for (Eigen::Index q = 0; q < num_equations(); ++q) {
      accumulate(equations_[static_cast<std::size_t>(q)], x, &J, q);
    }
    return J;
  }

  RealVector<Scalar> residual(const RealVector<Scalar>& x) const {
    return evaluate(x) - target_;
  }

 private:
  void check_x(const RealVector<Scalar>& x) const {
    if (x.size() != num_vars()) {
      throw std::invalid_argument("variable vector has length " + std::to_string(x.size()) +
                                  ", expected " + std::to_string(num_vars()));
    }
  }

  static std::complex<Scalar> amp_at(const RealVector<Scalar>& x,
                                     Eigen::Index j) {
    return {x[2 * j], x[2 * j + 1]};
  }

  // Evaluates one equation; when J is non-null also accumulates its gradient
  // into row `row` of J.
  Scalar accumulate(const Equation<Scalar>& eq, const RealVector<Scalar>& x,
                    RealMatrix<Scalar>* J, Eigen::Index row) const {
    const Eigen::Index dim = Eigen::Index(1) << n_;
    Scalar value = 0;
    const auto add_form = [&](const std::complex<Scalar>& z, Eigen::Index j,
                              const std::complex<Scalar>& gamma) {
      const std::complex<Scalar> w = std::conj(z) * gamma;
      (*J)(row, 2 * j) += Scalar(2) * w.real();
      (*J)(row, 2 * j + 1) -= Scalar(2) * w.imag();
    };

    if (eq.spec.target.kind == TargetKind::Single) {
      const Eigen::Index mask = Eigen::Index(1) << qubit_shift(n_, eq.spec.target.k);
      const Scalar c = std::cos(eq.spec.theta);
      const Scalar t = std::sin(eq.spec.theta);
      const std::complex<Scalar> e = std::polar(Scalar(1), -eq.spec.phi);
      // outcome 0: z = cos a0 + e^{-i phi} sin a1; outcome 1: sin a0 - e^{-i phi} cos a1
      const Scalar alpha = eq.outcome == 0 ? c : t;
      const std::complex<Scalar> beta = eq.outcome == 0 ? e * t : -e * c;
      for (Eigen::Index i = 0; i < dim; ++i) {
        if (i & mask) continue;
        const Eigen::Index i1 = i | mask;
        const std::complex<Scalar> z = alpha * amp_at(x, i) + beta * amp_at(x, i1);
        value += std::norm(z);
        if (J != nullptr) {
          add_form(z, i, std::complex<Scalar>(alpha, 0));
          add_form(z, i1, beta);
        }
      }
      return value;
    }

    if (eq.spec.target.kind == TargetKind::Pair) {
      const Eigen::Index mask_k = Eigen::Index(1) << qubit_shift(n_, eq.spec.target.k);
      const Eigen::Index mask_l = Eigen::Index(1) << qubit_shift(n_, eq.spec.target.l);
      const auto [v0, v1] = basis_pair(eq.spec.theta, eq.spec.phi);
      const auto& vk = (eq.outcome & 2) ? v1 : v0;
      const auto& vl = (eq.outcome & 1) ? v1 : v0;
      std::array<std::complex<Scalar>, 4> gamma;
      std::array<Eigen::Index, 4> offset;
      for (int b1 = 0; b1 < 2; ++b1) {
        for (int b2 = 0; b2 < 2; ++b2) {
          gamma[static_cast<std::size_t>(2 * b1 + b2)] = std::conj(vk[b1]) * std::conj(vl[b2]);
          offset[static_cast<std::size_t>(2 * b1 + b2)] =
              (b1 ? mask_k : 0) | (b2 ? mask_l : 0);
        }
      }
      for (Eigen::Index i = 0; i < dim; ++i) {
        if ((i & mask_k) || (i & mask_l)) continue;
        std::complex<Scalar> z = 0;
        for (int m = 0; m < 4; ++m) {
          z += gamma[static_cast<std::size_t>(m)] * amp_at(x, i | offset[static_cast<std::size_t>(m)]);
        }
        value += std::norm(z);
        if (J != nullptr) {
          for (int m = 0; m < 4; ++m) {
            add_form(z, i | offset[static_cast<std::size_t>(m)], gamma[static_cast<std::size_t>(m)]);
          }
        }
      }
      return value;
    }

    throw std::invalid_argument("full-register entries cannot appear in a nonlinear system");
  }

  int n_;
  std::vector<Equation<Scalar>> equations_;
  RealVector<Scalar> target_;
};

// One equation per outcome per plan entry, in plan order, with the target
// vector taken from the supplied estimates. Both outcomes of a single-qubit
// entry are kept even though they are dependent given normalization; the
// redundancy feeds least-squares averaging.
template <typename Scalar>
NonlinearSystem<Scalar> build_nonlinear_system(const MeasurementPlan<Scalar>& plan,
                                               const std::vector<ProbabilityEstimate<Scalar>>& estimates) {
  validate_plan(plan);
  if (estimates.size() != plan.entries.size()) {
    throw std::invalid_argument("expected " + std::to_string(plan.entries.size()) +
                                " estimates, got " + std::to_string(estimates.size()));
  }
  std::vector<Equation<Scalar>> equations;
  std::vector<Scalar> target;
  for (std::size_t idx = 0; idx < plan.entries.size(); ++idx) {
    const auto& spec = plan.entries[idx].spec;
    const int outcomes = outcome_count(spec, plan.n);
    if (spec.target.kind == TargetKind::All) {
      throw std::invalid_argument("plan entry " + std::to_string(idx) +
                                  " targets the full register; not usable in a nonlinear system");
    }
    const auto& est = estimates[idx];
    if (est.probs.size() != outcomes) {
      throw std::invalid_argument("estimate for plan entry " + std::to_string(idx) +
                                  " has wrong outcome count");
    }
    for (int outcome = 0; outcome < outcomes; ++outcome) {
      equations.push_back(Equation<Scalar>{static_cast<int>(idx), spec, outcome});
      target.push_back(est.probs[outcome]);
    }
  }
  RealVector<Scalar> b = Eigen::Map<const RealVector<Scalar>>(target.data(),
                                                              static_cast<Eigen::Index>(target.size()));
  return NonlinearSystem<Scalar>(plan.n, std::move(equations), std::move(b));
}

// Builds the system with exact probabilities of `state` as the target.
template <typename Scalar>
NonlinearSystem<Scalar> build_exact_system(const MeasurementPlan<Scalar>& plan,
                                           const StateVector<Scalar>& state) {
  std::vector<ProbabilityEstimate<Scalar>> estimates;
  estimates.reserve(plan.entries.size());
  for (const auto& entry : plan.entries) {
    estimates.push_back(exact_estimate(probs_for(state, entry.spec)));
  }
  return build_nonlinear_system(plan, estimates);
}

// --- variable layout ------------------------------------------------------

template <typename Scalar>
RealVector<Scalar> state_to_vars(const StateVector<Scalar>& state) {
  RealVector<Scalar> x(2 * state.amps.size());
  for (Eigen::Index j = 0; j < state.amps.size(); ++j) {
    x[2 * j] = state.amps[j].real();
    x[2 * j + 1] = state.amps[j].imag();
  }
  return x;
}

// Inverse layout map. Never renormalizes: solver iterates may be
// unnormalized, and validation is the caller's business.
template <typename Scalar>
StateVector<Scalar> vars_to_state(const RealVector<Scalar>& x) {
  if (x.size() % 2 != 0) throw std::invalid_argument("variable vector length must be even");
  const Eigen::Index dim = x.size() / 2;
  const int n = qubit_count_for_dim(dim);
  ComplexVector<Scalar> amps(dim);
  for (Eigen::Index j = 0; j < dim; ++j) amps[j] = {x[2 * j], x[2 * j + 1]};
  return StateVector<Scalar>{n, std::move(amps)};
}

// --- linear marginal systems ----------------------------------------------

// Row-wise: Z marginals of each qubit in order (outcome 0 then 1), optionally
// followed by the (0,0) and (0,1) rows of the computational pair (1,2).
// Unknowns are the outcome probabilities p, not amplitudes.
template <typename Scalar = double>
struct LinearSystem {
  RealMatrix<Scalar> A;
  RealVector<Scalar> rhs;
  std::vector<std::string> row_labels;
};

template <typename Scalar>
LinearSystem<Scalar> build_linear_system(int n, bool include_joint,
                                         const std::vector<ProbabilityEstimate<Scalar>>& estimates) {
  const MeasurementPlan<Scalar> plan = linear_plan<Scalar>(n, include_joint);
  if (estimates.size() != plan.entries.size()) {
    throw std::invalid_argument("expected " + std::to_string(plan.entries.size()) +
                                " estimates, got " + std::to_string(estimates.size()));
  }
  const Eigen::Index dim = Eigen::Index(1) << n;
  const Eigen::Index rows = 2 * n + (include_joint ? 2 : 0);
  LinearSystem<Scalar> sys;
  sys.A = RealMatrix<Scalar>::Zero(rows, dim);
  sys.rhs = RealVector<Scalar>::Zero(rows);

  Eigen::Index r = 0;
  for (int k = 1; k <= n; ++k) {
    for (int outcome = 0; outcome < 2; ++outcome) {
      for (Eigen::Index j = 0; j < dim; ++j) {
        if (bit_at(j, n, k) == outcome) sys.A(r, j) = Scalar(1);
      }
      sys.rhs[r] = estimates[static_cast<std::size_t>(k - 1)].probs[outcome];
      sys.row_labels.push_back("p" + std::to_string(outcome) + "^" + std::to_string(k));
      ++r;
    }
  }
  if (include_joint) {
    const auto& joint = estimates.back();
    if (joint.probs.size() != 4) {
      throw std::invalid_argument("joint estimate must carry 4 outcome probabilities");
    }
    for (int outcome = 0; outcome < 2; ++outcome) {  // only the (0,0) and (0,1) rows
      for (Eigen::Index j = 0; j < dim; ++j) {
        if (bit_at(j, n, 1) == 0 && bit_at(j, n, 2) == (outcome & 1)) sys.A(r, j) = Scalar(1);
      }
      sys.rhs[r] = joint.probs[outcome];
      sys.row_labels.push_back("p0" + std::to_string(outcome) + "^{1,2}");
      ++r;
    }
  }
  return sys;
}

template <typename Scalar>
LinearSystem<Scalar> build_exact_linear_system(int n, bool include_joint,
                                               const StateVector<Scalar>& state) {
  const MeasurementPlan<Scalar> plan = linear_plan<Scalar>(n, include_joint);
  std::vector<ProbabilityEstimate<Scalar>> estimates;
  for (const auto& entry : plan.entries) {
    estimates.push_back(exact_estimate(probs_for(state, entry.spec)));
  }
  return build_linear_system(n, include_joint, estimates);
}

// --- audit output -----------------------------------------------------------

template <typename Scalar>
std::string equation_kind(const Equation<Scalar>& eq) {
  if (eq.spec.target.kind == TargetKind::Single) {
    return eq.spec.is_computational() ? "z" : "angle";
  }
  return eq.spec.is_computational() ? "pair-z" : "pair-angle";
}

// CSV manifest: eq_id,kind,qubits,theta,phi,outcome,b
inline std::string system_manifest_csv(const NonlinearSystem<double>& system) {
  std::ostringstream out;
  out.precision(17);
  out << "eq_id,kind,qubits,theta,phi,outcome,b\n";
  for (Eigen::Index q = 0; q < system.num_equations(); ++q) {
    const auto& eq = system.equations()[static_cast<std::size_t>(q)];
    std::string qubits = std::to_string(eq.spec.target.k);
    int bits = 1;
    if (eq.spec.target.kind == TargetKind::Pair) {
      qubits += ":" + std::to_string(eq.spec.target.l);
      bits = 2;
    }
    out << q << ',' << equation_kind(eq) << ',' << qubits << ',' << eq.spec.theta << ','
        << eq.spec.phi << ',' << bitstring_label(eq.outcome, bits) << ',' << system.target()[q]
        << '\n';
  }
  return out.str();
}

}  // namespace qamp
