#pragma once

// Measurement plans: which bases to measure, in which order, with how many
// shots. The method-1 plan measures every qubit in Z and then the first qubit
// at M = 2^n - n extra angles, giving 2^(n+1) equations in total. Extended
// plans add phased bases on arbitrary qubits and product-basis pair
// measurements, which is what makes small systems identifiable in practice.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qamp/measurement.hpp"

namespace qamp {

template <typename Scalar = double>
struct PlanEntry {
  BasisSpec<Scalar> spec;
  std::uint64_t shots = 0;  // 0 = exact mode / not yet allocated
};

template <typename Scalar = double>
struct MeasurementPlan {
  int n = 0;
  std::vector<PlanEntry<Scalar>> entries;

  std::size_t size() const { return entries.size(); }
};

template <typename Scalar>
int outcome_count(const BasisSpec<Scalar>& spec, int n) {
  switch (spec.target.kind) {
    case TargetKind::Single:
      return 2;
    case TargetKind::Pair:
      return 4;
    case TargetKind::All:
      return 1 << n;
  }
  throw std::logic_error("unreachable");
}

// Equations contributed to a nonlinear system (one per outcome).
template <typename Scalar>
Eigen::Index num_equations(const MeasurementPlan<Scalar>& plan) {
  Eigen::Index total = 0;
  for (const auto& entry : plan.entries) total += outcome_count(entry.spec, plan.n);
  return total;
}

template <typename Scalar>
void validate_plan(const MeasurementPlan<Scalar>& plan) {
  if (plan.n < 1 || plan.n > kMaxQubits) {
    throw std::out_of_range("plan qubit count outside [1.." + std::to_string(kMaxQubits) + "]");
  }
  for (const auto& entry : plan.entries) validate_basis_spec(entry.spec, plan.n);
}

enum class AngleSchedule { Uniform, Random };

inline int method1_angle_count(int n) { return (1 << n) - n; }

// Default schedule theta_m = m*pi/(2(M+1)), m = 1..M: uniformly spaced in
// (0, pi/2), so no angle duplicates the Z basis or any other angle mod pi.
template <typename Scalar = double>
std::vector<Scalar> method1_angles(int n, AngleSchedule schedule = AngleSchedule::Uniform,
                                   std::uint64_t seed = 0) {
  const int M = method1_angle_count(n);
  std::vector<Scalar> angles;
  angles.reserve(static_cast<std::size_t>(M));
  if (schedule == AngleSchedule::Uniform) {
    const Scalar pi = Scalar(3.14159265358979323846264338327950288L);
    for (int m = 1; m <= M; ++m) {
      angles.push_back(Scalar(m) * pi / (Scalar(2) * Scalar(M + 1)));
    }
  } else {
    Rng rng(stream_seed(seed, "angle-schedule"));
    const Scalar half_pi = Scalar(1.57079632679489661923132169163975144L);
    for (int m = 0; m < M; ++m) {
      angles.push_back(static_cast<Scalar>(rng.next_double_open()) * half_pi);
    }
  }
  return angles;
}

// n Z entries (one per qubit) followed by M = 2^n - n angle entries on the
// first qubit with phi = 0.
template <typename Scalar = double>
MeasurementPlan<Scalar> method1_plan(int n, AngleSchedule schedule = AngleSchedule::Uniform,
                                     std::uint64_t seed = 0) {
  if (n < 1 || n > kMaxQubits) {
    throw std::out_of_range("qubit count " + std::to_string(n) + " outside [1.." +
                            std::to_string(kMaxQubits) + "]");
  }
  MeasurementPlan<Scalar> plan;
  plan.n = n;
  for (int k = 1; k <= n; ++k) {
    plan.entries.push_back({BasisSpec<Scalar>{BasisTarget::single(k), Scalar(0), Scalar(0)}, 0});
  }
  for (Scalar theta : method1_angles<Scalar>(n, schedule, seed)) {
    plan.entries.push_back({BasisSpec<Scalar>{BasisTarget::single(1), theta, Scalar(0)}, 0});
  }
  return plan;
}

// Checks the method-1 shape: n Z entries, M first-qubit angle entries with
// angles pairwise distinct modulo pi.
template <typename Scalar>
void validate_method1_plan(const MeasurementPlan<Scalar>& plan) {
  validate_plan(plan);
  const int M = method1_angle_count(plan.n);
  if (static_cast<int>(plan.entries.size()) != plan.n + M) {
    throw std::invalid_argument("method-1 plan must have n + (2^n - n) entries");
  }
  const Scalar pi = Scalar(3.14159265358979323846264338327950288L);
  std::vector<Scalar> angles;
  for (int i = 0; i < static_cast<int>(plan.entries.size()); ++i) {
    const auto& spec = plan.entries[static_cast<std::size_t>(i)].spec;
    if (i < plan.n) {
      if (spec.target.kind != TargetKind::Single || spec.target.k != i + 1 ||
          !spec.is_computational()) {
        throw std::invalid_argument("method-1 entry " + std::to_string(i) +
                                    " must be a Z measurement of qubit " + std::to_string(i + 1));
      }
    } else {
      if (spec.target.kind != TargetKind::Single || spec.target.k != 1 || spec.phi != Scalar(0)) {
        throw std::invalid_argument("method-1 angle entries act on qubit 1 with phi = 0");
      }
      angles.push_back(spec.theta);
    }
  }
  for (std::size_t i = 0; i < angles.size(); ++i) {
    for (std::size_t j = i + 1; j < angles.size(); ++j) {
      Scalar d = std::fmod(std::abs(angles[i] - angles[j]), pi);
      d = std::min(d, pi - d);
      if (d < Scalar(1e-9)) {
        throw std::invalid_argument("method-1 angles must be pairwise distinct modulo pi");
      }
    }
  }
}

// Z on every qubit, then each listed angle/phase on every qubit, then for
// each requested pair a computational pair entry plus one product-basis pair
// entry per angle/phase combination.
template <typename Scalar = double>
MeasurementPlan<Scalar> extended_plan(int n, const std::vector<Scalar>& per_qubit_angles,
                                      const std::vector<Scalar>& phases,
                                      const std::vector<std::pair<int, int>>& pairs = {}) {
  if (n < 1 || n > kMaxQubits) {
    throw std::out_of_range("qubit count " + std::to_string(n) + " outside [1.." +
                            std::to_string(kMaxQubits) + "]");
  }
  MeasurementPlan<Scalar> plan;
  plan.n = n;
  for (int k = 1; k <= n; ++k) {
    plan.entries.push_back({BasisSpec<Scalar>{BasisTarget::single(k), Scalar(0), Scalar(0)}, 0});
  }
  for (int k = 1; k <= n; ++k) {
    for (Scalar theta : per_qubit_angles) {
      for (Scalar phi : phases) {
        plan.entries.push_back({BasisSpec<Scalar>{BasisTarget::single(k), theta, phi}, 0});
      }
    }
  }
  for (const auto& [k, l] : pairs) {
    plan.entries.push_back({BasisSpec<Scalar>{BasisTarget::pair(k, l), Scalar(0), Scalar(0)}, 0});
    for (Scalar theta : per_qubit_angles) {
      for (Scalar phi : phases) {
        plan.entries.push_back({BasisSpec<Scalar>{BasisTarget::pair(k, l), theta, phi}, 0});
      }
    }
  }
  validate_plan(plan);
  return plan;
}

// Default extended plan used by the `extended` scheme: one angle, two phases,
// nearest-neighbour pairs. At n = 2 this is verified to pin random states
// uniquely up to global phase (see the recovery tests).
template <typename Scalar = double>
MeasurementPlan<Scalar> default_extended_plan(int n) {
  const Scalar quarter_pi = Scalar(0.785398163397448309615660845819875721L);
  const Scalar half_pi = Scalar(1.57079632679489661923132169163975144L);
  std::vector<std::pair<int, int>> pairs;
  for (int k = 1; k < n; ++k) pairs.emplace_back(k, k + 1);
  return extended_plan<Scalar>(n, {quarter_pi}, {Scalar(0), half_pi}, pairs);
}

// Z on each qubit plus (optionally) the computational pair (1,2); the plan
// behind the marginal-probability linear systems.
template <typename Scalar = double>
MeasurementPlan<Scalar> linear_plan(int n, bool include_joint) {
  if (n != 2 && n != 3) {
    throw std::invalid_argument("linear systems are defined for n = 2 or 3");
  }
  MeasurementPlan<Scalar> plan;
  plan.n = n;
  for (int k = 1; k <= n; ++k) {
    plan.entries.push_back({BasisSpec<Scalar>{BasisTarget::single(k), Scalar(0), Scalar(0)}, 0});
  }
  if (include_joint) {
    plan.entries.push_back({BasisSpec<Scalar>{BasisTarget::pair(1, 2), Scalar(0), Scalar(0)}, 0});
  }
  return plan;
}

template <typename Scalar>
void set_uniform_shots(MeasurementPlan<Scalar>& plan, std::uint64_t shots) {
  for (auto& entry : plan.entries) entry.shots = shots;
}

// --- JSON serialization ------------------------------------------------
//
// { "n": int, "entries": [ { "target": 1 | [1,2] | "all",
//                            "theta": x, "phi": y, "shots": s }, ... ] }

inline nlohmann::json plan_to_json(const MeasurementPlan<double>& plan) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& entry : plan.entries) {
    nlohmann::json target;
    switch (entry.spec.target.kind) {
      case TargetKind::Single:
        target = entry.spec.target.k;
        break;
      case TargetKind::Pair:
        target = nlohmann::json::array({entry.spec.target.k, entry.spec.target.l});
        break;
      case TargetKind::All:
        target = "all";
        break;
    }
    entries.push_back({{"target", std::move(target)},
                       {"theta", entry.spec.theta},
                       {"phi", entry.spec.phi},
                       {"shots", entry.shots}});
  }
  return nlohmann::json{{"n", plan.n}, {"entries", std::move(entries)}};
}

inline MeasurementPlan<double> plan_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("n") || !j.contains("entries") || !j["entries"].is_array()) {
    throw std::invalid_argument("plan document must be an object with 'n' and 'entries'");
  }
  MeasurementPlan<double> plan;
  plan.n = j["n"].get<int>();
  std::size_t idx = 0;
  for (const auto& e : j["entries"]) {
    PlanEntry<double> entry;
    const auto& target = e.at("target");
    if (target.is_number_integer()) {
      entry.spec.target = BasisTarget::single(target.get<int>());
    } else if (target.is_array() && target.size() == 2) {
      entry.spec.target = BasisTarget::pair(target[0].get<int>(), target[1].get<int>());
    } else if (target.is_string() && target.get<std::string>() == "all") {
      entry.spec.target = BasisTarget::all();
    } else {
      throw std::invalid_argument("entries[" + std::to_string(idx) + "].target is malformed");
    }
    entry.spec.theta = e.value("theta", 0.0);
    entry.spec.phi = e.value("phi", 0.0);
    entry.shots = e.value("shots", std::uint64_t(0));
    plan.entries.push_back(entry);
    ++idx;
  }
  validate_plan(plan);
  return plan;
}

}  // namespace qamp
