#pragma once

// n-qubit pure states in the computational basis.
//
// Bit order: qubit 1 is the most significant bit of a basis index, so index i
// spells the bitstring i_1 i_2 ... i_n left to right. All probability and
// system-building code shares this convention via qubit_shift()/bit_at().

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "qamp/rng.hpp"
#include "qamp/types.hpp"

namespace qamp {

template <typename Scalar = double>
struct StateVector {
  int n = 0;
  ComplexVector<Scalar> amps;  // length 2^n

  Eigen::Index dim() const { return amps.size(); }

  bool is_normalized(Scalar tol = Scalar(1e-12)) const {
    return std::abs(amps.squaredNorm() - Scalar(1)) <= tol;
  }
};

inline bool is_power_of_two(Eigen::Index v) { return v >= 1 && (v & (v - 1)) == 0; }

inline int qubit_count_for_dim(Eigen::Index dim) {
  if (dim < 2 || !is_power_of_two(dim)) {
    throw std::invalid_argument("amplitude vector length " + std::to_string(dim) +
                                " is not a power of two >= 2");
  }
  int n = 0;
  while ((Eigen::Index(1) << n) < dim) ++n;
  return n;
}

// shift that isolates qubit k (1-based) within an n-bit index
inline int qubit_shift(int n, int k) {
  if (k < 1 || k > n) {
    throw std::out_of_range("qubit index " + std::to_string(k) + " outside [1.." +
                            std::to_string(n) + "]");
  }
  return n - k;
}

inline int bit_at(Eigen::Index index, int n, int k) {
  return static_cast<int>((index >> qubit_shift(n, k)) & 1);
}

// Validating constructor. Norm deviations up to 1e-9 are treated as float
// noise and renormalized; anything larger is rejected as a caller bug.
template <typename Scalar = double>
StateVector<Scalar> new_state(ComplexVector<Scalar> amps) {
  const int n = qubit_count_for_dim(amps.size());
  const Scalar norm = amps.norm();
  if (norm == Scalar(0)) {
    throw std::invalid_argument("state amplitudes are all zero");
  }
  if (std::abs(norm - Scalar(1)) > Scalar(1e-9)) {
    throw std::invalid_argument("state norm " + std::to_string(static_cast<double>(norm)) +
                                " deviates from 1 by more than 1e-9");
  }
  amps /= norm;
  return StateVector<Scalar>{n, std::move(amps)};
}

// Haar-distributed pure state: 2^(n+1) iid standard normals as Re/Im parts,
// then normalized. Fully determined by the seed.
template <typename Scalar = double>
StateVector<Scalar> random_state(int n, std::uint64_t seed) {
  if (n < 1 || n > kMaxQubits) {
    throw std::out_of_range("qubit count " + std::to_string(n) + " outside [1.." +
                            std::to_string(kMaxQubits) + "]");
  }
  Rng rng(seed);
  ComplexVector<Scalar> amps(Eigen::Index(1) << n);
  for (Eigen::Index i = 0; i < amps.size(); ++i) {
    const Scalar re = static_cast<Scalar>(rng.next_normal());
    const Scalar im = static_cast<Scalar>(rng.next_normal());
    amps[i] = std::complex<Scalar>(re, im);
  }
  amps /= amps.norm();
  return StateVector<Scalar>{n, std::move(amps)};
}

// Canonical states: basis(k), uniform, bell (n=2), ghz, w.
template <typename Scalar = double>
StateVector<Scalar> named_state(std::string_view name, int n) {
  if (n < 1 || n > kMaxQubits) {
    throw std::out_of_range("qubit count " + std::to_string(n) + " outside [1.." +
                            std::to_string(kMaxQubits) + "]");
  }
  const Eigen::Index dim = Eigen::Index(1) << n;
  ComplexVector<Scalar> amps = ComplexVector<Scalar>::Zero(dim);

  if (name.starts_with("basis(") && name.ends_with(")")) {
    const std::string inner(name.substr(6, name.size() - 7));
    std::size_t pos = 0;
    long k = -1;
    try {
      k = std::stol(inner, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument("malformed basis index in '" + std::string(name) + "'");
    }
    if (pos != inner.size() || k < 0 || k >= dim) {
      throw std::invalid_argument("basis index " + inner + " outside [0.." +
                                  std::to_string(dim - 1) + "]");
    }
    amps[k] = Scalar(1);
  } else if (name == "uniform") {
    amps.setConstant(Scalar(1) / std::sqrt(static_cast<Scalar>(dim)));
  } else if (name == "bell") {
    if (n != 2) throw std::invalid_argument("bell state requires n = 2");
    const Scalar r = Scalar(1) / std::sqrt(Scalar(2));
    amps[0] = r;
    amps[3] = r;
  } else if (name == "ghz") {
    if (n < 2) throw std::invalid_argument("ghz state requires n >= 2");
    const Scalar r = Scalar(1) / std::sqrt(Scalar(2));
    amps[0] = r;
    amps[dim - 1] = r;
  } else if (name == "w") {
    if (n < 2) throw std::invalid_argument("w state requires n >= 2");
    const Scalar r = Scalar(1) / std::sqrt(static_cast<Scalar>(n));
    for (int k = 0; k < n; ++k) amps[Eigen::Index(1) << k] = r;
  } else {
    throw std::invalid_argument("unknown state name '" + std::string(name) + "'");
  }
  return StateVector<Scalar>{n, std::move(amps)};
}

// Global-phase gauge: rotate so the largest-magnitude amplitude (lowest index
// on ties) is real and nonnegative. Probabilities are unchanged; this only
// makes solutions comparable.
template <typename Scalar>
StateVector<Scalar> fix_gauge(StateVector<Scalar> state) {
  Eigen::Index pivot = 0;
  Scalar best = Scalar(-1);
  for (Eigen::Index i = 0; i < state.amps.size(); ++i) {
    const Scalar mag2 = std::norm(state.amps[i]);
    if (mag2 > best) {
      best = mag2;
      pivot = i;
    }
  }
  const std::complex<Scalar> a = state.amps[pivot];
  if (a.imag() == Scalar(0) && a.real() >= Scalar(0)) {
    return state;  // already in gauge; keep bits untouched
  }
  const Scalar alpha = std::atan2(a.imag(), a.real());
  state.amps *= std::polar(Scalar(1), -alpha);
  state.amps[pivot] = std::complex<Scalar>(std::abs(a), Scalar(0));
  return state;
}

// --- JSON serialization ------------------------------------------------
//
// { "n": int, "amps": [[re, im], ...] }
//
// Loading validates but never renormalizes, so save/load round-trips are
// bit-exact for finite doubles.

inline nlohmann::json state_to_json(const StateVector<double>& state) {
  nlohmann::json amps = nlohmann::json::array();
  for (Eigen::Index i = 0; i < state.amps.size(); ++i) {
    amps.push_back({state.amps[i].real(), state.amps[i].imag()});
  }
  return nlohmann::json{{"n", state.n}, {"amps", std::move(amps)}};
}

inline StateVector<double> state_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("n") || !j.contains("amps")) {
    throw std::invalid_argument("state document must be an object with fields 'n' and 'amps'");
  }
  if (!j["n"].is_number_integer()) {
    throw std::invalid_argument("field 'n' must be an integer");
  }
  const int n = j["n"].get<int>();
  if (n < 1 || n > kMaxQubits) {
    throw std::invalid_argument("field 'n' = " + std::to_string(n) + " outside [1.." +
                                std::to_string(kMaxQubits) + "]");
  }
  const auto& amps_json = j["amps"];
  const Eigen::Index dim = Eigen::Index(1) << n;
  if (!amps_json.is_array() || static_cast<Eigen::Index>(amps_json.size()) != dim) {
    throw std::invalid_argument("field 'amps' must be an array of length 2^n = " +
                                std::to_string(dim));
  }
  ComplexVector<double> amps(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const auto& entry = amps_json[static_cast<std::size_t>(i)];
    if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number() ||
        !entry[1].is_number()) {
      throw std::invalid_argument("amps[" + std::to_string(i) + "] must be a [re, im] pair");
    }
    const double re = entry[0].get<double>();
    const double im = entry[1].get<double>();
    if (!std::isfinite(re) || !std::isfinite(im)) {
      throw std::invalid_argument("amps[" + std::to_string(i) + "] is not finite");
    }
    amps[i] = {re, im};
  }
  const double norm = amps.norm();
  if (norm == 0.0) throw std::invalid_argument("state amplitudes are all zero");
  if (std::abs(norm - 1.0) > 1e-9) {
    throw std::invalid_argument("state norm " + std::to_string(norm) +
                                " deviates from 1 by more than 1e-9");
  }
  return StateVector<double>{n, std::move(amps)};
}

}  // namespace qamp
