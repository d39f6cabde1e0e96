#include <doctest.h>

#include <bit>
#include <cmath>

#include "qamp/state.hpp"
#include "qamp/measurement.hpp"

using namespace qamp;

namespace {

ComplexVector<double> amps_of(std::initializer_list<std::complex<double>> values) {
  ComplexVector<double> v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (const auto& a : values) v[i++] = a;
  return v;
}

bool bitwise_equal(const StateVector<double>& a, const StateVector<double>& b) {
  if (a.n != b.n || a.dim() != b.dim()) return false;
  for (Eigen::Index i = 0; i < a.dim(); ++i) {
    if (std::bit_cast<std::uint64_t>(a.amps[i].real()) !=
            std::bit_cast<std::uint64_t>(b.amps[i].real()) ||
        std::bit_cast<std::uint64_t>(a.amps[i].imag()) !=
            std::bit_cast<std::uint64_t>(b.amps[i].imag())) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("new_state accepts basis, bell and 3-4-5 states") {
  const auto basis = new_state(amps_of({1, 0, 0, 0}));
  CHECK(basis.n == 2);
  CHECK(basis.amps[0] == std::complex<double>(1, 0));

  const double r = 1.0 / std::sqrt(2.0);
  const auto bell = new_state(amps_of({r, 0, 0, r}));
  CHECK(bell.is_normalized());

  const auto pythag = new_state(amps_of({0.6, {0.0, 0.8}}));
  CHECK(pythag.n == 1);
  CHECK(pythag.is_normalized());
}

TEST_CASE("new_state rejects bad input and fixes only tiny norm drift") {
  CHECK_THROWS_AS(new_state(amps_of({1, 0, 0})), std::invalid_argument);
  CHECK_THROWS_AS(new_state(amps_of({1})), std::invalid_argument);
  CHECK_THROWS_AS(new_state(amps_of({0, 0, 0, 0})), std::invalid_argument);
  CHECK_THROWS_AS(new_state(amps_of({1.1, 0})), std::invalid_argument);

  auto drift = amps_of({1.0 + 4e-10, 0});
  const auto fixed = new_state(drift);
  CHECK(fixed.is_normalized());
}

TEST_CASE("random_state is deterministic, normalized and Haar-like") {
  const auto a = random_state(2, 7);
  const auto b = random_state(2, 7);
  CHECK(bitwise_equal(a, b));
  CHECK(random_state(3, 1).is_normalized());
  CHECK_THROWS_AS(random_state(0, 1), std::out_of_range);
  CHECK_THROWS_AS(random_state(13, 1), std::out_of_range);

  // Haar moment: E|a_0|^2 = 1/4 at n = 2
  double mean = 0;
  const int trials = 10000;
  for (int s = 0; s < trials; ++s) {
    mean += std::norm(random_state(2, static_cast<std::uint64_t>(s)).amps[0]);
  }
  mean /= trials;
  CHECK(std::abs(mean - 0.25) < 0.02);
}

TEST_CASE("named_state catalogue") {
  const auto ghz = named_state("ghz", 3);
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(ghz.amps[0].real() == doctest::Approx(r).epsilon(1e-15));
  CHECK(ghz.amps[7].real() == doctest::Approx(r).epsilon(1e-15));
  for (int i = 1; i < 7; ++i) CHECK(ghz.amps[i] == std::complex<double>(0, 0));

  const auto uniform = named_state("uniform", 2);
  for (int i = 0; i < 4; ++i) CHECK(uniform.amps[i].real() == doctest::Approx(0.5));

  const auto w = named_state("w", 3);
  const double t = 1.0 / std::sqrt(3.0);
  CHECK(w.amps[1].real() == doctest::Approx(t));  // 001
  CHECK(w.amps[2].real() == doctest::Approx(t));  // 010
  CHECK(w.amps[4].real() == doctest::Approx(t));  // 100
  CHECK(w.amps[0] == std::complex<double>(0, 0));

  CHECK(named_state("basis(5)", 3).amps[5] == std::complex<double>(1, 0));

  CHECK_THROWS_AS(named_state("nope", 2), std::invalid_argument);
  CHECK_THROWS_AS(named_state("bell", 3), std::invalid_argument);
  CHECK_THROWS_AS(named_state("basis(4)", 2), std::invalid_argument);
}

TEST_CASE("fix_gauge removes global phase with the documented tie rule") {
  // i|00> -> |00>
  auto s = StateVector<double>{2, amps_of({{0, 1}, 0, 0, 0})};
  const auto fixed = fix_gauge(s);
  CHECK(fixed.amps[0] == std::complex<double>(1, 0));

  // equal magnitudes: pivot is the lowest index, already real -> unchanged
  const double r = 1.0 / std::sqrt(2.0);
  const auto tied = StateVector<double>{1, amps_of({r, {0, r}})};
  CHECK(bitwise_equal(fix_gauge(tied), tied));

  // global factor on the bell state comes out real positive
  const auto bell = named_state("bell", 2);
  auto rotated = bell;
  rotated.amps *= std::polar(1.0, 3.14159265358979 / 3.0);
  const auto back = fix_gauge(rotated);
  for (Eigen::Index i = 0; i < 4; ++i) {
    CHECK(back.amps[i].real() == doctest::Approx(bell.amps[i].real()).epsilon(1e-12));
    CHECK(std::abs(back.amps[i].imag()) < 1e-12);
  }
}

TEST_CASE("fix_gauge is exactly idempotent and phase insensitive") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto s = random_state(3, seed);
    const auto once = fix_gauge(s);
    CHECK(bitwise_equal(fix_gauge(once), once));

    auto rotated = s;
    rotated.amps *= std::polar(1.0, 0.1 + 0.77 * static_cast<double>(seed));
    const auto a = fix_gauge(s);
    const auto b = fix_gauge(rotated);
    for (Eigen::Index i = 0; i < s.dim(); ++i) {
      CHECK(std::abs(a.amps[i] - b.amps[i]) < 1e-12);
    }
  }
}

TEST_CASE("probabilities ignore global phase") {
  const auto s = random_state(3, 42);
  auto rotated = s;
  rotated.amps *= std::polar(1.0, 1.234);
  for (int k = 1; k <= 3; ++k) {
    const auto [p0, p1] = marginal_probs_z(s, k);
    const auto [q0, q1] = marginal_probs_z(rotated, k);
    CHECK(std::abs(p0 - q0) < 1e-12);
    CHECK(std::abs(p1 - q1) < 1e-12);
  }
}

TEST_CASE("state JSON round-trip is bit-exact") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto s = random_state(3, seed);
    const auto text = state_to_json(s).dump();
    const auto back = state_from_json(nlohmann::json::parse(text));
    CHECK(bitwise_equal(s, back));
  }
}

TEST_CASE("state JSON validation names the offending entry") {
  CHECK_THROWS_AS(state_from_json(nlohmann::json::parse(R"({"n": 1})")), std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      state_from_json(nlohmann::json::parse(R"({"n": 1, "amps": [[1, 0], ["x", 0]]})")),
      doctest::Contains("amps[1]"), std::invalid_argument);
  CHECK_THROWS_AS(
      state_from_json(nlohmann::json::parse(R"({"n": 1, "amps": [[0.9, 0], [0, 0]]})")),
      std::invalid_argument);
}
