#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "qamp/measurement.hpp"

using namespace qamp;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("basis_pair matches the displayed convention and stays orthonormal") {
  {
    const auto [v0, v1] = basis_pair(0.0, 0.0);
    CHECK(std::abs(v0[0] - 1.0) < 1e-15);
    CHECK(std::abs(v0[1]) < 1e-15);
    CHECK(std::abs(v1[0]) < 1e-15);
    CHECK(std::abs(v1[1] + 1.0) < 1e-15);  // v1 = -|1>
  }
  {
    const auto [v0, v1] = basis_pair(kPi / 4, 0.0);
    CHECK(std::abs(v0[0].real() - 1.0 / std::sqrt(2.0)) < 1e-15);
    CHECK(std::abs(v0[1].real() - 1.0 / std::sqrt(2.0)) < 1e-15);
  }
  {
    const auto [v0, v1] = basis_pair(kPi / 4, kPi / 2);
    CHECK(std::abs(v0[1] - std::complex<double>(0, 1.0 / std::sqrt(2.0))) < 1e-15);
    CHECK(std::abs(v0.dot(v1)) < 1e-14);
  }
  for (double theta : {0.0, 0.3, 1.0, 2.2}) {
    for (double phi : {0.0, 0.7, kPi / 2, 3.0}) {
      const auto [v0, v1] = basis_pair(theta, phi);
      CHECK(std::abs(v0.squaredNorm() - 1.0) < 1e-14);
      CHECK(std::abs(v1.squaredNorm() - 1.0) < 1e-14);
      CHECK(std::abs(v0.dot(v1)) < 1e-14);
    }
  }
}

TEST_CASE("Z marginals") {
  const auto bell = named_state("bell", 2);
  const auto [p0, p1] = marginal_probs_z(bell, 1);
  CHECK(p0 == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(p1 == doctest::Approx(0.5).epsilon(1e-14));

  const auto basis = named_state("basis(0)", 2);
  const auto [q0, q1] = marginal_probs_z(basis, 2);
  CHECK(q0 == doctest::Approx(1.0));
  CHECK(q1 == doctest::Approx(0.0));

  const auto s = random_state(3, 1);
  const auto [b0, b1] = oracle::brute_marginal_z(s, 2);
  const auto [m0, m1] = marginal_probs_z(s, 2);
  CHECK(std::abs(m0 - b0) < 1e-12);
  CHECK(std::abs(m1 - b1) < 1e-12);

  CHECK_THROWS_AS(marginal_probs_z(s, 0), std::out_of_range);
  CHECK_THROWS_AS(marginal_probs_z(s, 4), std::out_of_range);
}

TEST_CASE("rotated-basis marginals") {
  const auto s = random_state(3, 2);

  // theta = 0 reduces to Z
  for (int k = 1; k <= 3; ++k) {
    const auto [z0, z1] = marginal_probs_z(s, k);
    const auto [r0, r1] = marginal_probs_basis(s, {BasisTarget::single(k), 0.0, 0.0});
    CHECK(std::abs(r0 - z0) < 1e-14);
    CHECK(std::abs(r1 - z1) < 1e-14);
  }

  const auto ghz = named_state("ghz", 3);
  const auto [g0, g1] = marginal_probs_basis(ghz, {BasisTarget::single(1), kPi / 4, 0.0});
  CHECK(g0 == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(g1 == doctest::Approx(0.5).epsilon(1e-14));

  const auto [p0, p1] = marginal_probs_basis(s, {BasisTarget::single(1), 0.3, 0.0});
  CHECK(std::abs(p0 - oracle::prob_single(s, 1, 0.3, 0.0, 0)) < 1e-12);
  CHECK(std::abs(p1 - oracle::prob_single(s, 1, 0.3, 0.0, 1)) < 1e-12);

  // periodicity: theta + pi flips basis signs only
  for (double theta : {0.2, 0.9, 1.4}) {
    const auto [a0, a1] = marginal_probs_basis(s, {BasisTarget::single(2), theta, 0.6});
    const auto [b0, b1] = marginal_probs_basis(s, {BasisTarget::single(2), theta + kPi, 0.6});
    CHECK(std::abs(a0 - b0) < 1e-12);
    CHECK(std::abs(a1 - b1) < 1e-12);
  }
}

TEST_CASE("joint pair probabilities") {
  const auto ghz = named_state("ghz", 3);
  const auto gp = joint_probs_pair(ghz, 1, 2);
  CHECK(gp[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(gp[1] == doctest::Approx(0.0));
  CHECK(gp[2] == doctest::Approx(0.0));
  CHECK(gp[3] == doctest::Approx(0.5).epsilon(1e-14));

  const auto uniform = named_state("uniform", 3);
  for (double p : joint_probs_pair(uniform, 1, 2)) CHECK(p == doctest::Approx(0.25));

  const auto s = random_state(3, 3);
  const auto brute = oracle::brute_joint_pair(s, 1, 3);
  const auto fast = joint_probs_pair(s, 1, 3);
  for (int o = 0; o < 4; ++o) CHECK(std::abs(fast[o] - brute[o]) < 1e-12);

  CHECK_THROWS_AS(joint_probs_pair(s, 2, 2), std::invalid_argument);
}

TEST_CASE("rotated pair probabilities match the projector oracle") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = random_state(3, 100 + seed);
    for (double theta : {0.0, kPi / 4, 0.9}) {
      for (double phi : {0.0, kPi / 2}) {
        const auto probs = pair_probs_basis(s, {BasisTarget::pair(1, 3), theta, phi});
        double sum = 0;
        for (int o = 0; o < 4; ++o) {
          CHECK(std::abs(probs[o] - oracle::prob_pair(s, 1, 3, theta, phi, o >> 1, o & 1)) <
                1e-12);
          CHECK(probs[o] >= -1e-15);
          sum += probs[o];
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
      }
    }
  }
}

TEST_CASE("full computational probabilities") {
  const auto bell = named_state("bell", 2);
  const auto p = full_computational_probs(bell);
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(p[1] == doctest::Approx(0.0));
  CHECK(p[2] == doctest::Approx(0.0));
  CHECK(p[3] == doctest::Approx(0.5).epsilon(1e-14));

  const auto one_hot = full_computational_probs(named_state("basis(5)", 3));
  CHECK(one_hot[5] == doctest::Approx(1.0));
  CHECK(one_hot.sum() == doctest::Approx(1.0));

  CHECK(std::abs(full_computational_probs(random_state(2, 9)).sum() - 1.0) < 1e-12);
}

TEST_CASE("marginal consistency with the full distribution") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = random_state(4, 200 + seed);
    const auto full = full_computational_probs(s);
    for (int k = 1; k <= 4; ++k) {
      double p0 = 0;
      for (Eigen::Index i = 0; i < full.size(); ++i) {
        if (bit_at(i, 4, k) == 0) p0 += full[i];
      }
      const auto [m0, m1] = marginal_probs_z(s, k);
      CHECK(std::abs(m0 - p0) < 1e-12);
      CHECK(std::abs(m0 + m1 - 1.0) < 1e-12);
    }
    // pair marginalizes to singles
    const auto pair = joint_probs_pair(s, 2, 4);
    const auto [m0, m1] = marginal_probs_z(s, 2);
    CHECK(std::abs(pair[0] + pair[1] - m0) < 1e-12);
    CHECK(std::abs(pair[2] + pair[3] - m1) < 1e-12);
  }
}

TEST_CASE("sample_counts behaviour") {
  RealVector<double> degenerate(2);
  degenerate << 1.0, 0.0;
  const auto d = sample_counts(degenerate, 100, 5);
  CHECK(d.counts[0] == 100);
  CHECK(d.counts[1] == 0);
  CHECK(d.mode == EstimateMode::Empirical);

  RealVector<double> fair(2);
  fair << 0.5, 0.5;
  const auto est = sample_counts(fair, 1000000, 4);
  CHECK(std::abs(est.probs[0] - 0.5) <= 0.002);  // 4 sigma
  const auto est2 = sample_counts(fair, 1000000, 4);
  CHECK(est.counts == est2.counts);

  const auto empty = sample_counts(fair, 0, 4);
  CHECK(empty.mode == EstimateMode::Empty);
  CHECK(empty.probs.sum() == 0.0);

  CHECK_THROWS_AS(sample_counts(fair, -1, 0), std::invalid_argument);
  RealVector<double> bad(2);
  bad << 0.7, 0.6;
  CHECK_THROWS_AS(sample_counts(bad, 10, 0), std::invalid_argument);
}

TEST_CASE("counts always resolve to an exact integer split") {
  RealVector<double> probs(3);
  probs << 0.2, 0.5, 0.3;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto est = sample_counts(probs, 12345, seed);
    std::uint64_t total = 0;
    for (auto c : est.counts) total += c;
    CHECK(total == 12345);
    CHECK(std::abs(est.probs.sum() - 1.0) < 1e-12);
  }
}

TEST_CASE("shots_for_accuracy pins the Hoeffding constant") {
  CHECK(shots_for_accuracy(0.05, 0.05) == 738);
  CHECK(shots_for_accuracy(0.1, 0.05) == 185);

  const auto full = shots_for_accuracy(0.025, 0.05);
  CHECK(full >= 4 * shots_for_accuracy(0.05, 0.05) - 4);
  CHECK(full <= 4 * shots_for_accuracy(0.05, 0.05) + 4);

  CHECK_THROWS_AS(shots_for_accuracy(0.0, 0.05), std::invalid_argument);
  CHECK_THROWS_AS(shots_for_accuracy(0.05, 1.0), std::invalid_argument);
}

TEST_CASE("Hoeffding planner coverage on Bernoulli trials") {
  const auto shots = shots_for_accuracy(0.05, 0.05);
  RealVector<double> probs(2);
  probs << 0.3, 0.7;
  int covered = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    const auto est = sample_counts(probs, static_cast<std::int64_t>(shots),
                                   stream_seed(77, "coverage", std::uint64_t(t)));
    if (std::abs(est.probs[0] - 0.3) <= 0.05) ++covered;
  }
  CHECK(covered >= 950);
}
