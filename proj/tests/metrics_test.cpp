#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qamp/metrics.hpp"

using namespace qamp;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("error_report vanishes at the truth and under global phases") {
  const auto truth = random_state(2, 5);
  const auto zero = error_report(truth, truth);
  CHECK(zero.max_norm_err == 0.0);
  CHECK(zero.complex_err == 0.0);
  CHECK(zero.total_variation == 0.0);
  CHECK(zero.avg_l1 == 0.0);

  auto rotated = truth;
  rotated.amps *= std::polar(1.0, kPi / 7);
  const auto gauge = error_report(rotated, truth);
  CHECK(gauge.complex_err <= 1e-12);
  CHECK(gauge.max_norm_err <= 1e-15);
  CHECK(gauge.total_variation <= 1e-14);
}

TEST_CASE("bell against uniform gives total variation one") {
  const auto bell = named_state("bell", 2);
  const auto uniform = named_state("uniform", 2);
  const auto report = error_report(uniform, bell);
  CHECK(report.total_variation == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("error metric relations on random pairs") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = random_state(3, seed);
    const auto b = random_state(3, 1000 + seed);
    const auto report = error_report(a, b);
    CHECK(report.avg_l1 <= report.max_norm_err + 1e-15);
    CHECK(report.total_variation >= 0.0);
    CHECK(report.total_variation <= 2.0);
  }
  CHECK_THROWS_AS(error_report(random_state(2, 1), random_state(3, 1)),
                  std::invalid_argument);
}

TEST_CASE("probability-vector reports leave complex error undefined") {
  const auto truth = named_state("bell", 2);
  const auto probs = full_computational_probs(truth);
  const auto report = error_report(probs, truth);
  CHECK(report.max_norm_err == 0.0);
  CHECK(std::isnan(report.complex_err));
}

TEST_CASE("budget formulas reproduce the worked values") {
  CHECK(epsilon_for_additive(0.1, 3, 1.0) ==
        doctest::Approx(0.01 / (4.0 * std::sqrt(2.0) * 4.0)).epsilon(1e-12));
  CHECK(epsilon_for_tv(0.1, 2, 1.0) ==
        doctest::Approx(0.1 / (2.0 * std::sqrt(2.0) * 4.0)).epsilon(1e-12));
  CHECK(epsilon_for_avg_l1(0.1, 1.0) ==
        doctest::Approx(0.01 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(epsilon_for_additive_complex(0.1, 3, 1.0) ==
        doctest::Approx(0.1 / std::sqrt(8.0)).epsilon(1e-12));
}

TEST_CASE("budget formulas scale as displayed") {
  // delta halved -> additive eps quartered
  CHECK(epsilon_for_additive(0.05, 3, 1.0) ==
        doctest::Approx(epsilon_for_additive(0.1, 3, 1.0) / 4.0));
  // jinv doubled -> halved
  CHECK(epsilon_for_additive(0.1, 3, 2.0) ==
        doctest::Approx(epsilon_for_additive(0.1, 3, 1.0) / 2.0));
  // one more qubit -> tv eps halved
  CHECK(epsilon_for_tv(0.1, 3, 1.0) == doctest::Approx(epsilon_for_tv(0.1, 2, 1.0) / 2.0));
  // avg-l1 ignores n entirely and quarters with half delta
  CHECK(epsilon_for_avg_l1(0.05, 1.0) == doctest::Approx(epsilon_for_avg_l1(0.1, 1.0) / 4.0));

  CHECK_THROWS_AS(epsilon_for_additive(0.0, 3, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(epsilon_for_tv(0.1, 2, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(epsilon_for_avg_l1(-0.1, 1.0), std::invalid_argument);
}

TEST_CASE("naive baseline estimator") {
  const auto basis = named_state("basis(2)", 2);
  const auto exact = naive_estimate(basis, 5000, 9);
  CHECK(exact.probs[2] == 1.0);
  CHECK(exact.norms[2] == 1.0);
  CHECK(exact.probs[0] == 0.0);

  const auto bell = named_state("bell", 2);
  int good = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto est = naive_estimate(bell, 1000000, seed);
    const auto report = error_report(est.probs, bell);
    if (report.total_variation <= 0.01) ++good;
  }
  CHECK(good >= 19);

  CHECK_THROWS_AS(naive_estimate(bell, 0, 1), std::invalid_argument);
}

TEST_CASE("square-root propagation bounds the norm error entrywise") {
  const auto s = random_state(3, 77);
  const auto truth = full_computational_probs(s);
  const auto est = naive_estimate(s, 10000, 3);
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    const double p_err = std::abs(est.probs[i] - truth[i]);
    const double n_err = std::abs(est.norms[i] - std::sqrt(truth[i]));
    CHECK(n_err <= std::sqrt(p_err) + 1e-12);
  }
}

TEST_CASE("naive budgets follow the baseline analysis") {
  CHECK(naive_epsilon_for(Metric::TotalVariation, 0.1, 3) == doctest::Approx(0.1 / 8.0));
  CHECK(naive_epsilon_for(Metric::AdditiveNorm, 0.1, 3) == doctest::Approx(0.01));
  CHECK(naive_epsilon_for(Metric::AvgL1, 0.1, 3) == doctest::Approx(0.01));
  CHECK_THROWS_AS(naive_epsilon_for(Metric::AdditiveComplex, 0.1, 3), std::invalid_argument);
}
