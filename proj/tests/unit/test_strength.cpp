#include <catch_amalgamated.hpp>

#include "naive.hpp"
#include "tsci/error.hpp"
#include "tsci/strength.hpp"
#include "tsci/violation.hpp"

using namespace tsci;
using Catch::Approx;

namespace {

StrengthResult row(int q, bool passed) {
  StrengthResult r;
  r.q = q;
  r.passed = passed;
  return r;
}

}  // namespace

TEST_CASE("strength with a zero first stage and identity transform is n1", "[strength]") {
  Rng rng(1);
  const Vector d = standard_normal_vector(rng, 17);
  CHECK(mu_hat(d, Vector::Zero(17), Matrix::Identity(17, 17)) == Approx(17.0).epsilon(1e-14));
}

TEST_CASE("strength vanishes when D is orthogonal to M", "[strength]") {
  Vector u(4), d(4);
  u << 1, 1, 0, 0;
  d << 1, -1, 2, 3;
  const Matrix m = u * u.transpose();
  CHECK(mu_hat(d, Vector::Zero(4), m) == 0.0);
  CHECK_THROWS_AS(mu_hat(d, d, m), PerfectFitError);
}

TEST_CASE("strength bootstrap degenerate inputs give zero", "[strength]") {
  Rng rng(2);
  const Vector d = standard_normal_vector(rng, 30);
  const Matrix m = Matrix::Identity(30, 30);
  CHECK(strength_bootstrap_quantile(d, m, d, 0.025, 100, 3) == 0.0);
  const Vector f_hat = d.array() - 0.7;  // constant residual: centered draws are zero
  CHECK(strength_bootstrap_quantile(f_hat, m, d, 0.025, 100, 3) == Approx(0.0).margin(1e-10));
  CHECK(strength_bootstrap_quantile(Vector::Zero(30), Matrix::Zero(30, 30), d, 0.025, 100, 3) == 0.0);
}

TEST_CASE("strength bootstrap is deterministic and validates arguments", "[strength]") {
  Rng rng(4);
  const Vector d = standard_normal_vector(rng, 40);
  const Vector f_hat = 0.5 * d + 0.3 * standard_normal_vector(rng, 40);
  const Matrix m = naive::annihilator(Matrix::Ones(40, 1));
  const double a = strength_bootstrap_quantile(f_hat, m, d, 0.025, 200, 9);
  CHECK(a == strength_bootstrap_quantile(f_hat, m, d, 0.025, 200, 9));
  CHECK(a != strength_bootstrap_quantile(f_hat, m, d, 0.025, 200, 10));
  CHECK_THROWS_AS(strength_bootstrap_quantile(f_hat, m, d, 0.025, 49, 9), UsageError);
  CHECK_THROWS_AS(strength_bootstrap_quantile(f_hat, m, d, 0.5, 100, 9), UsageError);
}

TEST_CASE("fast bootstrap matches the dense evaluation", "[strength][property]") {
  Rng rng(5);
  for (int trial = 0; trial < 8; ++trial) {
    const Index n = naive::uniform(rng, 40, 120);
    const naive::Toy t = naive::make_toy(rng(), n, 2);
    const auto tf = naive::toy_forest(t, rng());
    const CovariateBasis w = build_w(t.x, WMode{});
    const Vector d = take_rows(t.d, tf.split.a1);
    const Vector f_hat = tf.omega.predict(d);
    const std::uint64_t seed = rng();
    const StrengthBootstrap boot(tf.omega, d, f_hat, 120, seed);
    for (int q = 0; q <= 2; ++q) {
      const TransformMatrix tm = transform_matrix(tf.omega, polynomial_violation_basis(t.z, q), w, tf.split);
      const double fast = boot.quantile(tm, 0.025);
      const double dense = strength_bootstrap_quantile(f_hat, tm.m, d, 0.025, 120, seed);
      REQUIRE(fast == Approx(dense).epsilon(1e-9).margin(1e-9));
    }
  }
}

TEST_CASE("bootstrap quantile is non-negative and falls as alpha0 grows", "[strength][property]") {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = naive::uniform(rng, 30, 80);
    const Vector d = standard_normal_vector(rng, n);
    const Vector f_hat = 0.8 * d + 0.5 * standard_normal_vector(rng, n);
    const Matrix m = naive::annihilator(hcat(Matrix::Ones(n, 1), standard_normal_matrix(rng, n, 2)));
    const std::uint64_t seed = rng();
    double prev = std::numeric_limits<double>::infinity();
    for (double a0 : {0.01, 0.025, 0.05, 0.1, 0.2, 0.4}) {
      const double qv = strength_bootstrap_quantile(f_hat, m, d, a0, 150, seed);
      REQUIRE(qv >= 0.0);
      REQUIRE(qv <= prev);
      prev = qv;
    }
  }
}

TEST_CASE("strength pass rule", "[strength]") {
  CHECK_FALSE(strength_passes(5.0, std::max(2.0 * 0.5, 10.0), 0.0));
  CHECK(strength_passes(12.5, 10.0, 2.5));
  CHECK_FALSE(strength_passes(12.5 - 1e-12, 10.0, 2.5));
}

TEST_CASE("strength test threshold is max(2 Tr[M], 10)", "[strength]") {
  const naive::Toy t = naive::make_toy(7, 90, 2);
  const auto tf = naive::toy_forest(t, 8);
  const CovariateBasis w = build_w(t.x, WMode{});
  const Vector d = take_rows(t.d, tf.split.a1);
  const Vector f_hat = tf.omega.predict(d);
  const StrengthBootstrap boot(tf.omega, d, f_hat, 100, 1);
  const TransformMatrix tm = transform_matrix(tf.omega, polynomial_violation_basis(t.z, 1), w, tf.split);
  const StrengthResult r = strength_test(1, d, f_hat, tm, boot, 0.025, 100);
  CHECK(r.threshold == std::max(2.0 * tm.trace_m, 10.0));
  CHECK(r.mu_hat == Approx(mu_hat(d, f_hat, tm.m)));
  CHECK(r.passed == strength_passes(r.mu_hat, r.threshold, r.s_quantile));
  CHECK(r.l == 100);
}

TEST_CASE("Q_max scans upward to the first failure", "[strength]") {
  const QmaxResult all = q_max({row(0, true), row(1, true), row(2, true), row(3, true)});
  CHECK(all.q_max == 3);
  CHECK_FALSE(all.weak_iv);

  const QmaxResult early = q_max({row(0, true), row(1, false), row(2, true), row(3, false)});
  CHECK(early.q_max == 0);
  CHECK(early.later_passes == std::vector<int>{2});

  CHECK(q_max({row(0, false), row(1, true)}).weak_iv);
  CHECK(q_max({}).weak_iv);
}

TEST_CASE("bootstrap multipliers are reproducible per index", "[strength]") {
  CHECK(bootstrap_multipliers(1, 2, 3, 10) == bootstrap_multipliers(1, 2, 3, 10));
  CHECK(bootstrap_multipliers(1, 2, 3, 10) != bootstrap_multipliers(1, 2, 4, 10));
  CHECK(bootstrap_multipliers(1, 2, 3, 10) != bootstrap_multipliers(1, 5, 3, 10));
}
