#include <doctest.h>

#include <cmath>

#include "trialfit/errors.hpp"
#include "trialfit/fixed_models.hpp"
#include "trialfit/rng.hpp"
#include "trialfit/stats.hpp"

using namespace trialfit;

TEST_CASE("ols: exact linear fit") {
  Eigen::MatrixXd X(5, 2);
  Eigen::VectorXd y(5);
  for (int i = 0; i < 5; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = i;
    y(i) = i;  // y = x exactly
  }
  auto m = fit_ols(X, y);
  CHECK(m.beta(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(m.beta(1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.dispersion == doctest::Approx(0.0));
}

TEST_CASE("ols: intercept-only fits the mean") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(6, 1);
  Eigen::VectorXd y = Eigen::VectorXd::Constant(6, 7.0);
  auto m = fit_ols(X, y);
  CHECK(m.beta(0) == doctest::Approx(7.0));
}

TEST_CASE("ols: random 20x3 matches the normal-equations oracle") {
  Rng rng(11);
  Eigen::MatrixXd X(20, 3);
  Eigen::VectorXd y(20);
  for (int i = 0; i < 20; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = rng.normal();
    X(i, 2) = rng.normal();
    y(i) = 2.0 + 0.5 * X(i, 1) - 1.2 * X(i, 2) + rng.normal();
  }
  auto m = fit_ols(X, y);
  // oracle: explicit (X'X)^-1 X'y via a full inverse
  const Eigen::VectorXd oracle = (X.transpose() * X).inverse() * X.transpose() * y;
  for (int j = 0; j < 3; ++j)
    CHECK(m.beta(j) == doctest::Approx(oracle(j)).epsilon(1e-10));

  // residual orthogonality invariant
  const Eigen::VectorXd r = y - X * m.beta;
  CHECK((X.transpose() * r).cwiseAbs().maxCoeff() < 1e-8 * y.norm());

  // stored ICs recompute exactly
  CHECK(m.aic == -2.0 * m.loglik + 2.0 * m.p);
  CHECK(m.bic == -2.0 * m.loglik + m.p * std::log(20.0));
}

TEST_CASE("ols preconditions") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(2, 2);  // rank 1 and n == p
  Eigen::VectorXd y(2);
  y << 1, 2;
  CHECK_THROWS_AS(fit_ols(X, y), TrialError);
}

TEST_CASE("logistic: intercept-only equals logit of the rate") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(8, 1);
  Eigen::VectorXd y(8);
  y << 1, 0, 0, 0, 1, 0, 0, 0;  // rate 0.25
  auto m = fit_logistic(X, y);
  CHECK(m.beta(0) == doctest::Approx(std::log(1.0 / 3.0)).epsilon(1e-8));
}

TEST_CASE("logistic: dummy slope equals the table's log odds ratio") {
  // 2x2 table: group0 30/100 events, group1 60/100 events
  const int n = 200;
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    const bool g1 = i >= 100;
    X(i, 0) = 1.0;
    X(i, 1) = g1 ? 1.0 : 0.0;
    const int within = i % 100;
    y(i) = g1 ? (within < 60 ? 1.0 : 0.0) : (within < 30 ? 1.0 : 0.0);
  }
  auto m = fit_logistic(X, y);
  // oracle: hand-computed log OR = ln((60/40)/(30/70))
  const double lor = std::log((60.0 / 40.0) / (30.0 / 70.0));
  CHECK(m.beta(1) == doctest::Approx(lor).epsilon(1e-7));

  // fitted probabilities average to the observed rate (intercept present)
  double mean_p = 0.0;
  for (int i = 0; i < n; ++i) mean_p += stats::inv_logit((X * m.beta)(i));
  CHECK(mean_p / n == doctest::Approx(y.mean()).epsilon(1e-9));
}

TEST_CASE("logistic: goodbye-rate arms give OR near 2.02") {
  // arms constructed at 43.9% of 2000 vs 28.0% of 1500
  const int n1 = 2000, n2 = 1500;
  const int k1 = 878, k2 = 420;
  Eigen::MatrixXd X(n1 + n2, 2);
  Eigen::VectorXd y(n1 + n2);
  for (int i = 0; i < n1 + n2; ++i) {
    const bool repeated = i < n1;
    X(i, 0) = 1.0;
    X(i, 1) = repeated ? 1.0 : 0.0;
    y(i) = repeated ? (i < k1 ? 1 : 0) : (i - n1 < k2 ? 1 : 0);
  }
  auto m = fit_logistic(X, y);
  const double odds_ratio = std::exp(m.beta(1));
  CHECK(odds_ratio == doctest::Approx(2.02).epsilon(0.01));
}

TEST_CASE("logistic: separation is detected") {
  Eigen::MatrixXd X(6, 2);
  Eigen::VectorXd y(6);
  for (int i = 0; i < 6; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = i < 3 ? -1.0 : 1.0;
    y(i) = i < 3 ? 0.0 : 1.0;  // perfectly separated
  }
  CHECK_THROWS_WITH_AS(fit_logistic(X, y), doctest::Contains("Separation"), TrialError);
}

TEST_CASE("fisher_exact examples") {
  CHECK(fisher_exact({{{5, 5}, {5, 5}}}) == doctest::Approx(1.0));
  CHECK(fisher_exact({{{0, 0}, {3, 7}}}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(fisher_exact({{{-1, 2}, {3, 4}}}), TrialError);
}

TEST_CASE("lr_test: identical models give statistic 0, p 1") {
  Rng rng(3);
  Eigen::MatrixXd X(30, 2);
  Eigen::VectorXd y(30);
  for (int i = 0; i < 30; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = rng.normal();
    y(i) = 1.0 + X(i, 1) + rng.normal();
  }
  auto full = fit_ols(X, y);
  auto reduced = fit_ols(X.leftCols(1), y);
  auto r = lr_test(full, reduced);
  CHECK(r.df == 1);
  CHECK(r.statistic >= 0.0);

  CHECK_THROWS_AS(lr_test(reduced, full), TrialError);        // not nested
  auto self = lr_test(full, reduced);
  (void)self;
}

TEST_CASE("lr_test: null extra column is approximately chi-square(1)") {
  // mean of the statistic over replicates should be near 1
  Rng rng(17);
  double sum = 0.0;
  int reject_01 = 0;
  const int reps = 400;
  for (int rep = 0; rep < reps; ++rep) {
    Eigen::MatrixXd X(60, 3);
    Eigen::VectorXd y(60);
    for (int i = 0; i < 60; ++i) {
      X(i, 0) = 1.0;
      X(i, 1) = rng.normal();
      X(i, 2) = rng.normal();  // pure noise column
      y(i) = 0.5 + X(i, 1) + rng.normal();
    }
    auto full = fit_ols(X, y);
    auto reduced = fit_ols(X.leftCols(2), y);
    auto r = lr_test(full, reduced);
    sum += r.statistic;
    if (r.p < 0.1) ++reject_01;
  }
  CHECK(sum / reps == doctest::Approx(1.0).epsilon(0.2));
  CHECK(reject_01 > reps * 0.05);
  CHECK(reject_01 < reps * 0.17);
}
