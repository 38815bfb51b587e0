#ifndef TRIALFIT_FIXED_MODELS_HPP
#define TRIALFIT_FIXED_MODELS_HPP

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "trialfit/design.hpp"

namespace trialfit {

struct FittedFixedModel {
  Eigen::VectorXd beta;
  Eigen::MatrixXd cov;  // covariance of beta, symmetric PSD
  std::vector<std::string> labels;
  double loglik = 0.0;
  int n = 0;
  int p = 0;  // estimated coefficients (design columns)
  ModelSpec::Family family = ModelSpec::Family::Gaussian;
  double dispersion = 0.0;  // residual variance estimate (Gaussian), RSS/(n-p)
  double aic = 0.0;         // -2 loglik + 2 p
  double bic = 0.0;         // -2 loglik + p ln(n)

  double se(int j) const { return std::sqrt(cov(j, j)); }
};

// Ordinary least squares; Gaussian ML log-likelihood (sigma^2 = RSS/n).
FittedFixedModel fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         std::vector<std::string> labels = {});

// Logistic regression by iteratively reweighted least squares. Converges
// when the score's max-norm drops below `tol`; errs on separation.
FittedFixedModel fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              std::vector<std::string> labels = {}, int max_iter = 100,
                              double tol = 1e-8);

// Two-sided Fisher exact p for a 2x2 table (probability-ordering rule).
double fisher_exact(const std::array<std::array<long, 2>, 2>& table);

struct LrTestResult {
  double statistic = 0.0;
  int df = 0;
  double p = 1.0;
};

// Likelihood ratio test of nested fits on identical rows.
LrTestResult lr_test(const FittedFixedModel& full, const FittedFixedModel& reduced);

}  // namespace trialfit

#endif
