#include "trialfit/fixed_models.hpp"

#include <cmath>
#include <limits>

#include "trialfit/errors.hpp"
#include "trialfit/stats.hpp"

namespace trialfit {

namespace {

constexpr double kPi = 3.14159265358979323846;

void attach_ic(FittedFixedModel& m) {
  m.aic = -2.0 * m.loglik + 2.0 * m.p;
  m.bic = -2.0 * m.loglik + m.p * std::log(static_cast<double>(m.n));
}

std::vector<std::string> default_labels(Eigen::Index p, std::vector<std::string> labels) {
  if (!labels.empty()) return labels;
  std::vector<std::string> out;
  for (Eigen::Index j = 0; j < p; ++j) out.push_back("b" + std::to_string(j));
  return out;
}

}  // namespace

FittedFixedModel fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         std::vector<std::string> labels) {
  const Eigen::Index n = X.rows(), p = X.cols();
  if (n <= p) fail(errc::insufficient_rows, "need n > p, got n=" + std::to_string(n) +
                                                " p=" + std::to_string(p));

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) fail(errc::rank_deficient, "OLS design is rank deficient");

  FittedFixedModel m;
  m.beta = qr.solve(y);
  const Eigen::VectorXd resid = y - X * m.beta;
  const double rss = resid.squaredNorm();
  const double nn = static_cast<double>(n);
  const double sigma2_ml = rss / nn;

  const Eigen::MatrixXd xtx_inv =
      (X.transpose() * X).llt().solve(Eigen::MatrixXd::Identity(p, p));
  m.dispersion = rss / static_cast<double>(n - p);
  m.cov = m.dispersion * xtx_inv;
  // exact fits have a divergent Gaussian likelihood
  m.loglik = sigma2_ml > 0.0 ? -0.5 * nn * (std::log(2.0 * kPi * sigma2_ml) + 1.0)
                             : std::numeric_limits<double>::infinity();
  m.n = static_cast<int>(n);
  m.p = static_cast<int>(p);
  m.family = ModelSpec::Family::Gaussian;
  m.labels = default_labels(p, std::move(labels));
  attach_ic(m);
  return m;
}

FittedFixedModel fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              std::vector<std::string> labels, int max_iter, double tol) {
  const Eigen::Index n = X.rows(), p = X.cols();
  for (Eigen::Index i = 0; i < n; ++i)
    if (y(i) != 0.0 && y(i) != 1.0)
      fail(errc::value_out_of_range, "logistic outcome must be 0/1");

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd info(p, p);
  bool converged = false;

  for (int iter = 0; iter < max_iter; ++iter) {
    const Eigen::VectorXd eta = X * beta;
    if (eta.cwiseAbs().maxCoeff() > 15.0)
      fail(errc::separation, "fitted log-odds diverged; data are (quasi-)separated");

    Eigen::VectorXd mu(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      mu(i) = stats::inv_logit(eta(i));
      w(i) = mu(i) * (1.0 - mu(i));
    }
    const Eigen::VectorXd score = X.transpose() * (y - mu);
    info = X.transpose() * w.asDiagonal() * X;

    if (score.cwiseAbs().maxCoeff() < tol) {
      converged = true;
      break;
    }

    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0).any())
      fail(errc::rank_deficient, "logistic information matrix is singular");
    const Eigen::VectorXd step = ldlt.solve(score);

    // step-halving on the log-likelihood
    auto loglik_at = [&](const Eigen::VectorXd& b) {
      const Eigen::VectorXd e = X * b;
      double ll = 0.0;
      for (Eigen::Index i = 0; i < n; ++i)
        ll += y(i) * e(i) - std::log1p(std::exp(std::min(e(i), 35.0)));
      return ll;
    };
    const double ll0 = loglik_at(beta);
    double scale = 1.0;
    Eigen::VectorXd cand = beta + step;
    for (int h = 0; h < 8 && loglik_at(cand) < ll0 - 1e-12; ++h) {
      scale *= 0.5;
      cand = beta + scale * step;
    }
    beta = cand;
  }
  if (!converged) fail(errc::non_convergence, "IRLS did not converge");

  FittedFixedModel m;
  m.beta = beta;
  const Eigen::VectorXd eta = X * beta;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    ll += y(i) * eta(i) - std::log1p(std::exp(std::min(eta(i), 35.0)));
  m.loglik = ll;
  m.cov = info.llt().solve(Eigen::MatrixXd::Identity(p, p));
  m.n = static_cast<int>(n);
  m.p = static_cast<int>(p);
  m.family = ModelSpec::Family::Binomial;
  m.dispersion = 1.0;
  m.labels = default_labels(p, std::move(labels));
  attach_ic(m);
  return m;
}

double fisher_exact(const std::array<std::array<long, 2>, 2>& table) {
  for (const auto& row : table)
    for (long c : row)
      if (c < 0) fail(errc::value_out_of_range, "fisher_exact needs non-negative counts");
  return stats::fisher_exact_2x2(table);
}

LrTestResult lr_test(const FittedFixedModel& full, const FittedFixedModel& reduced) {
  if (full.n != reduced.n)
    fail(errc::row_mismatch, "models were fitted on different row counts");
  const int df = full.p - reduced.p;
  if (df <= 0) fail(errc::not_nested, "full model must have more parameters");

  LrTestResult r;
  r.statistic = 2.0 * (full.loglik - reduced.loglik);
  if (r.statistic < 0.0) {
    if (r.statistic < -1e-8)
      fail(errc::not_nested, "reduced model fits better; models are not nested");
    r.statistic = 0.0;
  }
  r.df = df;
  r.p = stats::chi2_sf(r.statistic, df);
  return r;
}

}  // namespace trialfit
