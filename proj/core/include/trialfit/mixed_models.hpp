#ifndef TRIALFIT_MIXED_MODELS_HPP
#define TRIALFIT_MIXED_MODELS_HPP

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trialfit/design.hpp"
#include "trialfit/fixed_models.hpp"

namespace trialfit {

enum class Criterion { REML, ML };

// Estimated random-effect scales in outcome units.
struct VarianceComponents {
  struct Block {
    std::string grouping;
    double sd_intercept = 0.0;
    double sd_slope = 0.0;  // 0 when the block has no slope
    double corr = 0.0;      // intercept-slope correlation
    bool boundary = false;  // hit the zero floor of the parameterisation
  };
  std::vector<Block> blocks;
  double sigma = 1.0;  // residual SD
};

struct RandomEffects {
  std::string grouping;
  std::vector<std::string> levels;
  Eigen::VectorXd intercept;
  Eigen::VectorXd slope;  // size 0 when the block has no slope
};

struct ConvergenceRecord {
  bool converged = false;
  int evaluations = 0;
  double deviance = 0.0;       // -2 profiled loglik at the optimum
  double gradient_norm = 0.0;  // scaled central-difference norm
  bool boundary = false;
  std::vector<std::string> notes;
};

struct FittedMixedModel {
  Eigen::VectorXd beta;
  Eigen::MatrixXd cov_beta;
  std::vector<std::string> labels;
  VarianceComponents vc;
  double loglik_reml = 0.0;  // both criteria evaluated at the fitted theta
  double loglik_ml = 0.0;
  Criterion criterion = Criterion::REML;
  double aic = 0.0;  // from the fitting criterion's loglik; parameters = p + n_theta + 1
  double bic = 0.0;
  int n = 0;
  int p = 0;        // fixed effects
  int n_theta = 0;  // covariance parameters (excluding sigma)
  std::vector<RandomEffects> blups;
  ConvergenceRecord convergence;

  double se(int j) const { return std::sqrt(cov_beta(j, j)); }
  double z(int j) const { return beta(j) / se(j); }
  double loglik() const { return criterion == Criterion::REML ? loglik_reml : loglik_ml; }
};

// Gaussian linear mixed model, REML or ML, profiled over beta and sigma^2
// with a log-Cholesky parameterisation of the relative random-effect
// covariance. Supports one grouping factor with random intercept (+ time
// slope), or two crossed intercept-only grouping factors.
FittedMixedModel fit_lmm(const ModelSpec& spec, const ObservationTable& table,
                         Criterion criterion = Criterion::REML);
FittedMixedModel fit_lmm(const DesignMatrix& design, Criterion criterion = Criterion::REML);

// Crossed random intercepts (e.g. model x prompt panels).
FittedMixedModel fit_crossed_lmm(const ModelSpec& spec, const ObservationTable& table,
                                 Criterion criterion = Criterion::REML);

// slope_i = fixed time coefficient + per-level slope BLUP. The model must
// contain a random time slope.
std::map<std::string, double> extract_subject_slopes(const FittedMixedModel& model);

struct SpecComparisonRow {
  std::string name;
  int p_fixed = 0;
  double loglik = 0.0;  // ML
  double aic = 0.0;
  double bic = 0.0;
  std::optional<double> lrt_statistic;  // vs previous spec in the nested chain
  std::optional<int> lrt_df;
  std::optional<double> lrt_p;
};

struct SpecComparison {
  std::vector<SpecComparisonRow> rows;  // in input order
  int winner = 0;                       // lowest AIC, ties to fewer parameters
  bool lrt_chain_valid = true;          // false if the chain is not nested
};

// Fits every spec under ML and ranks by AIC; LRT chain along specs ordered
// by parameter count. Specs must differ only in fixed effects.
SpecComparison compare_fixed_specs(const std::vector<ModelSpec>& specs,
                                   const ObservationTable& table,
                                   std::vector<std::string> names = {});

// Criterion value of the fitted model re-expressed as a FittedFixedModel
// shell for lr_test interop (ML logliks, parameter count p + n_theta + 1).
FittedFixedModel as_fixed_shell(const FittedMixedModel& m);

}  // namespace trialfit

#endif
