#ifndef TRIALFIT_CONTRASTS_HPP
#define TRIALFIT_CONTRASTS_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trialfit/design.hpp"
#include "trialfit/fixed_models.hpp"
#include "trialfit/mixed_models.hpp"

namespace trialfit {

// A fitted linear predictor: the expanded design columns plus coefficient
// estimates and their covariance. Built from either model class.
struct LinearPredictor {
  std::vector<Column> columns;
  Eigen::VectorXd beta;
  Eigen::MatrixXd cov;
  ModelSpec::Family family = ModelSpec::Family::Gaussian;
  FactorLevels factor_levels;

  Eigen::VectorXd design_row(const Env& e) const;

  static LinearPredictor from(const DesignMatrix& d, const FittedFixedModel& m);
  static LinearPredictor from(const DesignMatrix& d, const FittedMixedModel& m);
};

// Cells to average model predictions over. Numeric covariates (baseline and
// participant covariates) are held at `covariate_values`; factor weights are
// equal by default, observed-frequency behind the flag.
struct ReferenceGrid {
  std::vector<double> lambda_levels;
  std::vector<std::string> domain_levels;
  std::vector<std::string> personalised_levels;
  std::vector<std::string> item_levels;  // empty unless the model pools items
  std::vector<double> time_points;
  std::map<std::string, double> covariate_values;
  std::map<std::string, std::string> categorical_values;  // fixed, not averaged
  bool observed_weights = false;
  std::map<std::string, std::map<std::string, double>> observed_freq;  // factor -> level -> w

  // Grid spanning the design's factor levels, observed times and design
  // lambda levels, with numeric covariates at their data means.
  static ReferenceGrid from_design(const DesignMatrix& d, const ObservationTable& table,
                                   const std::string& outcome);
  static ReferenceGrid from_design(const DesignMatrix& d);
};

struct GridCell {
  Env env;
  double weight = 0.0;
};

// Expands the grid into weighted cells; weights sum to 1.
std::vector<GridCell> expand_grid(const ReferenceGrid& grid, const LinearPredictor& lp);

struct EmmRow {
  std::map<std::string, std::string> at;  // displayed factor levels
  double emm = 0.0;
  double se = 0.0;
};

// Estimated marginal means: for each level combination of `by` variables
// ("lambda", "domain", "personalised", "time", "item"), the weighted average
// of predictions over the remaining grid dimensions. Delta-method SEs.
std::vector<EmmRow> emm(const LinearPredictor& lp, const ReferenceGrid& grid,
                        const std::vector<std::string>& by);

struct ContrastResult {
  std::string name;
  double estimate = 0.0;  // outcome units, or log-odds for Binomial
  double se = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;  // estimate +- 1.96 se
  double z = 0.0;
  double p_raw = 1.0;
  double p_adj = std::numeric_limits<double>::quiet_NaN();
  std::string family_id;
  std::optional<double> odds_ratio, or_lo, or_hi;  // Binomial only
};

// mean EMM over split_a minus mean EMM over split_b of one grid variable
// ("lambda", "domain" or "personalised"); levels given as formatted strings
// for factors or numeric strings for lambda.
ContrastResult paired_contrast(const LinearPredictor& lp, const ReferenceGrid& grid,
                               const std::string& variable,
                               const std::vector<std::string>& split_a,
                               const std::vector<std::string>& split_b,
                               const std::string& name = "");

struct SlopeResult {
  std::string condition;
  double slope = 0.0;
  double se = 0.0;
  double z = 0.0;
  double p_raw = 1.0;
};

struct Condition {
  std::string name;
  ReferenceGrid grid;  // restricted grid describing the condition
};

// Per-condition time slopes: d/dt of the averaged prediction (exact, since
// time enters linearly), with delta-method SEs and z tests against zero.
std::vector<SlopeResult> condition_slopes(const LinearPredictor& lp,
                                          const std::vector<Condition>& conditions);

// ---------------------------------------------------------------------------
// Lambda equivalence
// ---------------------------------------------------------------------------

struct SteeringCurvePoint {
  double lambda;
  double score;
};

struct LambdaEquivalence {
  double lambda_hat = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;
  bool clamped = false;  // some score fell outside the curve's range
};

// Maps the median of per-model scores onto the steering curve by
// piecewise-linear inverse interpolation; percentile bootstrap over models.
LambdaEquivalence lambda_equivalence(const std::vector<double>& frontier_scores,
                                     std::vector<SteeringCurvePoint> steering_curve,
                                     int bootstrap = 1000, std::uint64_t seed = 1);

}  // namespace trialfit

#endif
