#ifndef TRIALFIT_SIMULATOR_HPP
#define TRIALFIT_SIMULATOR_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "trialfit/data.hpp"

namespace trialfit {

// Fixed-effect coefficients of the generative dose-response model:
//   Y_it = intercept + l1*L + l2*L^2 + l3*L^3 + pers*P + dom*D + time*t
//        + l_pers*L*P + l_dom*L*D + l_time*L*t + pers_time*P*t + dom_time*D*t
// with P = 1 for personalised, D = 1 for the emotional domain.
struct FixedEffectTruth {
  double intercept = 50.0;
  double lambda1 = 0.0, lambda2 = 0.0, lambda3 = 0.0;
  double personalised = 0.0;
  double domain = 0.0;
  double time = 0.0;
  double lambda_personalised = 0.0;
  double lambda_domain = 0.0;
  double lambda_time = 0.0;
  double personalised_time = 0.0;
  double domain_time = 0.0;

  double eta(double lambda, bool pers, bool emotional, double t) const;
};

struct TrialGroundTruth {
  FixedEffectTruth fixed;
  double sd_intercept = 0.0;
  double sd_slope = 0.0;
  double corr = 0.0;  // intercept-slope correlation
  double sd_residual = 1.0;
  int n_participants = 100;
  int n_sessions = 10;      // times 1..n_sessions
  double missing_prob = 0.0;
  std::string outcome = "outcome";
  // allocation over the 5 x 2 x 2 cells; empty = equal ratios
  std::vector<double> allocation;
  std::uint64_t seed = 1;

  void validate() const;
};

// Treatment cell in a fixed enumeration order (lambda fastest).
struct TreatmentCell {
  double lambda;
  Domain domain;
  bool personalised;
};
std::vector<TreatmentCell> treatment_cells();

// Permuted-block randomised assignment: participant i's arm depends only on
// (seed, i), so growing the trial never reassigns existing participants.
TreatmentAssignment assign_arm(const TrialGroundTruth& truth, int participant_index);

// Longitudinal Gaussian trial with per-participant random intercepts and
// time slopes. Deterministic given (truth, seed); per-participant substreams.
ObservationTable simulate_trial(const TrialGroundTruth& truth);

// Single-timepoint Bernoulli endpoint: Y ~ Bernoulli(inv_logit(eta)) where
// eta uses the same fixed-effect structure evaluated at t = 0.
ObservationTable simulate_binary_endpoint(const TrialGroundTruth& truth);

struct FrontierPanelTruth {
  int n_models = 20;
  int n_prompts = 20;
  double intercept = 5.0;
  double trend_per_year = 0.0;
  double year_span = 2.5;        // release years uniform on [0, year_span]
  double sd_model = 0.5;
  double sd_prompt = 0.5;
  double sd_residual = 1.0;
  std::uint64_t seed = 1;

  void validate() const;
};

// Crossed model x prompt panel: score = intercept + trend*years + a_model +
// b_prompt + noise. Models are stored as participants (with numeric
// covariate `release_years`) and prompts as items.
ObservationTable simulate_frontier_panel(const FrontierPanelTruth& truth);

// Participant id for index i, zero-padded so lexicographic order matches
// numeric order.
std::string participant_id(int index);

}  // namespace trialfit

#endif
