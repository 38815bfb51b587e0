#include "trialfit/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "trialfit/errors.hpp"
#include "trialfit/rng.hpp"

namespace trialfit {

namespace {

enum StreamKey : std::uint64_t {
  kArmStream = 0x41,
  kEffectStream = 0x45,
  kNoiseStream = 0x4E,
  kMissStream = 0x4D,
  kPromptStream = 0x50,
};

}  // namespace

double FixedEffectTruth::eta(double l, bool pers, bool emotional, double t) const {
  const double p = pers ? 1.0 : 0.0;
  const double d = emotional ? 1.0 : 0.0;
  return intercept + lambda1 * l + lambda2 * l * l + lambda3 * l * l * l + personalised * p +
         domain * d + time * t + lambda_personalised * l * p + lambda_domain * l * d +
         lambda_time * l * t + personalised_time * p * t + domain_time * d * t;
}

void TrialGroundTruth::validate() const {
  if (sd_intercept < 0 || sd_slope < 0 || sd_residual < 0)
    fail(errc::invalid_config, "random-effect and residual SDs must be non-negative");
  if (std::fabs(corr) > 1.0) fail(errc::invalid_config, "|corr| must be <= 1");
  if (n_participants < 1 || n_sessions < 1)
    fail(errc::invalid_config, "need at least one participant and one session");
  if (missing_prob < 0 || missing_prob >= 1)
    fail(errc::invalid_config, "missing_prob must lie in [0, 1)");
  if (!allocation.empty()) {
    if (allocation.size() != treatment_cells().size())
      fail(errc::invalid_config, "allocation must cover all 20 treatment cells");
    double s = 0.0;
    for (double a : allocation) {
      if (a < 0) fail(errc::invalid_config, "allocation ratios must be non-negative");
      s += a;
    }
    if (std::fabs(s - 1.0) > 1e-9) fail(errc::invalid_config, "allocation ratios must sum to 1");
  }
}

std::vector<TreatmentCell> treatment_cells() {
  std::vector<TreatmentCell> cells;
  for (bool pers : {false, true})
    for (Domain dom : {Domain::Political, Domain::Emotional})
      for (double l : kLambdaLevels) cells.push_back({l, dom, pers});
  return cells;
}

std::string participant_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "P%06d", index);
  return buf;
}

namespace {

// Expand allocation ratios into a block of cell indices (largest-remainder
// rounding), then permute per block with a seed-derived stream.
std::vector<int> allocation_block(const TrialGroundTruth& truth) {
  const auto cells = treatment_cells();
  const int k = static_cast<int>(cells.size());
  if (truth.allocation.empty()) {
    std::vector<int> block(k);
    std::iota(block.begin(), block.end(), 0);
    return block;
  }
  // scale ratios to a block of size 100 to keep mixed ratios representable
  const int block_size = 100;
  std::vector<int> counts(k, 0);
  std::vector<std::pair<double, int>> remainder;
  int assigned = 0;
  for (int c = 0; c < k; ++c) {
    const double exact = truth.allocation[c] * block_size;
    counts[c] = static_cast<int>(std::floor(exact));
    assigned += counts[c];
    remainder.push_back({exact - counts[c], c});
  }
  std::sort(remainder.begin(), remainder.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int i = 0; i < block_size - assigned; ++i) counts[remainder[i % k].second] += 1;
  std::vector<int> block;
  for (int c = 0; c < k; ++c) block.insert(block.end(), counts[c], c);
  return block;
}

}  // namespace

TreatmentAssignment assign_arm(const TrialGroundTruth& truth, int participant_index) {
  const auto cells = treatment_cells();
  const std::vector<int> block = allocation_block(truth);
  const int block_size = static_cast<int>(block.size());
  const int block_index = participant_index / block_size;
  const int within = participant_index % block_size;

  std::vector<int> permuted = block;
  Rng rng(Rng::derive(truth.seed, {kArmStream, static_cast<std::uint64_t>(block_index)}));
  rng.shuffle(permuted);

  const TreatmentCell& cell = cells[static_cast<std::size_t>(permuted[within])];
  return {cell.lambda, cell.domain, cell.personalised};
}

ObservationTable simulate_trial(const TrialGroundTruth& truth) {
  truth.validate();

  std::vector<Observation> obs;
  std::map<std::string, TreatmentAssignment> assignments;
  obs.reserve(static_cast<std::size_t>(truth.n_participants) * truth.n_sessions);

  for (int i = 0; i < truth.n_participants; ++i) {
    const std::string pid = participant_id(i);
    const TreatmentAssignment arm = assign_arm(truth, i);
    assignments.emplace(pid, arm);

    Rng eff(Rng::derive(truth.seed, {kEffectStream, static_cast<std::uint64_t>(i)}));
    // (u0, u1) from the Cholesky factor of the 2x2 covariance
    const double z0 = eff.normal(), z1 = eff.normal();
    const double u0 = truth.sd_intercept * z0;
    const double u1 =
        truth.sd_slope * (truth.corr * z0 + std::sqrt(1.0 - truth.corr * truth.corr) * z1);

    Rng noise(Rng::derive(truth.seed, {kNoiseStream, static_cast<std::uint64_t>(i)}));
    Rng miss(Rng::derive(truth.seed, {kMissStream, static_cast<std::uint64_t>(i)}));

    for (int t = 1; t <= truth.n_sessions; ++t) {
      const double eps = noise.normal();  // drawn before the missingness check
      const bool dropped = truth.missing_prob > 0 && miss.uniform() < truth.missing_prob;
      if (dropped) continue;
      Observation o;
      o.participant = pid;
      o.time = t;
      o.outcome = truth.outcome;
      o.value = truth.fixed.eta(arm.lambda, arm.personalised, arm.domain == Domain::Emotional,
                                static_cast<double>(t)) +
                u0 + u1 * t + truth.sd_residual * eps;
      obs.push_back(std::move(o));
    }
  }

  OutcomeRegistry registry;
  OutcomeInfo info;
  info.scale_min = -1e308;
  info.scale_max = 1e308;
  registry[truth.outcome] = info;
  return ObservationTable(std::move(obs), std::move(assignments), {}, std::move(registry));
}

ObservationTable simulate_binary_endpoint(const TrialGroundTruth& truth) {
  truth.validate();

  std::vector<Observation> obs;
  std::map<std::string, TreatmentAssignment> assignments;
  obs.reserve(static_cast<std::size_t>(truth.n_participants));

  for (int i = 0; i < truth.n_participants; ++i) {
    const std::string pid = participant_id(i);
    const TreatmentAssignment arm = assign_arm(truth, i);
    assignments.emplace(pid, arm);

    Rng noise(Rng::derive(truth.seed, {kNoiseStream, static_cast<std::uint64_t>(i)}));
    const double eta =
        truth.fixed.eta(arm.lambda, arm.personalised, arm.domain == Domain::Emotional, 0.0);
    const double pr = 1.0 / (1.0 + std::exp(-eta));
    Observation o;
    o.participant = pid;
    o.time = 0;
    o.outcome = truth.outcome;
    o.value = noise.uniform() < pr ? 1.0 : 0.0;
    obs.push_back(std::move(o));
  }

  OutcomeRegistry registry;
  OutcomeInfo info;
  info.type = OutcomeType::Binary;
  registry[truth.outcome] = info;
  return ObservationTable(std::move(obs), std::move(assignments), {}, std::move(registry));
}

void FrontierPanelTruth::validate() const {
  if (n_models < 1 || n_prompts < 1)
    fail(errc::invalid_config, "panel needs positive dimensions");
  if (sd_model < 0 || sd_prompt < 0 || sd_residual < 0)
    fail(errc::invalid_config, "panel SDs must be non-negative");
  if (year_span <= 0) fail(errc::invalid_config, "year_span must be positive");
}

ObservationTable simulate_frontier_panel(const FrontierPanelTruth& truth) {
  truth.validate();

  std::vector<double> prompt_effects(truth.n_prompts);
  for (int j = 0; j < truth.n_prompts; ++j) {
    Rng rng(Rng::derive(truth.seed, {kPromptStream, static_cast<std::uint64_t>(j)}));
    prompt_effects[j] = truth.sd_prompt * rng.normal();
  }

  std::vector<Observation> obs;
  std::map<std::string, TreatmentAssignment> assignments;
  std::map<std::string, ParticipantCovariates> covariates;

  for (int m = 0; m < truth.n_models; ++m) {
    const std::string mid = participant_id(m);
    assignments.emplace(mid, TreatmentAssignment{0.0, Domain::Political, false});

    Rng eff(Rng::derive(truth.seed, {kEffectStream, static_cast<std::uint64_t>(m)}));
    const double years = truth.n_models > 1
                             ? truth.year_span * m / (truth.n_models - 1.0)
                             : 0.0;
    const double a_m = truth.sd_model * eff.normal();
    ParticipantCovariates cov;
    cov.numeric["release_years"] = years;
    covariates.emplace(mid, std::move(cov));

    Rng noise(Rng::derive(truth.seed, {kNoiseStream, static_cast<std::uint64_t>(m)}));
    for (int j = 0; j < truth.n_prompts; ++j) {
      Observation o;
      o.participant = mid;
      o.time = 0;
      o.outcome = "score";
      char buf[16];
      std::snprintf(buf, sizeof(buf), "prompt%04d", j);
      o.item = buf;
      o.value = truth.intercept + truth.trend_per_year * years + a_m + prompt_effects[j] +
                truth.sd_residual * noise.normal();
      obs.push_back(std::move(o));
    }
  }

  OutcomeRegistry registry;
  OutcomeInfo info;
  info.scale_min = -1e308;
  info.scale_max = 1e308;
  info.time_unit = "panel";
  registry["score"] = info;
  return ObservationTable(std::move(obs), std::move(assignments), std::move(covariates),
                          std::move(registry));
}

}  // namespace trialfit
