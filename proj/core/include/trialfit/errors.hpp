#ifndef TRIALFIT_ERRORS_HPP
#define TRIALFIT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace trialfit {

// Error categories map onto CLI exit codes: config=2, data=3, numeric=4.
enum class errc {
  // data / ingestion
  missing_column,
  value_out_of_range,
  duplicate_key,
  unknown_treatment_level,
  mixed_scales,
  orphan_record,
  // design
  rank_deficient,
  unknown_variable,
  empty_factor_level,
  // fixed models
  insufficient_rows,
  separation,
  non_convergence,
  not_nested,
  row_mismatch,
  // mixed models
  single_observation_per_group_with_slope,
  no_random_slope,
  non_nested_chain,
  // contrasts
  grid_outside_design,
  no_time_term,
  non_monotone_curve,
  score_out_of_range,
  // multiplicity
  invalid_p,
  duplicate_test_id,
  // trajectory
  empty_overlap,
  zero_cell,
  non_positive_risk_diff,
  degenerate_variance,
  // psychometrics
  degenerate_margin,
  heywood_case,
  item_mismatch,
  fewer_points_than_clusters,
  // simulator / config
  invalid_config,
  missing_results,
  io_error,
};

const char* errc_name(errc c);

class TrialError : public std::runtime_error {
 public:
  TrialError(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

// Exit-code buckets for the CLI.
enum class error_kind { config = 2, data = 3, numeric = 4 };
error_kind kind_of(errc c);

[[noreturn]] inline void fail(errc code, const std::string& what) {
  throw TrialError(code, what);
}

}  // namespace trialfit

#endif
