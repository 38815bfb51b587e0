#ifndef TRIALFIT_DATA_HPP
#define TRIALFIT_DATA_HPP

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace trialfit {

enum class Domain { Emotional, Political };

std::string to_string(Domain d);
Domain domain_from_string(const std::string& s);

// The five steering-multiplier design levels.
inline constexpr std::array<double, 5> kLambdaLevels = {-1.0, -0.5, 0.0, 0.5, 1.0};
bool is_design_lambda(double lambda);

struct TreatmentAssignment {
  double lambda = 0.0;
  Domain domain = Domain::Political;
  bool personalised = false;

  bool operator==(const TreatmentAssignment&) const = default;
};

struct Observation {
  std::string participant;
  int time = 0;       // session or week index; unit declared per outcome
  std::string outcome;
  std::string item;   // empty unless part of a pooled construct
  double value = 0.0;
  std::optional<double> baseline;

  bool operator==(const Observation&) const = default;
};

enum class OutcomeType { Continuous, Binary };

struct OutcomeInfo {
  double scale_min = 0.0;
  double scale_max = 100.0;
  std::string time_unit = "session";
  OutcomeType type = OutcomeType::Continuous;

  bool operator==(const OutcomeInfo&) const = default;
};

using OutcomeRegistry = std::map<std::string, OutcomeInfo>;

struct ParticipantCovariates {
  std::map<std::string, double> numeric;
  std::map<std::string, std::string> categorical;

  bool operator==(const ParticipantCovariates&) const = default;
};

// Declared level sets for categorical covariates; empty map means
// "accept observed levels".
using CovariateLevels = std::map<std::string, std::vector<std::string>>;

// Immutable long-format table of trial observations plus treatment metadata.
// Construction validates all invariants; afterwards the table is safe for
// concurrent reads.
class ObservationTable {
 public:
  ObservationTable(std::vector<Observation> observations,
                   std::map<std::string, TreatmentAssignment> assignments,
                   std::map<std::string, ParticipantCovariates> covariates,
                   OutcomeRegistry registry);

  const std::vector<Observation>& observations() const { return obs_; }
  const std::map<std::string, TreatmentAssignment>& assignments() const { return assignments_; }
  const std::map<std::string, ParticipantCovariates>& covariates() const { return covariates_; }
  const OutcomeRegistry& registry() const { return registry_; }

  const TreatmentAssignment& assignment(const std::string& participant) const;
  const OutcomeInfo& outcome_info(const std::string& outcome) const;

  std::vector<std::string> participants() const;             // sorted, from assignments
  std::vector<std::string> participants_with_rows() const;   // sorted, from observations
  std::vector<int> observed_times(const std::string& outcome) const;  // sorted unique

  // Rows of a single outcome, in canonical order.
  std::vector<const Observation*> rows_for(const std::string& outcome) const;

  // Canonical equality: same observations up to row order, same metadata,
  // values compared bitwise.
  bool operator==(const ObservationTable& other) const;

 private:
  std::vector<Observation> obs_;  // canonically sorted
  std::map<std::string, TreatmentAssignment> assignments_;
  std::map<std::string, ParticipantCovariates> covariates_;
  OutcomeRegistry registry_;
};

// ---------------------------------------------------------------------------
// Ingestion
// ---------------------------------------------------------------------------

// Observations CSV: participant_id,time,outcome,value (+ optional item,baseline).
// Assignments CSV: participant_id,lambda,domain,personalised.
// Covariates CSV:  participant_id,<name>... with declared categorical levels.
ObservationTable ingest_csv(const std::string& observations_path,
                            const std::string& assignments_path,
                            const OutcomeRegistry& registry,
                            const std::optional<std::string>& covariates_path = std::nullopt,
                            const CovariateLevels& levels = {});

// String-based variant used by tests and the simulator round trip.
ObservationTable ingest_strings(const std::string& observations_csv,
                                const std::string& assignments_csv,
                                const OutcomeRegistry& registry,
                                const std::optional<std::string>& covariates_csv = std::nullopt,
                                const CovariateLevels& levels = {});

struct ExportedTable {
  std::string observations_csv;
  std::string assignments_csv;
  std::string covariates_csv;  // empty when no covariates
};
ExportedTable export_csv(const ObservationTable& table);

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// Re-labels rows of the named items under `construct`, keeping the source
// outcome as the item factor. Row count and values are unchanged.
ObservationTable pool_items(const ObservationTable& table, const std::string& construct,
                            const std::vector<std::string>& items);

enum class ArmFactor { Lambda, Domain, Personalised };

struct AttritionTable {
  ArmFactor factor;
  std::vector<std::string> level_names;
  std::vector<long> completers;      // per level
  std::vector<long> non_completers;  // per level

  std::array<std::array<long, 2>, 2> as_2x2(std::size_t level) const;  // level vs rest
};

// Completers = participants of `pre` that have at least one row in `post`.
AttritionTable attrition_table(const ObservationTable& pre, const ObservationTable& post,
                               ArmFactor factor);

}  // namespace trialfit

#endif
