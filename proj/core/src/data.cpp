#include "trialfit/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>
#include <tuple>

#include "trialfit/csv.hpp"
#include "trialfit/errors.hpp"

namespace trialfit {

std::string to_string(Domain d) {
  return d == Domain::Emotional ? "Emotional" : "Political";
}

Domain domain_from_string(const std::string& s) {
  std::string low;
  for (char c : s) low += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (low == "emotional") return Domain::Emotional;
  if (low == "political") return Domain::Political;
  fail(errc::value_out_of_range, "unknown domain '" + s + "'");
}

bool is_design_lambda(double lambda) {
  for (double l : kLambdaLevels)
    if (lambda == l) return true;
  return false;
}

namespace {

auto row_key(const Observation& o) {
  return std::tie(o.participant, o.outcome, o.item, o.time);
}

void sort_canonical(std::vector<Observation>& obs) {
  std::sort(obs.begin(), obs.end(),
            [](const Observation& a, const Observation& b) { return row_key(a) < row_key(b); });
}

}  // namespace

ObservationTable::ObservationTable(std::vector<Observation> observations,
                                   std::map<std::string, TreatmentAssignment> assignments,
                                   std::map<std::string, ParticipantCovariates> covariates,
                                   OutcomeRegistry registry)
    : obs_(std::move(observations)),
      assignments_(std::move(assignments)),
      covariates_(std::move(covariates)),
      registry_(std::move(registry)) {
  for (const auto& [pid, a] : assignments_) {
    if (!is_design_lambda(a.lambda))
      fail(errc::unknown_treatment_level,
           "participant '" + pid + "' has lambda=" + csv::format_double(a.lambda));
  }
  for (const auto& o : obs_) {
    if (o.time < 0)
      fail(errc::value_out_of_range, "negative time for participant '" + o.participant + "'");
    if (!assignments_.count(o.participant))
      fail(errc::orphan_record, "observation for unassigned participant '" + o.participant + "'");
    auto it = registry_.find(o.outcome);
    if (it == registry_.end())
      fail(errc::value_out_of_range, "outcome '" + o.outcome + "' not in registry");
    const OutcomeInfo& info = it->second;
    if (info.type == OutcomeType::Binary) {
      if (o.value != 0.0 && o.value != 1.0)
        fail(errc::value_out_of_range, "binary outcome '" + o.outcome + "' has value " +
                                           csv::format_double(o.value));
    } else if (!(o.value >= info.scale_min && o.value <= info.scale_max)) {
      fail(errc::value_out_of_range,
           "outcome '" + o.outcome + "' value " + csv::format_double(o.value) +
               " outside [" + csv::format_double(info.scale_min) + "," +
               csv::format_double(info.scale_max) + "]");
    }
  }
  for (const auto& [pid, cov] : covariates_) {
    (void)cov;
    if (!assignments_.count(pid))
      fail(errc::orphan_record, "covariates for unassigned participant '" + pid + "'");
  }
  sort_canonical(obs_);
  for (std::size_t i = 1; i < obs_.size(); ++i) {
    if (row_key(obs_[i - 1]) == row_key(obs_[i]))
      fail(errc::duplicate_key, "(participant=" + obs_[i].participant + ", outcome=" +
                                    obs_[i].outcome + ", item=" + obs_[i].item +
                                    ", time=" + std::to_string(obs_[i].time) + ")");
  }
}

const TreatmentAssignment& ObservationTable::assignment(const std::string& participant) const {
  auto it = assignments_.find(participant);
  if (it == assignments_.end())
    fail(errc::orphan_record, "no assignment for participant '" + participant + "'");
  return it->second;
}

const OutcomeInfo& ObservationTable::outcome_info(const std::string& outcome) const {
  auto it = registry_.find(outcome);
  if (it == registry_.end())
    fail(errc::unknown_variable, "outcome '" + outcome + "' not in registry");
  return it->second;
}

std::vector<std::string> ObservationTable::participants() const {
  std::vector<std::string> out;
  out.reserve(assignments_.size());
  for (const auto& [pid, a] : assignments_) {
    (void)a;
    out.push_back(pid);
  }
  return out;
}

std::vector<std::string> ObservationTable::participants_with_rows() const {
  std::set<std::string> seen;
  for (const auto& o : obs_) seen.insert(o.participant);
  return {seen.begin(), seen.end()};
}

std::vector<int> ObservationTable::observed_times(const std::string& outcome) const {
  std::set<int> times;
  for (const auto& o : obs_)
    if (o.outcome == outcome) times.insert(o.time);
  return {times.begin(), times.end()};
}

std::vector<const Observation*> ObservationTable::rows_for(const std::string& outcome) const {
  std::vector<const Observation*> out;
  for (const auto& o : obs_)
    if (o.outcome == outcome) out.push_back(&o);
  return out;
}

bool ObservationTable::operator==(const ObservationTable& other) const {
  return obs_ == other.obs_ && assignments_ == other.assignments_ &&
         covariates_ == other.covariates_ && registry_ == other.registry_;
}

// ---------------------------------------------------------------------------
// Ingestion
// ---------------------------------------------------------------------------

namespace {

std::map<std::string, TreatmentAssignment> parse_assignments(const csv::Table& t) {
  const int cp = t.require_column("participant_id");
  const int cl = t.require_column("lambda");
  const int cd = t.require_column("domain");
  const int cpe = t.require_column("personalised");
  std::map<std::string, TreatmentAssignment> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    const std::string ctx = "assignments line " + std::to_string(i + 2);
    TreatmentAssignment a;
    a.lambda = csv::parse_double(r[cl], ctx);
    if (!is_design_lambda(a.lambda))
      fail(errc::unknown_treatment_level, ctx + ": lambda=" + r[cl]);
    a.domain = domain_from_string(r[cd]);
    const std::string& p = r[cpe];
    if (p == "true" || p == "1") a.personalised = true;
    else if (p == "false" || p == "0") a.personalised = false;
    else fail(errc::value_out_of_range, ctx + ": personalised='" + p + "'");
    if (!out.emplace(r[cp], a).second)
      fail(errc::duplicate_key, ctx + ": participant '" + r[cp] + "' assigned twice");
  }
  return out;
}

std::vector<Observation> parse_observations(const csv::Table& t) {
  const int cp = t.require_column("participant_id");
  const int ct = t.require_column("time");
  const int co = t.require_column("outcome");
  const int cv = t.require_column("value");
  const int ci = t.column("item");
  const int cb = t.column("baseline");
  std::vector<Observation> out;
  out.reserve(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    const std::string ctx = "observations line " + std::to_string(i + 2);
    Observation o;
    o.participant = r[cp];
    o.time = static_cast<int>(csv::parse_long(r[ct], ctx));
    o.outcome = r[co];
    o.value = csv::parse_double(r[cv], ctx);
    if (ci >= 0) o.item = r[ci];
    if (cb >= 0 && !r[cb].empty()) o.baseline = csv::parse_double(r[cb], ctx);
    out.push_back(std::move(o));
  }
  return out;
}

std::map<std::string, ParticipantCovariates> parse_covariates(const csv::Table& t,
                                                              const CovariateLevels& levels) {
  const int cp = t.require_column("participant_id");
  std::map<std::string, ParticipantCovariates> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    const std::string ctx = "covariates line " + std::to_string(i + 2);
    ParticipantCovariates cov;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      if (static_cast<int>(c) == cp || r[c].empty()) continue;
      const std::string& name = t.header[c];
      auto lv = levels.find(name);
      if (lv != levels.end()) {
        if (std::find(lv->second.begin(), lv->second.end(), r[c]) == lv->second.end())
          fail(errc::value_out_of_range,
               ctx + ": covariate '" + name + "' level '" + r[c] + "' not declared");
        cov.categorical[name] = r[c];
      } else {
        // numeric if it parses, else categorical with observed levels
        double v = 0;
        const char* b = r[c].data();
        const char* e = b + r[c].size();
        auto [ptr, ec] = std::from_chars(b, e, v);
        if (ec == std::errc() && ptr == e) cov.numeric[name] = v;
        else cov.categorical[name] = r[c];
      }
    }
    if (!out.emplace(r[cp], std::move(cov)).second)
      fail(errc::duplicate_key, ctx + ": participant '" + r[cp] + "' has two covariate rows");
  }
  return out;
}

}  // namespace

ObservationTable ingest_strings(const std::string& observations_csv,
                                const std::string& assignments_csv,
                                const OutcomeRegistry& registry,
                                const std::optional<std::string>& covariates_csv,
                                const CovariateLevels& levels) {
  auto obs = parse_observations(csv::read_string(observations_csv));
  auto assignments = parse_assignments(csv::read_string(assignments_csv));
  std::map<std::string, ParticipantCovariates> cov;
  if (covariates_csv && !covariates_csv->empty())
    cov = parse_covariates(csv::read_string(*covariates_csv), levels);
  return ObservationTable(std::move(obs), std::move(assignments), std::move(cov), registry);
}

ObservationTable ingest_csv(const std::string& observations_path,
                            const std::string& assignments_path,
                            const OutcomeRegistry& registry,
                            const std::optional<std::string>& covariates_path,
                            const CovariateLevels& levels) {
  auto obs = parse_observations(csv::read_file(observations_path));
  auto assignments = parse_assignments(csv::read_file(assignments_path));
  std::map<std::string, ParticipantCovariates> cov;
  if (covariates_path)
    cov = parse_covariates(csv::read_file(*covariates_path), levels);
  return ObservationTable(std::move(obs), std::move(assignments), std::move(cov), registry);
}

ExportedTable export_csv(const ObservationTable& table) {
  ExportedTable out;

  csv::Writer obs({"participant_id", "time", "outcome", "item", "value", "baseline"});
  for (const auto& o : table.observations()) {
    obs.add_row({o.participant, std::to_string(o.time), o.outcome, o.item,
                 csv::format_double(o.value),
                 o.baseline ? csv::format_double(*o.baseline) : ""});
  }
  out.observations_csv = obs.str();

  csv::Writer assign({"participant_id", "lambda", "domain", "personalised"});
  for (const auto& [pid, a] : table.assignments()) {
    assign.add_row({pid, csv::format_double(a.lambda), to_string(a.domain),
                    a.personalised ? "true" : "false"});
  }
  out.assignments_csv = assign.str();

  if (!table.covariates().empty()) {
    std::set<std::string> names;
    for (const auto& [pid, cov] : table.covariates()) {
      (void)pid;
      for (const auto& [n, v] : cov.numeric) { (void)v; names.insert(n); }
      for (const auto& [n, v] : cov.categorical) { (void)v; names.insert(n); }
    }
    std::vector<std::string> header = {"participant_id"};
    header.insert(header.end(), names.begin(), names.end());
    csv::Writer cw(header);
    for (const auto& [pid, cov] : table.covariates()) {
      std::vector<std::string> row = {pid};
      for (const auto& n : names) {
        if (auto it = cov.numeric.find(n); it != cov.numeric.end())
          row.push_back(csv::format_double(it->second));
        else if (auto it2 = cov.categorical.find(n); it2 != cov.categorical.end())
          row.push_back(it2->second);
        else
          row.push_back("");
      }
      cw.add_row(std::move(row));
    }
    out.covariates_csv = cw.str();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

ObservationTable pool_items(const ObservationTable& table, const std::string& construct,
                            const std::vector<std::string>& items) {
  if (items.empty()) fail(errc::invalid_config, "pool_items: empty item list");
  const OutcomeInfo* common = nullptr;
  for (const auto& item : items) {
    const OutcomeInfo& info = table.outcome_info(item);
    if (!common) {
      common = &info;
    } else if (!(info == *common)) {
      fail(errc::mixed_scales, "items '" + items.front() + "' and '" + item +
                                   "' differ in scale, unit or type");
    }
  }

  std::vector<Observation> obs;
  obs.reserve(table.observations().size());
  for (const auto& o : table.observations()) {
    Observation copy = o;
    if (std::find(items.begin(), items.end(), o.outcome) != items.end()) {
      copy.outcome = construct;
      copy.item = o.outcome;  // source outcome becomes the modelling factor
    }
    obs.push_back(std::move(copy));
  }

  OutcomeRegistry registry = table.registry();
  registry[construct] = *common;
  return ObservationTable(std::move(obs), table.assignments(), table.covariates(),
                          std::move(registry));
}

namespace {

std::pair<std::vector<std::string>, std::vector<std::size_t>> arm_levels_and_index(
    const ObservationTable& pre, ArmFactor factor) {
  std::vector<std::string> levels;
  switch (factor) {
    case ArmFactor::Lambda:
      for (double l : kLambdaLevels) levels.push_back(csv::format_double(l));
      break;
    case ArmFactor::Domain:
      levels = {"Emotional", "Political"};
      break;
    case ArmFactor::Personalised:
      levels = {"false", "true"};
      break;
  }
  std::vector<std::size_t> index;
  for (const auto& [pid, a] : pre.assignments()) {
    (void)pid;
    std::string key;
    switch (factor) {
      case ArmFactor::Lambda: key = csv::format_double(a.lambda); break;
      case ArmFactor::Domain: key = to_string(a.domain); break;
      case ArmFactor::Personalised: key = a.personalised ? "true" : "false"; break;
    }
    const auto it = std::find(levels.begin(), levels.end(), key);
    index.push_back(static_cast<std::size_t>(it - levels.begin()));
  }
  return {levels, index};
}

}  // namespace

AttritionTable attrition_table(const ObservationTable& pre, const ObservationTable& post,
                               ArmFactor factor) {
  auto [levels, index] = arm_levels_and_index(pre, factor);
  AttritionTable out;
  out.factor = factor;
  out.level_names = levels;
  out.completers.assign(levels.size(), 0);
  out.non_completers.assign(levels.size(), 0);

  std::set<std::string> post_participants;
  for (const auto& o : post.observations()) post_participants.insert(o.participant);

  std::size_t i = 0;
  for (const auto& [pid, a] : pre.assignments()) {
    (void)a;
    const std::size_t lvl = index[i++];
    if (post_participants.count(pid)) ++out.completers[lvl];
    else ++out.non_completers[lvl];
  }
  return out;
}

std::array<std::array<long, 2>, 2> AttritionTable::as_2x2(std::size_t level) const {
  long comp_rest = 0, non_rest = 0;
  for (std::size_t i = 0; i < level_names.size(); ++i) {
    if (i == level) continue;
    comp_rest += completers[i];
    non_rest += non_completers[i];
  }
  return {{{completers[level], comp_rest}, {non_completers[level], non_rest}}};
}

}  // namespace trialfit
