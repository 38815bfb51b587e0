#ifndef TRIALFIT_DESIGN_HPP
#define TRIALFIT_DESIGN_HPP

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "trialfit/data.hpp"

namespace trialfit {

// ---------------------------------------------------------------------------
// Model terms
// ---------------------------------------------------------------------------

struct FixedTerm {
  enum class Kind { Intercept, PolyDose, Factor, Covariate, Interaction, TimeLinear };

  Kind kind = Kind::Intercept;
  int poly_order = 1;                // PolyDose, 1..3
  std::string name;                  // Factor / Covariate
  std::string reference;             // Factor reference level; empty = default
  std::vector<FixedTerm> parts;      // Interaction

  static FixedTerm intercept() { return {Kind::Intercept, 1, {}, {}, {}}; }
  static FixedTerm poly_dose(int order) { return {Kind::PolyDose, order, {}, {}, {}}; }
  static FixedTerm factor(std::string name, std::string reference = "") {
    return {Kind::Factor, 1, std::move(name), std::move(reference), {}};
  }
  static FixedTerm covariate(std::string name) {
    return {Kind::Covariate, 1, std::move(name), {}, {}};
  }
  static FixedTerm time_linear() { return {Kind::TimeLinear, 1, {}, {}, {}}; }
  static FixedTerm interaction(std::vector<FixedTerm> parts) {
    return {Kind::Interaction, 1, {}, {}, std::move(parts)};
  }

  std::string describe() const;
};

struct RandomSpec {
  enum class Structure { IndependentComponents, IntSlopeCorrelated };

  std::string grouping;       // e.g. participant, model, prompt
  bool intercept = true;
  bool time_slope = false;
  Structure structure = Structure::IntSlopeCorrelated;
};

struct ModelSpec {
  enum class Family { Gaussian, Binomial };

  std::string outcome;
  std::vector<FixedTerm> fixed;
  std::vector<RandomSpec> random;
  Family family = Family::Gaussian;
  bool baseline_covariate = false;

  void validate() const;  // Binomial forbids random effects, PolyDose order <= 3, ...
};

// ---------------------------------------------------------------------------
// Evaluation environment: variable values at one prediction point
// ---------------------------------------------------------------------------

struct Env {
  double lambda = 0.0;
  double time = 0.0;
  std::string domain = "Political";
  std::string personalised = "false";
  std::string item;
  double baseline = 0.0;
  std::map<std::string, double> numeric;        // participant covariates
  std::map<std::string, std::string> categorical;

  double number(const std::string& name) const;
  const std::string& category(const std::string& name) const;
};

// ---------------------------------------------------------------------------
// Expanded columns and the realised design
// ---------------------------------------------------------------------------

// One design column: a label plus an evaluator over Env. Factors expand to
// (levels-1) dummy columns against the reference level.
class Column {
 public:
  using Eval = std::function<double(const Env&)>;
  Column(std::string label, Eval eval, bool uses_time)
      : label_(std::move(label)), eval_(std::move(eval)), uses_time_(uses_time) {}

  const std::string& label() const { return label_; }
  double operator()(const Env& e) const { return eval_(e); }
  bool uses_time() const { return uses_time_; }

 private:
  std::string label_;
  Eval eval_;
  bool uses_time_;
};

// Observed level sets of the factors referenced by a model, in declaration
// order with the reference level first.
using FactorLevels = std::map<std::string, std::vector<std::string>>;

struct RandomBlock {
  std::string grouping;
  std::vector<std::string> level_names;
  Eigen::VectorXi level_of_row;  // n, index into level_names
  Eigen::VectorXd time_of_row;   // n, slope covariate (unused when !time_slope)
  bool intercept = true;
  bool time_slope = false;
  RandomSpec::Structure structure = RandomSpec::Structure::IntSlopeCorrelated;

  int n_levels() const { return static_cast<int>(level_names.size()); }
  int q() const { return (intercept ? 1 : 0) + (time_slope ? 1 : 0); }
};

struct DesignMatrix {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<Column> columns;          // in bijection with X columns
  std::vector<std::string> dropped;     // labels of aliased columns
  std::vector<RandomBlock> random_blocks;
  FactorLevels factor_levels;           // levels observed while building
  std::vector<std::string> row_participant;
  std::vector<double> row_time;
  double baseline_mean = 0.0;           // mean of the baseline covariate, for grids

  std::vector<std::string> labels() const;
};

// Builds the numeric design for `spec` on `table`. Aliased columns are
// dropped (reported in `dropped`); an unresolvable collinearity among the
// remaining columns is an error.
DesignMatrix build_design(const ModelSpec& spec, const ObservationTable& table);

// Env for one observation row.
Env env_for(const Observation& o, const ObservationTable& table);

// 1 iff lambda > 0 and domain is Emotional.
int companionship_indicator(const TreatmentAssignment& a);

// ---------------------------------------------------------------------------
// Formula strings
// ---------------------------------------------------------------------------
//
//   value ~ poly(lambda,3) + personalised + domain + time + lambda:time
//         + (1 + time | participant)
//
// `||` requests independent components; two `(1|g)` terms give crossed
// intercepts. Bare names resolve to Factor or Covariate statically:
// domain/personalised/item plus any name in `categorical` are factors,
// everything else is numeric.
ModelSpec parse_formula(const std::string& formula, const std::string& outcome,
                        ModelSpec::Family family = ModelSpec::Family::Gaussian,
                        const std::vector<std::string>& categorical = {});

std::string format_formula(const ModelSpec& spec);

}  // namespace trialfit

#endif
