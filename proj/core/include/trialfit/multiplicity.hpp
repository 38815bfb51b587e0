#ifndef TRIALFIT_MULTIPLICITY_HPP
#define TRIALFIT_MULTIPLICITY_HPP

#include <string>
#include <vector>

namespace trialfit {

// Benjamini-Hochberg step-up adjustment:
//   p_adj(i) = min over j with rank(j) >= rank(i) of m * p(j) / rank(j),
// clamped at 1. Rejections at level alpha under p_adj <= alpha coincide with
// the classical step-up rule.
std::vector<double> bh_adjust(const std::vector<double>& p);

enum class Tier { Primary, Robustness, Descriptive };

const char* to_string(Tier t);
Tier tier_from_string(const std::string& s);

struct HypothesisTest {
  std::string id;
  double p_raw = 1.0;
};

struct HypothesisFamily {
  std::string id;
  Tier tier = Tier::Primary;
  std::vector<HypothesisTest> tests;
};

struct AdjustedTest {
  std::string family_id;
  std::string test_id;
  Tier tier = Tier::Primary;
  double p_raw = 1.0;
  double p_adj = 1.0;
  std::string scope;  // which set of tests the adjustment ran over
};

// Hierarchical FDR: Primary families are adjusted family-wide; Robustness
// and Descriptive families are adjusted only within their own test group.
// Every returned p carries its adjustment scope.
std::vector<AdjustedTest> apply_hierarchy(const std::vector<HypothesisFamily>& families);

// Single BH pass over every test of the given families regardless of tier
// (the global-scope correction used for sociodemographic sweeps).
std::vector<AdjustedTest> apply_global(const std::vector<HypothesisFamily>& families);

}  // namespace trialfit

#endif
