#ifndef TRIALFIT_TRAJECTORY_HPP
#define TRIALFIT_TRAJECTORY_HPP

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace trialfit {

enum class Profile {
  DecoupledDependency,   // liking down, wanting up
  DecoupledSatiation,    // liking up, wanting down
  AlignedEngagement,     // both up
  AlignedDisengagement,  // everything else
};

const char* to_string(Profile p);

struct TrajectoryProfile {
  std::string participant;
  double liking_slope = 0.0;   // per session
  double wanting_slope = 0.0;  // per week
  Profile profile = Profile::AlignedDisengagement;
  double decoupling_score = 0.0;  // wanting slope minus liking slope
};

// A slope of exactly zero counts as "not increasing" by default; the
// alternative rule treats zero as increasing.
enum class TieRule { ZeroNotIncreasing, ZeroIncreasing };

Profile classify_slopes(double liking, double wanting,
                        TieRule tie = TieRule::ZeroNotIncreasing);

struct ClassifyResult {
  std::vector<TrajectoryProfile> profiles;  // sorted by participant
  int dropped = 0;                          // ids present in only one map
};

ClassifyResult classify_profiles(const std::map<std::string, double>& liking,
                                 const std::map<std::string, double>& wanting,
                                 TieRule tie = TieRule::ZeroNotIncreasing);

struct Counts {
  long k = 0;  // events
  long n = 0;  // trials
};

enum class Direction { Greater, Less };

struct ProportionTestResult {
  double z = 0.0;
  double p = 1.0;  // one-sided
  double odds_ratio = 1.0;
  double or_lo = 0.0, or_hi = 0.0;      // Wald 95% CI on the log-odds scale
  std::optional<double> nnh;            // absent when the risk difference is not positive
  std::optional<double> nnh_rounded;    // ceiling-rounded presentation value
  bool continuity_corrected = false;    // +0.5 applied to a zero cell
  double risk_exposed = 0.0, risk_control = 0.0;
};

// Two-proportion z test (pooled variance) with odds ratio and NNH.
// Direction::Greater tests H1: risk_exposed > risk_control.
ProportionTestResult proportion_test_one_sided(Counts exposed, Counts control,
                                               Direction direction = Direction::Greater,
                                               bool pooled = true);

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;  // one-sided
  double cohens_d = 0.0;
};

// Welch one-sided t test of exposed vs control decoupling scores; Cohen's d
// uses the pooled SD.
TTestResult decoupling_ttest(std::span<const double> exposed, std::span<const double> control,
                             Direction direction = Direction::Greater);

}  // namespace trialfit

#endif
