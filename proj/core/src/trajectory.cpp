#include "trialfit/trajectory.hpp"

#include <algorithm>
#include <cmath>

#include "trialfit/errors.hpp"
#include "trialfit/stats.hpp"

namespace trialfit {

const char* to_string(Profile p) {
  switch (p) {
    case Profile::DecoupledDependency: return "decoupled_dependency";
    case Profile::DecoupledSatiation: return "decoupled_satiation";
    case Profile::AlignedEngagement: return "aligned_engagement";
    case Profile::AlignedDisengagement: return "aligned_disengagement";
  }
  return "?";
}

Profile classify_slopes(double liking, double wanting, TieRule tie) {
  if (tie == TieRule::ZeroIncreasing) {
    if (liking < 0 && wanting >= 0) return Profile::DecoupledDependency;
    if (liking >= 0 && wanting < 0) return Profile::DecoupledSatiation;
    if (liking >= 0 && wanting >= 0) return Profile::AlignedEngagement;
    return Profile::AlignedDisengagement;
  }
  if (liking < 0 && wanting > 0) return Profile::DecoupledDependency;
  if (liking > 0 && wanting < 0) return Profile::DecoupledSatiation;
  if (liking > 0 && wanting > 0) return Profile::AlignedEngagement;
  return Profile::AlignedDisengagement;
}

ClassifyResult classify_profiles(const std::map<std::string, double>& liking,
                                 const std::map<std::string, double>& wanting, TieRule tie) {
  ClassifyResult out;
  for (const auto& [pid, lk] : liking) {
    auto it = wanting.find(pid);
    if (it == wanting.end()) {
      ++out.dropped;
      continue;
    }
    TrajectoryProfile t;
    t.participant = pid;
    t.liking_slope = lk;
    t.wanting_slope = it->second;
    t.profile = classify_slopes(lk, it->second, tie);
    t.decoupling_score = it->second - lk;
    out.profiles.push_back(std::move(t));
  }
  for (const auto& [pid, w] : wanting) {
    (void)w;
    if (!liking.count(pid)) ++out.dropped;
  }
  if (out.profiles.empty())
    fail(errc::empty_overlap, "liking and wanting slopes share no participants");
  return out;
}

ProportionTestResult proportion_test_one_sided(Counts exposed, Counts control,
                                               Direction direction, bool pooled) {
  if (exposed.n < 1 || control.n < 1)
    fail(errc::value_out_of_range, "each arm needs n >= 1");
  if (exposed.k < 0 || control.k < 0 || exposed.k > exposed.n || control.k > control.n)
    fail(errc::value_out_of_range, "need 0 <= k <= n in each arm");

  ProportionTestResult r;
  const double pe = double(exposed.k) / double(exposed.n);
  const double pc = double(control.k) / double(control.n);
  r.risk_exposed = pe;
  r.risk_control = pc;

  // z test
  double se = 0.0;
  if (pooled) {
    const double pbar = double(exposed.k + control.k) / double(exposed.n + control.n);
    se = std::sqrt(pbar * (1.0 - pbar) * (1.0 / exposed.n + 1.0 / control.n));
  } else {
    se = std::sqrt(pe * (1.0 - pe) / exposed.n + pc * (1.0 - pc) / control.n);
  }
  r.z = se > 0 ? (pe - pc) / se : 0.0;
  r.p = direction == Direction::Greater ? stats::norm_sf(r.z) : stats::norm_cdf(r.z);

  // odds ratio with Haldane continuity correction on zero cells
  double a = double(exposed.k), b = double(exposed.n - exposed.k);
  double c = double(control.k), d = double(control.n - control.k);
  if (a == 0 || b == 0 || c == 0 || d == 0) {
    a += 0.5;
    b += 0.5;
    c += 0.5;
    d += 0.5;
    r.continuity_corrected = true;
  }
  r.odds_ratio = (a * d) / (b * c);
  const double se_log = std::sqrt(1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d);
  r.or_lo = std::exp(std::log(r.odds_ratio) - 1.96 * se_log);
  r.or_hi = std::exp(std::log(r.odds_ratio) + 1.96 * se_log);

  // NNH from integer cross products so exact-risk arms give exact values
  const double diff_num = double(exposed.k) * double(control.n) -
                          double(control.k) * double(exposed.n);
  if (diff_num > 0) {
    const double nnh = double(exposed.n) * double(control.n) / diff_num;
    r.nnh = nnh;
    r.nnh_rounded = std::ceil(nnh - 1e-9);
  }
  return r;
}

TTestResult decoupling_ttest(std::span<const double> exposed, std::span<const double> control,
                             Direction direction) {
  const std::size_t n1 = exposed.size(), n2 = control.size();
  if (n1 < 2 || n2 < 2) fail(errc::value_out_of_range, "each arm needs >= 2 observations");

  auto mean_var = [](std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= double(v.size());
    double s2 = 0.0;
    for (double x : v) s2 += (x - m) * (x - m);
    s2 /= double(v.size() - 1);
    return std::pair<double, double>{m, s2};
  };
  const auto [m1, v1] = mean_var(exposed);
  const auto [m2, v2] = mean_var(control);
  if (v1 == 0.0 && v2 == 0.0)
    fail(errc::degenerate_variance, "both arms are constant; t test undefined");

  TTestResult r;
  const double se2 = v1 / double(n1) + v2 / double(n2);
  r.t = (m1 - m2) / std::sqrt(se2);
  r.df = se2 * se2 /
         (v1 * v1 / (double(n1) * n1 * (n1 - 1.0)) + v2 * v2 / (double(n2) * n2 * (n2 - 1.0)));
  r.p = direction == Direction::Greater ? stats::t_sf(r.t, r.df) : stats::t_cdf(r.t, r.df);

  const double pooled_sd =
      std::sqrt(((n1 - 1.0) * v1 + (n2 - 1.0) * v2) / (double(n1) + double(n2) - 2.0));
  r.cohens_d = pooled_sd > 0 ? (m1 - m2) / pooled_sd : 0.0;
  return r;
}

}  // namespace trialfit
