#include "trialfit/multiplicity.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "trialfit/errors.hpp"

namespace trialfit {

std::vector<double> bh_adjust(const std::vector<double>& p) {
  const std::size_t m = p.size();
  for (double v : p)
    if (!(v >= 0.0 && v <= 1.0)) fail(errc::invalid_p, "p-values must lie in [0,1]");
  if (m == 0) return {};

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });

  std::vector<double> adj(m);
  double running = 1.0;
  for (std::size_t k = m; k-- > 0;) {
    const double scaled = p[order[k]] * static_cast<double>(m) / static_cast<double>(k + 1);
    running = std::min(running, scaled);
    adj[order[k]] = running;
  }
  return adj;
}

const char* to_string(Tier t) {
  switch (t) {
    case Tier::Primary: return "primary";
    case Tier::Robustness: return "robustness";
    case Tier::Descriptive: return "descriptive";
  }
  return "?";
}

Tier tier_from_string(const std::string& s) {
  if (s == "primary") return Tier::Primary;
  if (s == "robustness") return Tier::Robustness;
  if (s == "descriptive") return Tier::Descriptive;
  fail(errc::invalid_config, "unknown tier '" + s + "'");
}

namespace {

void check_unique_ids(const std::vector<HypothesisFamily>& families) {
  std::set<std::string> seen;
  for (const auto& f : families)
    for (const auto& t : f.tests)
      if (!seen.insert(t.id).second)
        fail(errc::duplicate_test_id, "test '" + t.id + "' appears in more than one scope");
}

std::vector<AdjustedTest> adjust_scope(const HypothesisFamily& f, const std::string& scope) {
  std::vector<double> raw;
  raw.reserve(f.tests.size());
  for (const auto& t : f.tests) raw.push_back(t.p_raw);
  const auto adj = bh_adjust(raw);
  std::vector<AdjustedTest> out;
  for (std::size_t i = 0; i < f.tests.size(); ++i)
    out.push_back({f.id, f.tests[i].id, f.tier, f.tests[i].p_raw, adj[i], scope});
  return out;
}

}  // namespace

std::vector<AdjustedTest> apply_hierarchy(const std::vector<HypothesisFamily>& families) {
  check_unique_ids(families);
  std::vector<AdjustedTest> out;
  for (const auto& f : families) {
    const std::string scope = f.tier == Tier::Primary
                                  ? "family:" + f.id
                                  : std::string(to_string(f.tier)) + ":" + f.id;
    for (auto& t : adjust_scope(f, scope)) out.push_back(std::move(t));
  }
  return out;
}

std::vector<AdjustedTest> apply_global(const std::vector<HypothesisFamily>& families) {
  check_unique_ids(families);
  std::vector<double> raw;
  std::vector<AdjustedTest> out;
  for (const auto& f : families)
    for (const auto& t : f.tests) {
      raw.push_back(t.p_raw);
      out.push_back({f.id, t.id, f.tier, t.p_raw, 1.0, "global"});
    }
  const auto adj = bh_adjust(raw);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].p_adj = adj[i];
  return out;
}

}  // namespace trialfit
