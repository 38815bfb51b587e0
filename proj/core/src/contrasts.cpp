#include "trialfit/contrasts.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "trialfit/csv.hpp"
#include "trialfit/errors.hpp"
#include "trialfit/rng.hpp"
#include "trialfit/stats.hpp"

namespace trialfit {

Eigen::VectorXd LinearPredictor::design_row(const Env& e) const {
  Eigen::VectorXd x(static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j)
    x(static_cast<Eigen::Index>(j)) = columns[j](e);
  return x;
}

LinearPredictor LinearPredictor::from(const DesignMatrix& d, const FittedFixedModel& m) {
  return {d.columns, m.beta, m.cov, m.family, d.factor_levels};
}

LinearPredictor LinearPredictor::from(const DesignMatrix& d, const FittedMixedModel& m) {
  return {d.columns, m.beta, m.cov_beta, ModelSpec::Family::Gaussian, d.factor_levels};
}

// ---------------------------------------------------------------------------
// Reference grids
// ---------------------------------------------------------------------------

ReferenceGrid ReferenceGrid::from_design(const DesignMatrix& d, const ObservationTable& table,
                                         const std::string& outcome) {
  ReferenceGrid g = from_design(d);
  std::set<double> lambdas;
  for (const auto& [pid, a] : table.assignments()) {
    (void)pid;
    lambdas.insert(a.lambda);
  }
  g.lambda_levels.assign(lambdas.begin(), lambdas.end());
  const auto times = table.observed_times(outcome);
  g.time_points.assign(times.begin(), times.end());
  return g;
}

ReferenceGrid ReferenceGrid::from_design(const DesignMatrix& d) {
  ReferenceGrid g;
  auto levels_of = [&](const std::string& f) -> std::vector<std::string> {
    auto it = d.factor_levels.find(f);
    return it == d.factor_levels.end() ? std::vector<std::string>{} : it->second;
  };
  g.domain_levels = levels_of("domain");
  g.personalised_levels = levels_of("personalised");
  g.item_levels = levels_of("item");
  g.covariate_values["baseline"] = d.baseline_mean;

  std::set<double> times(d.row_time.begin(), d.row_time.end());
  g.time_points.assign(times.begin(), times.end());
  g.lambda_levels.assign(kLambdaLevels.begin(), kLambdaLevels.end());
  return g;
}

// ---------------------------------------------------------------------------
// Grid expansion
// ---------------------------------------------------------------------------

namespace {

struct Dimension {
  std::string name;                  // lambda | domain | personalised | item | time
  std::vector<std::string> levels;   // formatted
  std::vector<double> weights;       // sum to 1
};

std::vector<double> equal_weights(std::size_t k) {
  return std::vector<double>(k, k ? 1.0 / static_cast<double>(k) : 0.0);
}

void check_levels(const std::string& factor, const std::vector<std::string>& requested,
                  const FactorLevels& known) {
  auto it = known.find(factor);
  if (it == known.end()) return;  // factor not in the model: any level predicts the same
  for (const auto& l : requested)
    if (std::find(it->second.begin(), it->second.end(), l) == it->second.end())
      fail(errc::grid_outside_design,
           "level '" + l + "' of '" + factor + "' is not in the fitted design");
}

std::vector<Dimension> grid_dimensions(const ReferenceGrid& g, const LinearPredictor& lp) {
  std::vector<Dimension> dims;
  auto weights_for = [&](const std::string& factor,
                         const std::vector<std::string>& levels) -> std::vector<double> {
    if (!g.observed_weights) return equal_weights(levels.size());
    auto it = g.observed_freq.find(factor);
    if (it == g.observed_freq.end()) return equal_weights(levels.size());
    std::vector<double> w;
    double total = 0.0;
    for (const auto& l : levels) {
      auto jt = it->second.find(l);
      const double v = jt == it->second.end() ? 0.0 : jt->second;
      w.push_back(v);
      total += v;
    }
    if (total <= 0) return equal_weights(levels.size());
    for (auto& v : w) v /= total;
    return w;
  };

  if (!g.lambda_levels.empty()) {
    Dimension d;
    d.name = "lambda";
    for (double l : g.lambda_levels) d.levels.push_back(csv::format_double(l));
    d.weights = weights_for("lambda", d.levels);
    dims.push_back(std::move(d));
  }
  if (!g.domain_levels.empty()) {
    check_levels("domain", g.domain_levels, lp.factor_levels);
    dims.push_back({"domain", g.domain_levels, weights_for("domain", g.domain_levels)});
  }
  if (!g.personalised_levels.empty()) {
    check_levels("personalised", g.personalised_levels, lp.factor_levels);
    dims.push_back({"personalised", g.personalised_levels,
                    weights_for("personalised", g.personalised_levels)});
  }
  if (!g.item_levels.empty()) {
    check_levels("item", g.item_levels, lp.factor_levels);
    dims.push_back({"item", g.item_levels, weights_for("item", g.item_levels)});
  }
  if (!g.time_points.empty()) {
    Dimension d;
    d.name = "time";
    for (double t : g.time_points) d.levels.push_back(csv::format_double(t));
    d.weights = weights_for("time", d.levels);
    dims.push_back(std::move(d));
  }
  return dims;
}

Env base_env(const ReferenceGrid& g) {
  Env e;
  for (const auto& [k, v] : g.covariate_values) {
    if (k == "baseline") e.baseline = v;
    else e.numeric[k] = v;
  }
  for (const auto& [k, v] : g.categorical_values) e.categorical[k] = v;
  return e;
}

void apply_level(Env& e, const std::string& dim, const std::string& level) {
  if (dim == "lambda") e.lambda = csv::parse_double(level, "grid lambda");
  else if (dim == "domain") e.domain = level;
  else if (dim == "personalised") e.personalised = level;
  else if (dim == "item") e.item = level;
  else if (dim == "time") e.time = csv::parse_double(level, "grid time");
}

}  // namespace

std::vector<GridCell> expand_grid(const ReferenceGrid& grid, const LinearPredictor& lp) {
  const auto dims = grid_dimensions(grid, lp);
  std::vector<GridCell> cells;
  std::vector<std::size_t> idx(dims.size(), 0);
  while (true) {
    GridCell cell;
    cell.env = base_env(grid);
    cell.weight = 1.0;
    for (std::size_t d = 0; d < dims.size(); ++d) {
      apply_level(cell.env, dims[d].name, dims[d].levels[idx[d]]);
      cell.weight *= dims[d].weights[idx[d]];
    }
    cells.push_back(std::move(cell));
    std::size_t d = 0;
    for (; d < dims.size(); ++d) {
      if (++idx[d] < dims[d].levels.size()) break;
      idx[d] = 0;
    }
    if (d == dims.size()) break;
  }
  return cells;
}

// ---------------------------------------------------------------------------
// EMMs
// ---------------------------------------------------------------------------

namespace {

std::string cell_key(const Env& e, const std::vector<std::string>& by) {
  std::string key;
  for (const auto& b : by) {
    key += '|';
    if (b == "lambda") key += csv::format_double(e.lambda);
    else if (b == "domain") key += e.domain;
    else if (b == "personalised") key += e.personalised;
    else if (b == "item") key += e.item;
    else if (b == "time") key += csv::format_double(e.time);
    else fail(errc::invalid_config, "unknown grid variable '" + b + "'");
  }
  return key;
}

}  // namespace

std::vector<EmmRow> emm(const LinearPredictor& lp, const ReferenceGrid& grid,
                        const std::vector<std::string>& by) {
  const auto cells = expand_grid(grid, lp);
  if (cells.empty()) fail(errc::invalid_config, "empty reference grid");

  // group cells by the displayed levels, renormalising weights per group
  struct Group {
    Eigen::VectorXd c;
    double weight = 0.0;
    std::map<std::string, std::string> at;
  };
  std::map<std::string, Group> groups;
  std::vector<std::string> order;
  for (const auto& cell : cells) {
    const std::string key = cell_key(cell.env, by);
    auto [it, inserted] = groups.try_emplace(key);
    Group& g = it->second;
    if (inserted) {
      g.c = Eigen::VectorXd::Zero(lp.beta.size());
      order.push_back(key);
      for (const auto& b : by) {
        if (b == "lambda") g.at[b] = csv::format_double(cell.env.lambda);
        else if (b == "domain") g.at[b] = cell.env.domain;
        else if (b == "personalised") g.at[b] = cell.env.personalised;
        else if (b == "item") g.at[b] = cell.env.item;
        else if (b == "time") g.at[b] = csv::format_double(cell.env.time);
      }
    }
    g.c += cell.weight * lp.design_row(cell.env);
    g.weight += cell.weight;
  }

  std::vector<EmmRow> rows;
  for (const auto& key : order) {
    Group& g = groups[key];
    if (g.weight <= 0) continue;
    const Eigen::VectorXd c = g.c / g.weight;
    EmmRow r;
    r.at = g.at;
    r.emm = c.dot(lp.beta);
    r.se = std::sqrt(std::max(0.0, double(c.transpose() * lp.cov * c)));
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Paired contrasts
// ---------------------------------------------------------------------------

namespace {

Eigen::VectorXd split_vector(const LinearPredictor& lp, const ReferenceGrid& grid,
                             const std::string& variable,
                             const std::vector<std::string>& split) {
  ReferenceGrid g = grid;
  if (variable == "lambda") {
    g.lambda_levels.clear();
    for (const auto& s : split) g.lambda_levels.push_back(csv::parse_double(s, "split level"));
  } else if (variable == "domain") {
    g.domain_levels = split;
  } else if (variable == "personalised") {
    g.personalised_levels = split;
  } else if (variable == "item") {
    g.item_levels = split;
  } else {
    fail(errc::invalid_config, "paired_contrast over unknown variable '" + variable + "'");
  }
  const auto cells = expand_grid(g, lp);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(lp.beta.size());
  double total = 0.0;
  for (const auto& cell : cells) {
    c += cell.weight * lp.design_row(cell.env);
    total += cell.weight;
  }
  if (total <= 0) fail(errc::grid_outside_design, "empty split for '" + variable + "'");
  return c / total;
}

}  // namespace

ContrastResult paired_contrast(const LinearPredictor& lp, const ReferenceGrid& grid,
                               const std::string& variable,
                               const std::vector<std::string>& split_a,
                               const std::vector<std::string>& split_b,
                               const std::string& name) {
  for (const auto& a : split_a)
    if (std::find(split_b.begin(), split_b.end(), a) != split_b.end())
      fail(errc::invalid_config, "split sides overlap at '" + a + "'");

  const Eigen::VectorXd c =
      split_vector(lp, grid, variable, split_a) - split_vector(lp, grid, variable, split_b);

  ContrastResult r;
  r.name = name.empty() ? variable + " contrast" : name;
  r.estimate = c.dot(lp.beta);
  r.se = std::sqrt(std::max(0.0, double(c.transpose() * lp.cov * c)));
  r.ci_lo = r.estimate - 1.96 * r.se;
  r.ci_hi = r.estimate + 1.96 * r.se;
  r.z = r.se > 0 ? r.estimate / r.se : 0.0;
  r.p_raw = r.se > 0 ? stats::wald_p(r.z) : 1.0;
  if (lp.family == ModelSpec::Family::Binomial) {
    r.odds_ratio = std::exp(r.estimate);
    r.or_lo = std::exp(r.ci_lo);
    r.or_hi = std::exp(r.ci_hi);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Condition slopes
// ---------------------------------------------------------------------------

std::vector<SlopeResult> condition_slopes(const LinearPredictor& lp,
                                          const std::vector<Condition>& conditions) {
  const bool has_time =
      std::any_of(lp.columns.begin(), lp.columns.end(), [](const Column& c) { return c.uses_time(); });
  if (!has_time) fail(errc::no_time_term, "model has no time term");

  std::vector<SlopeResult> out;
  for (const auto& cond : conditions) {
    const auto cells = expand_grid(cond.grid, lp);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(lp.beta.size());
    double total = 0.0;
    for (const auto& cell : cells) {
      // d/dt via a unit time step: exact because time enters linearly
      Env e0 = cell.env;
      Env e1 = cell.env;
      e1.time = e0.time + 1.0;
      c += cell.weight * (lp.design_row(e1) - lp.design_row(e0));
      total += cell.weight;
    }
    if (total <= 0) fail(errc::grid_outside_design, "empty grid for condition " + cond.name);
    c /= total;

    SlopeResult r;
    r.condition = cond.name;
    r.slope = c.dot(lp.beta);
    r.se = std::sqrt(std::max(0.0, double(c.transpose() * lp.cov * c)));
    r.z = r.se > 0 ? r.slope / r.se : 0.0;
    r.p_raw = r.se > 0 ? stats::wald_p(r.z) : 1.0;
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lambda equivalence
// ---------------------------------------------------------------------------

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// piecewise-linear inverse of the curve at `score`; clamps to the endpoints
double invert_curve(const std::vector<SteeringCurvePoint>& curve, double score, bool increasing,
                    bool* clamped) {
  const double lo_score = increasing ? curve.front().score : curve.back().score;
  const double hi_score = increasing ? curve.back().score : curve.front().score;
  if (score <= lo_score) {
    if (score < lo_score && clamped) *clamped = true;
    return increasing ? curve.front().lambda : curve.back().lambda;
  }
  if (score >= hi_score) {
    if (score > hi_score && clamped) *clamped = true;
    return increasing ? curve.back().lambda : curve.front().lambda;
  }
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const double s0 = curve[i - 1].score, s1 = curve[i].score;
    const bool inside = increasing ? (score >= s0 && score <= s1) : (score <= s0 && score >= s1);
    if (inside) {
      const double frac = s1 == s0 ? 0.0 : (score - s0) / (s1 - s0);
      return curve[i - 1].lambda + frac * (curve[i].lambda - curve[i - 1].lambda);
    }
  }
  return curve.back().lambda;
}

}  // namespace

LambdaEquivalence lambda_equivalence(const std::vector<double>& frontier_scores,
                                     std::vector<SteeringCurvePoint> steering_curve,
                                     int bootstrap, std::uint64_t seed) {
  if (frontier_scores.empty())
    fail(errc::invalid_config, "lambda_equivalence needs at least one model score");
  if (steering_curve.size() < 2)
    fail(errc::invalid_config, "steering curve needs at least two points");
  std::sort(steering_curve.begin(), steering_curve.end(),
            [](const SteeringCurvePoint& a, const SteeringCurvePoint& b) {
              return a.lambda < b.lambda;
            });
  bool increasing = steering_curve.back().score > steering_curve.front().score;
  for (std::size_t i = 1; i < steering_curve.size(); ++i) {
    const double d = steering_curve[i].score - steering_curve[i - 1].score;
    if ((increasing && d <= 0) || (!increasing && d >= 0))
      fail(errc::non_monotone_curve, "steering curve is not strictly monotone in lambda");
  }

  LambdaEquivalence out;
  out.lambda_hat =
      invert_curve(steering_curve, median_of(frontier_scores), increasing, &out.clamped);

  const std::size_t n = frontier_scores.size();
  if (n == 1 || bootstrap <= 0) {
    out.ci_lo = out.ci_hi = out.lambda_hat;
    return out;
  }
  std::vector<double> boot(static_cast<std::size_t>(bootstrap));
  for (int b = 0; b < bootstrap; ++b) {
    Rng rng(Rng::derive(seed, {0x6C, static_cast<std::uint64_t>(b)}));
    std::vector<double> resample(n);
    for (std::size_t i = 0; i < n; ++i)
      resample[i] = frontier_scores[rng.uniform_int(n)];
    boot[static_cast<std::size_t>(b)] =
        invert_curve(steering_curve, median_of(resample), increasing, nullptr);
  }
  std::sort(boot.begin(), boot.end());
  auto pct = [&](double q) {
    const double pos = q * (boot.size() - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    const double frac = pos - i;
    return i + 1 < boot.size() ? boot[i] * (1 - frac) + boot[i + 1] * frac : boot.back();
  };
  out.ci_lo = pct(0.025);
  out.ci_hi = pct(0.975);
  return out;
}

}  // namespace trialfit
