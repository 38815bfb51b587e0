#include "trialfit/design.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "trialfit/csv.hpp"
#include "trialfit/errors.hpp"

namespace trialfit {

// ---------------------------------------------------------------------------
// Terms
// ---------------------------------------------------------------------------

std::string FixedTerm::describe() const {
  switch (kind) {
    case Kind::Intercept: return "1";
    case Kind::PolyDose: return "poly(lambda," + std::to_string(poly_order) + ")";
    case Kind::Factor: return name;
    case Kind::Covariate: return name;
    case Kind::TimeLinear: return "time";
    case Kind::Interaction: {
      std::string out;
      for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += ':';
        out += parts[i].describe();
      }
      return out;
    }
  }
  return "?";
}

void ModelSpec::validate() const {
  if (family == Family::Binomial && !random.empty())
    fail(errc::invalid_config, "binomial models are fixed-effects only");
  for (const auto& t : fixed) {
    if (t.kind == FixedTerm::Kind::PolyDose && (t.poly_order < 1 || t.poly_order > 3))
      fail(errc::invalid_config, "poly(lambda,k) requires 1 <= k <= 3");
    if (t.kind == FixedTerm::Kind::Interaction) {
      if (t.parts.size() < 2)
        fail(errc::invalid_config, "interaction needs at least two terms");
      std::set<std::string> seen;
      for (const auto& p : t.parts) {
        if (p.kind == FixedTerm::Kind::Intercept || p.kind == FixedTerm::Kind::Interaction)
          fail(errc::invalid_config, "invalid interaction component '" + p.describe() + "'");
        if (!seen.insert(p.describe()).second)
          fail(errc::invalid_config, "duplicate base term in interaction '" + t.describe() + "'");
      }
    }
  }
  if (random.size() >= 2) {
    for (const auto& r : random)
      if (r.time_slope)
        fail(errc::invalid_config, "crossed random effects are intercept-only");
  }
}

// ---------------------------------------------------------------------------
// Env
// ---------------------------------------------------------------------------

double Env::number(const std::string& n) const {
  if (n == "lambda") return lambda;
  if (n == "time") return time;
  if (n == "baseline") return baseline;
  auto it = numeric.find(n);
  if (it == numeric.end()) fail(errc::unknown_variable, "numeric variable '" + n + "'");
  return it->second;
}

const std::string& Env::category(const std::string& n) const {
  if (n == "domain") return domain;
  if (n == "personalised") return personalised;
  if (n == "item") return item;
  auto it = categorical.find(n);
  if (it == categorical.end()) fail(errc::unknown_variable, "categorical variable '" + n + "'");
  return it->second;
}

Env env_for(const Observation& o, const ObservationTable& table) {
  Env e;
  const TreatmentAssignment& a = table.assignment(o.participant);
  e.lambda = a.lambda;
  e.domain = to_string(a.domain);
  e.personalised = a.personalised ? "true" : "false";
  e.time = static_cast<double>(o.time);
  e.item = o.item;
  if (o.baseline) e.baseline = *o.baseline;
  auto cov = table.covariates().find(o.participant);
  if (cov != table.covariates().end()) {
    e.numeric = cov->second.numeric;
    e.categorical = cov->second.categorical;
  }
  return e;
}

int companionship_indicator(const TreatmentAssignment& a) {
  return (a.lambda > 0.0 && a.domain == Domain::Emotional) ? 1 : 0;
}

// ---------------------------------------------------------------------------
// Column expansion
// ---------------------------------------------------------------------------

namespace {

std::string default_reference(const std::string& factor) {
  if (factor == "domain") return "Political";
  if (factor == "personalised") return "false";
  return "";  // first observed level
}

// Observed levels with the reference first.
std::vector<std::string> order_levels(std::set<std::string> observed, std::string reference,
                                      const std::string& factor) {
  if (observed.size() < 2)
    fail(errc::empty_factor_level,
         "factor '" + factor + "' has " + std::to_string(observed.size()) + " observed level(s)");
  if (reference.empty()) reference = default_reference(factor);
  if (reference.empty() || !observed.count(reference)) {
    if (!reference.empty() && !observed.count(reference) && !default_reference(factor).empty() &&
        observed.count(default_reference(factor))) {
      reference = default_reference(factor);
    } else {
      reference = *observed.begin();
    }
  }
  std::vector<std::string> out = {reference};
  for (const auto& l : observed)
    if (l != reference) out.push_back(l);
  return out;
}

void collect_factor_levels(const FixedTerm& t, const std::vector<Env>& envs,
                           FactorLevels& levels) {
  if (t.kind == FixedTerm::Kind::Factor) {
    if (levels.count(t.name)) return;
    std::set<std::string> observed;
    for (const auto& e : envs) observed.insert(e.category(t.name));
    levels[t.name] = order_levels(std::move(observed), t.reference, t.name);
  } else if (t.kind == FixedTerm::Kind::Interaction) {
    for (const auto& p : t.parts) collect_factor_levels(p, envs, levels);
  }
}

std::vector<Column> expand_term(const FixedTerm& t, const FactorLevels& levels) {
  using Kind = FixedTerm::Kind;
  switch (t.kind) {
    case Kind::Intercept:
      return {Column("(Intercept)", [](const Env&) { return 1.0; }, false)};
    case Kind::PolyDose: {
      std::vector<Column> out;
      for (int k = 1; k <= t.poly_order; ++k) {
        std::string label = k == 1 ? "lambda" : "lambda^" + std::to_string(k);
        out.emplace_back(label,
                         [k](const Env& e) {
                           double v = 1.0;
                           for (int i = 0; i < k; ++i) v *= e.lambda;
                           return v;
                         },
                         false);
      }
      return out;
    }
    case Kind::Covariate: {
      std::string n = t.name;
      if (n == "lambda")
        return {Column("lambda", [](const Env& e) { return e.lambda; }, false)};
      return {Column(n, [n](const Env& e) { return e.number(n); }, false)};
    }
    case Kind::TimeLinear:
      return {Column("time", [](const Env& e) { return e.time; }, true)};
    case Kind::Factor: {
      auto it = levels.find(t.name);
      if (it == levels.end()) fail(errc::unknown_variable, "factor '" + t.name + "'");
      std::vector<Column> out;
      const std::string n = t.name;
      for (std::size_t k = 1; k < it->second.size(); ++k) {
        const std::string level = it->second[k];
        out.emplace_back(n + "[" + level + "]",
                         [n, level](const Env& e) { return e.category(n) == level ? 1.0 : 0.0; },
                         false);
      }
      return out;
    }
    case Kind::Interaction: {
      std::vector<std::vector<Column>> part_cols;
      for (const auto& p : t.parts) part_cols.push_back(expand_term(p, levels));
      std::vector<Column> out;
      std::vector<std::size_t> idx(part_cols.size(), 0);
      while (true) {
        std::string label;
        bool uses_time = false;
        std::vector<Column> picked;
        for (std::size_t i = 0; i < part_cols.size(); ++i) {
          const Column& c = part_cols[i][idx[i]];
          if (!label.empty()) label += ':';
          label += c.label();
          uses_time = uses_time || c.uses_time();
          picked.push_back(c);
        }
        out.emplace_back(label,
                         [picked](const Env& e) {
                           double v = 1.0;
                           for (const auto& c : picked) v *= c(e);
                           return v;
                         },
                         uses_time);
        // advance the mixed-radix counter
        std::size_t i = 0;
        for (; i < idx.size(); ++i) {
          if (++idx[i] < part_cols[i].size()) break;
          idx[i] = 0;
        }
        if (i == idx.size()) break;
      }
      return out;
    }
  }
  return {};
}

}  // namespace

// ---------------------------------------------------------------------------
// build_design
// ---------------------------------------------------------------------------

DesignMatrix build_design(const ModelSpec& spec, const ObservationTable& table) {
  spec.validate();

  auto rows = table.rows_for(spec.outcome);
  if (rows.empty()) fail(errc::unknown_variable, "no rows for outcome '" + spec.outcome + "'");

  std::vector<Env> envs;
  envs.reserve(rows.size());
  double baseline_sum = 0.0;
  std::size_t baseline_n = 0;
  for (const Observation* o : rows) {
    if (spec.baseline_covariate && !o->baseline)
      fail(errc::unknown_variable, "row for participant '" + o->participant +
                                       "' lacks the baseline covariate");
    envs.push_back(env_for(*o, table));
    if (o->baseline) {
      baseline_sum += *o->baseline;
      ++baseline_n;
    }
  }

  std::vector<FixedTerm> terms = spec.fixed;
  const bool has_intercept = std::any_of(terms.begin(), terms.end(), [](const FixedTerm& t) {
    return t.kind == FixedTerm::Kind::Intercept;
  });
  if (!has_intercept) terms.insert(terms.begin(), FixedTerm::intercept());
  if (spec.baseline_covariate) terms.push_back(FixedTerm::covariate("baseline"));

  FactorLevels levels;
  for (const auto& t : terms) collect_factor_levels(t, envs, levels);

  std::vector<Column> columns;
  for (const auto& t : terms)
    for (auto& c : expand_term(t, levels)) columns.push_back(std::move(c));

  const auto n = static_cast<Eigen::Index>(envs.size());
  Eigen::MatrixXd X(n, static_cast<Eigen::Index>(columns.size()));
  for (Eigen::Index i = 0; i < n; ++i)
    for (std::size_t j = 0; j < columns.size(); ++j)
      X(i, static_cast<Eigen::Index>(j)) = columns[j](envs[static_cast<std::size_t>(i)]);

  DesignMatrix d;

  // Drop aliased columns so the design is full rank; report what went.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  const Eigen::Index rank = qr.rank();
  if (rank < X.cols()) {
    std::vector<bool> keep(static_cast<std::size_t>(X.cols()), false);
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index i = 0; i < rank; ++i) keep[static_cast<std::size_t>(perm(i))] = true;
    Eigen::MatrixXd Xk(n, rank);
    std::vector<Column> kept;
    Eigen::Index out = 0;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      if (keep[static_cast<std::size_t>(j)]) {
        Xk.col(out++) = X.col(j);
        kept.push_back(columns[static_cast<std::size_t>(j)]);
      } else {
        d.dropped.push_back(columns[static_cast<std::size_t>(j)].label());
      }
    }
    X = std::move(Xk);
    columns = std::move(kept);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr2(X);
    qr2.setThreshold(1e-10);
    if (qr2.rank() < X.cols())
      fail(errc::rank_deficient, "design remains rank deficient after dropping aliased columns");
  }

  d.X = std::move(X);
  d.columns = std::move(columns);
  d.factor_levels = std::move(levels);
  d.y.resize(n);
  d.row_participant.reserve(envs.size());
  d.row_time.reserve(envs.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    d.y(i) = rows[static_cast<std::size_t>(i)]->value;
    d.row_participant.push_back(rows[static_cast<std::size_t>(i)]->participant);
    d.row_time.push_back(envs[static_cast<std::size_t>(i)].time);
  }
  d.baseline_mean = baseline_n ? baseline_sum / static_cast<double>(baseline_n) : 0.0;

  // Random-effect incidence structure.
  for (const auto& r : spec.random) {
    RandomBlock b;
    b.grouping = r.grouping;
    b.intercept = r.intercept;
    b.time_slope = r.time_slope;
    b.structure = r.structure;
    std::map<std::string, int> level_ids;
    b.level_of_row.resize(n);
    b.time_of_row.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Observation* o = rows[static_cast<std::size_t>(i)];
      const Env& e = envs[static_cast<std::size_t>(i)];
      std::string key;
      if (r.grouping == "participant") key = o->participant;
      else if (r.grouping == "item") key = o->item;
      else key = e.category(r.grouping);
      auto [it, inserted] = level_ids.emplace(key, static_cast<int>(b.level_names.size()));
      if (inserted) b.level_names.push_back(key);
      b.level_of_row(i) = it->second;
      b.time_of_row(i) = e.time;
    }
    d.random_blocks.push_back(std::move(b));
  }

  return d;
}

std::vector<std::string> DesignMatrix::labels() const {
  std::vector<std::string> out;
  out.reserve(columns.size());
  for (const auto& c : columns) out.push_back(c.label());
  return out;
}

// ---------------------------------------------------------------------------
// Formula parsing
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

// split on '+' outside parentheses
std::vector<std::string> split_terms(const std::string& s) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == '+' && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

bool is_factor_name(const std::string& name, const std::vector<std::string>& categorical) {
  if (name == "domain" || name == "personalised" || name == "item") return true;
  return std::find(categorical.begin(), categorical.end(), name) != categorical.end();
}

FixedTerm parse_base(const std::string& tok, const std::vector<std::string>& categorical) {
  if (tok == "1") return FixedTerm::intercept();
  if (tok.rfind("poly(", 0) == 0) {
    if (tok.back() != ')') fail(errc::invalid_config, "malformed term '" + tok + "'");
    const std::string inner = tok.substr(5, tok.size() - 6);
    const auto comma = inner.find(',');
    if (comma == std::string::npos)
      fail(errc::invalid_config, "poly() needs a variable and an order: '" + tok + "'");
    const std::string var = trim(inner.substr(0, comma));
    if (var != "lambda")
      fail(errc::invalid_config, "poly() supports the dose variable only, got '" + var + "'");
    const int order = static_cast<int>(csv::parse_long(trim(inner.substr(comma + 1)), tok));
    return FixedTerm::poly_dose(order);
  }
  if (tok == "time") return FixedTerm::time_linear();
  if (is_factor_name(tok, categorical)) return FixedTerm::factor(tok);
  return FixedTerm::covariate(tok);
}

RandomSpec parse_random(const std::string& inner) {
  RandomSpec r;
  std::size_t bar = inner.find("||");
  std::size_t bar_len = 2;
  if (bar == std::string::npos) {
    bar = inner.find('|');
    bar_len = 1;
    r.structure = RandomSpec::Structure::IntSlopeCorrelated;
  } else {
    r.structure = RandomSpec::Structure::IndependentComponents;
  }
  if (bar == std::string::npos)
    fail(errc::invalid_config, "random term '" + inner + "' lacks a grouping bar");
  const std::string lhs = trim(inner.substr(0, bar));
  r.grouping = trim(inner.substr(bar + bar_len));
  if (r.grouping.empty()) fail(errc::invalid_config, "random term lacks a grouping factor");
  r.intercept = false;
  r.time_slope = false;
  for (const auto& t : split_terms(lhs)) {
    if (t == "1") r.intercept = true;
    else if (t == "time") r.time_slope = true;
    else fail(errc::invalid_config, "unsupported random term '" + t + "'");
  }
  if (!r.intercept)
    fail(errc::invalid_config, "random terms must include an intercept");
  return r;
}

}  // namespace

ModelSpec parse_formula(const std::string& formula, const std::string& outcome,
                        ModelSpec::Family family, const std::vector<std::string>& categorical) {
  const auto tilde = formula.find('~');
  if (tilde == std::string::npos)
    fail(errc::invalid_config, "formula needs '~': '" + formula + "'");

  ModelSpec spec;
  spec.outcome = outcome;
  spec.family = family;

  for (const auto& term : split_terms(formula.substr(tilde + 1))) {
    if (term.empty()) continue;
    if (term.front() == '(' && term.find('|') != std::string::npos) {
      if (term.back() != ')') fail(errc::invalid_config, "malformed random term '" + term + "'");
      spec.random.push_back(parse_random(term.substr(1, term.size() - 2)));
      continue;
    }
    if (term == "baseline") {
      spec.baseline_covariate = true;
      continue;
    }
    // interactions split on ':'
    std::vector<std::string> bases;
    std::string cur;
    int depth = 0;
    for (char c : term) {
      if (c == '(') ++depth;
      if (c == ')') --depth;
      if (c == ':' && depth == 0) {
        bases.push_back(trim(cur));
        cur.clear();
      } else {
        cur += c;
      }
    }
    bases.push_back(trim(cur));
    if (bases.size() == 1) {
      spec.fixed.push_back(parse_base(bases[0], categorical));
    } else {
      std::vector<FixedTerm> parts;
      for (const auto& b : bases) parts.push_back(parse_base(b, categorical));
      spec.fixed.push_back(FixedTerm::interaction(std::move(parts)));
    }
  }
  spec.validate();
  return spec;
}

std::string format_formula(const ModelSpec& spec) {
  std::ostringstream out;
  out << "value ~ ";
  bool first = true;
  auto emit = [&](const std::string& s) {
    if (!first) out << " + ";
    out << s;
    first = false;
  };
  for (const auto& t : spec.fixed) emit(t.describe());
  if (spec.baseline_covariate) emit("baseline");
  for (const auto& r : spec.random) {
    std::string lhs = "1";
    if (r.time_slope) lhs += " + time";
    const char* bar =
        r.structure == RandomSpec::Structure::IndependentComponents ? " || " : " | ";
    emit("(" + lhs + bar + r.grouping + ")");
  }
  return out.str();
}

}  // namespace trialfit
