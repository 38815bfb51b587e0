#include "trialfit/mixed_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "trialfit/errors.hpp"
#include "trialfit/optim.hpp"
#include "trialfit/stats.hpp"

namespace trialfit {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kLogDiagLo = -12.0;  // exp(-12) ~ 6e-6: the zero floor
constexpr double kLogDiagHi = 8.0;
constexpr double kBoundaryEps = -11.0;  // log-diag below this counts as a boundary hit
constexpr double kInf = std::numeric_limits<double>::infinity();

struct BlockLayout {
  bool slope = false;
  bool correlated = true;  // only meaningful with slope
  int theta_offset = 0;
  int n_theta() const { return slope ? (correlated ? 3 : 2) : 1; }
  int q() const { return slope ? 2 : 1; }
};

// Relative Cholesky factor of one block from its theta slice.
Eigen::Matrix2d lambda_of(const BlockLayout& lay, const Eigen::VectorXd& theta) {
  Eigen::Matrix2d L = Eigen::Matrix2d::Zero();
  const int o = lay.theta_offset;
  const double d0 = std::clamp(theta(o), kLogDiagLo, kLogDiagHi);
  L(0, 0) = std::exp(d0);
  if (lay.slope) {
    if (lay.correlated) {
      L(1, 0) = std::clamp(theta(o + 1), -100.0, 100.0);
      L(1, 1) = std::exp(std::clamp(theta(o + 2), kLogDiagLo, kLogDiagHi));
    } else {
      L(1, 1) = std::exp(std::clamp(theta(o + 1), kLogDiagLo, kLogDiagHi));
    }
  }
  return L;
}

struct Evaluation {
  bool ok = false;
  double dev_ml = kInf;
  double dev_reml = kInf;
  Eigen::VectorXd beta;
  Eigen::MatrixXd S;  // X' Vrel^-1 X
  double r2 = 0.0;
  double logdet_a = 0.0;
  double logdet_s = 0.0;
};

// Profiled penalised-least-squares core. Two layouts:
//   single: one grouping factor, q in {1,2}, block-diagonal solve
//   crossed: two intercept-only factors, dense solve over all levels
class LmmProblem {
 public:
  LmmProblem(const DesignMatrix& d) : d_(d) {
    n_ = static_cast<int>(d.X.rows());
    p_ = static_cast<int>(d.X.cols());
    xtx_ = d.X.transpose() * d.X;
    xty_ = d.X.transpose() * d.y;
    yty_ = d.y.squaredNorm();

    int offset = 0;
    for (const auto& b : d.random_blocks) {
      BlockLayout lay;
      lay.slope = b.time_slope;
      lay.correlated = b.structure == RandomSpec::Structure::IntSlopeCorrelated;
      lay.theta_offset = offset;
      offset += lay.n_theta();
      layout_.push_back(lay);
    }
    n_theta_ = offset;
    crossed_ = d.random_blocks.size() >= 2;

    if (!crossed_) {
      build_single_stats();
    } else {
      build_crossed_stats();
    }
  }

  int n() const { return n_; }
  int p() const { return p_; }
  int n_theta() const { return n_theta_; }
  const std::vector<BlockLayout>& layout() const { return layout_; }

  Evaluation evaluate(const Eigen::VectorXd& theta) const {
    return crossed_ ? eval_crossed(theta) : eval_single(theta);
  }

  double deviance(const Eigen::VectorXd& theta, Criterion crit) const {
    const Evaluation e = evaluate(theta);
    if (!e.ok) return kInf;
    return crit == Criterion::REML ? e.dev_reml : e.dev_ml;
  }

  // BLUPs in outcome units at (theta, beta).
  std::vector<RandomEffects> blups(const Eigen::VectorXd& theta,
                                   const Eigen::VectorXd& beta) const;

 private:
  void build_single_stats() {
    const auto& b = d_.random_blocks[0];
    const int g = b.n_levels();
    const int q = b.q();
    j_.assign(g, Eigen::Matrix2d::Zero());
    u_.assign(g, Eigen::MatrixXd::Zero(q, p_));
    v_.assign(g, Eigen::Vector2d::Zero());
    for (int i = 0; i < n_; ++i) {
      const int lev = b.level_of_row(i);
      Eigen::Vector2d z = Eigen::Vector2d::Zero();
      z(0) = 1.0;
      if (b.time_slope) z(1) = b.time_of_row(i);
      j_[lev].topLeftCorner(q, q) += z.head(q) * z.head(q).transpose();
      u_[lev] += z.head(q) * d_.X.row(i);
      v_[lev].head(q) += z.head(q) * d_.y(i);
    }
  }

  void build_crossed_stats() {
    const auto& a = d_.random_blocks[0];
    const auto& b = d_.random_blocks[1];
    ga_ = a.n_levels();
    gb_ = b.n_levels();
    da_ = Eigen::VectorXd::Zero(ga_);
    db_ = Eigen::VectorXd::Zero(gb_);
    cab_ = Eigen::MatrixXd::Zero(ga_, gb_);
    zax_ = Eigen::MatrixXd::Zero(ga_, p_);
    zbx_ = Eigen::MatrixXd::Zero(gb_, p_);
    zay_ = Eigen::VectorXd::Zero(ga_);
    zby_ = Eigen::VectorXd::Zero(gb_);
    for (int i = 0; i < n_; ++i) {
      const int la = a.level_of_row(i);
      const int lb = b.level_of_row(i);
      da_(la) += 1.0;
      db_(lb) += 1.0;
      cab_(la, lb) += 1.0;
      zax_.row(la) += d_.X.row(i);
      zbx_.row(lb) += d_.X.row(i);
      zay_(la) += d_.y(i);
      zby_(lb) += d_.y(i);
    }
  }

  Evaluation finish(Evaluation e, double cc, const Eigen::VectorXd& w) const {
    Eigen::LLT<Eigen::MatrixXd> s_llt(e.S);
    if (s_llt.info() != Eigen::Success) return e;
    e.beta = s_llt.solve(w);
    e.r2 = yty_ - cc - e.beta.dot(w);
    if (!(e.r2 > 0.0)) e.r2 = 1e-300;
    e.logdet_s = 2.0 * Eigen::MatrixXd(s_llt.matrixL()).diagonal().array().log().sum();
    const double nn = n_, pp = p_;
    e.dev_ml = e.logdet_a + nn * (1.0 + std::log(2.0 * kPi * e.r2 / nn));
    e.dev_reml =
        e.logdet_a + e.logdet_s + (nn - pp) * (1.0 + std::log(2.0 * kPi * e.r2 / (nn - pp)));
    e.ok = std::isfinite(e.dev_ml) && std::isfinite(e.dev_reml);
    return e;
  }

  Evaluation eval_single(const Eigen::VectorXd& theta) const {
    const auto& block = d_.random_blocks[0];
    const int q = block.q();
    const Eigen::Matrix2d lam2 = lambda_of(layout_[0], theta);
    const Eigen::MatrixXd lam = lam2.topLeftCorner(q, q);

    Evaluation e;
    e.S = xtx_;
    Eigen::VectorXd w = xty_;
    double cc = 0.0;
    const int g = block.n_levels();
    for (int gi = 0; gi < g; ++gi) {
      const Eigen::MatrixXd a = lam.transpose() * j_[gi].topLeftCorner(q, q) * lam +
                                Eigen::MatrixXd::Identity(q, q);
      Eigen::LLT<Eigen::MatrixXd> llt(a);
      if (llt.info() != Eigen::Success) return e;
      const Eigen::MatrixXd lmat = llt.matrixL();
      e.logdet_a += 2.0 * lmat.diagonal().array().log().sum();
      const Eigen::MatrixXd rg =
          lmat.triangularView<Eigen::Lower>().solve(lam.transpose() * u_[gi]);
      const Eigen::VectorXd cg =
          lmat.triangularView<Eigen::Lower>().solve(lam.transpose() * v_[gi].head(q));
      e.S -= rg.transpose() * rg;
      w -= rg.transpose() * cg;
      cc += cg.squaredNorm();
    }
    return finish(std::move(e), cc, w);
  }

  Evaluation eval_crossed(const Eigen::VectorXd& theta) const {
    const double la = lambda_of(layout_[0], theta)(0, 0);
    const double lb = lambda_of(layout_[1], theta)(0, 0);
    const int m = ga_ + gb_;

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
    a.topLeftCorner(ga_, ga_).diagonal() = (la * la) * da_.array() + 1.0;
    a.bottomRightCorner(gb_, gb_).diagonal() = (lb * lb) * db_.array() + 1.0;
    a.topRightCorner(ga_, gb_) = (la * lb) * cab_;
    a.bottomLeftCorner(gb_, ga_) = a.topRightCorner(ga_, gb_).transpose();

    Evaluation e;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) return e;
    const Eigen::MatrixXd lmat = llt.matrixL();
    e.logdet_a = 2.0 * lmat.diagonal().array().log().sum();

    Eigen::MatrixXd ztx(m, p_);
    ztx.topRows(ga_) = la * zax_;
    ztx.bottomRows(gb_) = lb * zbx_;
    Eigen::VectorXd zty(m);
    zty.head(ga_) = la * zay_;
    zty.tail(gb_) = lb * zby_;

    const Eigen::MatrixXd r = lmat.triangularView<Eigen::Lower>().solve(ztx);
    const Eigen::VectorXd c = lmat.triangularView<Eigen::Lower>().solve(zty);
    e.S = xtx_ - r.transpose() * r;
    const Eigen::VectorXd w = xty_ - r.transpose() * c;
    return finish(std::move(e), c.squaredNorm(), w);
  }

  const DesignMatrix& d_;
  int n_ = 0, p_ = 0, n_theta_ = 0;
  bool crossed_ = false;
  std::vector<BlockLayout> layout_;
  Eigen::MatrixXd xtx_;
  Eigen::VectorXd xty_;
  double yty_ = 0.0;
  // single-grouping sufficient statistics
  std::vector<Eigen::Matrix2d> j_;
  std::vector<Eigen::MatrixXd> u_;
  std::vector<Eigen::Vector2d> v_;
  // crossed sufficient statistics
  int ga_ = 0, gb_ = 0;
  Eigen::VectorXd da_, db_, zay_, zby_;
  Eigen::MatrixXd cab_, zax_, zbx_;
};

std::vector<RandomEffects> LmmProblem::blups(const Eigen::VectorXd& theta,
                                             const Eigen::VectorXd& beta) const {
  std::vector<RandomEffects> out;
  if (!crossed_) {
    const auto& block = d_.random_blocks[0];
    const int q = block.q();
    const Eigen::MatrixXd lam = lambda_of(layout_[0], theta).topLeftCorner(q, q);
    RandomEffects re;
    re.grouping = block.grouping;
    re.levels = block.level_names;
    const int g = block.n_levels();
    re.intercept.resize(g);
    if (block.time_slope) re.slope.resize(g);
    for (int gi = 0; gi < g; ++gi) {
      const Eigen::MatrixXd a = lam.transpose() * j_[gi].topLeftCorner(q, q) * lam +
                                Eigen::MatrixXd::Identity(q, q);
      const Eigen::VectorXd rhs = lam.transpose() * (v_[gi].head(q) - u_[gi] * beta);
      const Eigen::VectorXd u = a.llt().solve(rhs);
      const Eigen::VectorXd b = lam * u;
      re.intercept(gi) = b(0);
      if (block.time_slope) re.slope(gi) = b(1);
    }
    out.push_back(std::move(re));
    return out;
  }

  const double la = lambda_of(layout_[0], theta)(0, 0);
  const double lb = lambda_of(layout_[1], theta)(0, 0);
  const int m = ga_ + gb_;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  a.topLeftCorner(ga_, ga_).diagonal() = (la * la) * da_.array() + 1.0;
  a.bottomRightCorner(gb_, gb_).diagonal() = (lb * lb) * db_.array() + 1.0;
  a.topRightCorner(ga_, gb_) = (la * lb) * cab_;
  a.bottomLeftCorner(gb_, ga_) = a.topRightCorner(ga_, gb_).transpose();

  Eigen::VectorXd rhs(m);
  rhs.head(ga_) = la * (zay_ - zax_ * beta);
  rhs.tail(gb_) = lb * (zby_ - zbx_ * beta);
  const Eigen::VectorXd u = a.llt().solve(rhs);

  RandomEffects ra;
  ra.grouping = d_.random_blocks[0].grouping;
  ra.levels = d_.random_blocks[0].level_names;
  ra.intercept = la * u.head(ga_);
  out.push_back(std::move(ra));

  RandomEffects rb;
  rb.grouping = d_.random_blocks[1].grouping;
  rb.levels = d_.random_blocks[1].level_names;
  rb.intercept = lb * u.tail(gb_);
  out.push_back(std::move(rb));
  return out;
}

// Moment-based starting values on the log-Cholesky scale.
std::vector<Eigen::VectorXd> starting_points(const DesignMatrix& d,
                                             const std::vector<BlockLayout>& layout,
                                             int n_theta) {
  // OLS residuals
  Eigen::VectorXd resid = d.y;
  {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d.X);
    resid -= d.X * qr.solve(d.y);
  }
  const double s2 = std::max(resid.squaredNorm() / std::max(1, int(d.X.rows()) - int(d.X.cols())),
                             1e-12);

  Eigen::VectorXd base = Eigen::VectorXd::Zero(n_theta);
  for (std::size_t bi = 0; bi < d.random_blocks.size(); ++bi) {
    const auto& block = d.random_blocks[bi];
    const auto& lay = layout[bi];
    const int g = block.n_levels();

    // between-level variance of residual means
    std::vector<double> sum(g, 0.0), sumt(g, 0.0), sumtt(g, 0.0), sumrt(g, 0.0);
    std::vector<int> cnt(g, 0);
    for (int i = 0; i < int(d.X.rows()); ++i) {
      const int lev = block.level_of_row(i);
      sum[lev] += resid(i);
      cnt[lev] += 1;
      const double t = block.time_of_row(i);
      sumt[lev] += t;
      sumtt[lev] += t * t;
      sumrt[lev] += t * resid(i);
    }
    double var_means = 0.0;
    int used = 0;
    for (int gi = 0; gi < g; ++gi)
      if (cnt[gi] > 0) {
        const double m = sum[gi] / cnt[gi];
        var_means += m * m;
        ++used;
      }
    var_means = used > 1 ? var_means / used : 0.25 * s2;
    const double rel_int = std::sqrt(std::max(var_means / s2, 0.01));
    base(lay.theta_offset) = std::log(rel_int);

    if (lay.slope) {
      // per-level residual slopes
      double var_slopes = 0.0;
      int ns = 0;
      for (int gi = 0; gi < g; ++gi) {
        if (cnt[gi] < 2) continue;
        const double den = sumtt[gi] - sumt[gi] * sumt[gi] / cnt[gi];
        if (den <= 1e-12) continue;
        const double sl = (sumrt[gi] - sumt[gi] * sum[gi] / cnt[gi]) / den;
        var_slopes += sl * sl;
        ++ns;
      }
      var_slopes = ns > 1 ? var_slopes / ns : 0.01 * s2;
      const double rel_slope = std::sqrt(std::max(var_slopes / s2, 1e-4));
      if (lay.correlated) {
        base(lay.theta_offset + 1) = 0.0;
        base(lay.theta_offset + 2) = std::log(rel_slope);
      } else {
        base(lay.theta_offset + 1) = std::log(rel_slope);
      }
    }
  }

  std::vector<Eigen::VectorXd> starts = {base, base, base};
  for (std::size_t bi = 0; bi < layout.size(); ++bi) {
    const auto& lay = layout[bi];
    for (int k = 0; k < lay.n_theta(); ++k) {
      const bool is_diag = !(lay.slope && lay.correlated && k == 1);
      if (is_diag) {
        starts[1](lay.theta_offset + k) -= std::log(10.0);
        starts[2](lay.theta_offset + k) += std::log(10.0);
      }
    }
  }
  return starts;
}

FittedMixedModel finalize_fit(const DesignMatrix& d, LmmProblem& prob,
                              const Eigen::VectorXd& theta, Criterion crit,
                              ConvergenceRecord conv) {
  const Evaluation e = prob.evaluate(theta);
  if (!e.ok) fail(errc::non_convergence, "profiled deviance not finite at the optimum");

  FittedMixedModel m;
  m.criterion = crit;
  m.n = prob.n();
  m.p = prob.p();
  m.n_theta = prob.n_theta();
  m.labels = d.labels();
  m.beta = e.beta;

  const double dof = crit == Criterion::REML ? double(m.n - m.p) : double(m.n);
  const double sigma2 = e.r2 / dof;
  m.cov_beta = sigma2 * e.S.llt().solve(Eigen::MatrixXd::Identity(m.p, m.p));
  m.loglik_ml = -0.5 * (e.logdet_a + m.n * (1.0 + std::log(2.0 * kPi * e.r2 / m.n)));
  m.loglik_reml = -0.5 * (e.logdet_a + e.logdet_s +
                          (m.n - m.p) * (1.0 + std::log(2.0 * kPi * e.r2 / (m.n - m.p))));

  m.vc.sigma = std::sqrt(sigma2);
  for (std::size_t bi = 0; bi < d.random_blocks.size(); ++bi) {
    const auto& lay = prob.layout()[bi];
    const Eigen::Matrix2d lam = lambda_of(lay, theta);
    VarianceComponents::Block b;
    b.grouping = d.random_blocks[bi].grouping;
    const bool int_floor = std::log(std::max(lam(0, 0), 1e-300)) < kBoundaryEps;
    b.sd_intercept = int_floor ? 0.0 : m.vc.sigma * lam(0, 0);
    b.boundary = int_floor;
    if (lay.slope) {
      const double rel_slope = std::hypot(lam(1, 0), lam(1, 1));
      const bool slope_floor = rel_slope < std::exp(kBoundaryEps);
      b.sd_slope = slope_floor ? 0.0 : m.vc.sigma * rel_slope;
      b.boundary = b.boundary || slope_floor;
      b.corr = (rel_slope > 0 && !slope_floor && !int_floor) ? lam(1, 0) / rel_slope : 0.0;
    }
    conv.boundary = conv.boundary || b.boundary;
    m.vc.blocks.push_back(b);
  }

  const double k = m.p + m.n_theta + 1;
  const double ll = crit == Criterion::REML ? m.loglik_reml : m.loglik_ml;
  m.aic = -2.0 * ll + 2.0 * k;
  m.bic = -2.0 * ll + k * std::log(double(m.n));

  m.blups = prob.blups(theta, m.beta);
  m.convergence = std::move(conv);
  return m;
}

FittedMixedModel fit_design(const DesignMatrix& d, Criterion crit,
                            std::vector<std::string> notes) {
  if (d.random_blocks.empty())
    fail(errc::invalid_config, "mixed model needs at least one random term");
  for (const auto& b : d.random_blocks) {
    if (b.time_slope) {
      bool identifiable = false;
      std::map<int, std::set<double>> times;
      for (int i = 0; i < b.level_of_row.size(); ++i)
        if (times[b.level_of_row(i)].insert(b.time_of_row(i)).second &&
            times[b.level_of_row(i)].size() >= 2) {
          identifiable = true;
          break;
        }
      if (!identifiable)
        fail(errc::single_observation_per_group_with_slope,
             "random slope requested but no group has two distinct time points");
    }
  }
  if (d.X.rows() <= d.X.cols())
    fail(errc::insufficient_rows, "need more rows than fixed-effect columns");

  LmmProblem prob(d);
  auto objective = [&](const Eigen::VectorXd& th) { return prob.deviance(th, crit); };

  const auto starts = starting_points(d, prob.layout(), prob.n_theta());
  optim::SimplexResult best;
  best.f = kInf;
  int evals = 0;
  bool any_converged = false;
  for (const auto& s : starts) {
    optim::SimplexOptions opt;
    opt.initial_step = 0.5;
    auto r = optim::nelder_mead(objective, s, opt);
    evals += r.evaluations;
    any_converged = any_converged || r.converged;
    if (r.f < best.f) best = r;
  }
  if (!std::isfinite(best.f))
    fail(errc::non_convergence, "deviance could not be evaluated at any start");

  // polish with a tight simplex around the best point
  {
    optim::SimplexOptions opt;
    opt.initial_step = 1e-4;
    auto r = optim::nelder_mead(objective, best.x, opt);
    evals += r.evaluations;
    if (r.f <= best.f) {
      any_converged = any_converged || r.converged;
      best = r;
    }
  }

  ConvergenceRecord conv;
  conv.converged = any_converged;
  conv.evaluations = evals;
  conv.deviance = best.f;
  conv.notes = std::move(notes);

  // scaled central-difference gradient at the optimum (diagnostic)
  {
    const double h = 1e-5;
    double gmax = 0.0;
    for (int j = 0; j < prob.n_theta(); ++j) {
      Eigen::VectorXd tp = best.x, tm = best.x;
      tp(j) += h;
      tm(j) -= h;
      const double fp = objective(tp), fm = objective(tm);
      if (std::isfinite(fp) && std::isfinite(fm))
        gmax = std::max(gmax, std::fabs(fp - fm) / (2.0 * h));
    }
    conv.gradient_norm = gmax / (1.0 + std::fabs(best.f));
  }

  return finalize_fit(d, prob, best.x, crit, std::move(conv));
}

}  // namespace

FittedMixedModel fit_lmm(const DesignMatrix& design, Criterion criterion) {
  // drop single-level groupings: their intercept is aliased with the grand mean
  std::vector<std::string> notes;
  const bool needs_drop =
      std::any_of(design.random_blocks.begin(), design.random_blocks.end(),
                  [](const RandomBlock& b) { return b.n_levels() < 2; });
  if (!needs_drop) return fit_design(design, criterion, {});

  DesignMatrix pruned = design;
  pruned.random_blocks.clear();
  for (const auto& b : design.random_blocks) {
    if (b.n_levels() < 2)
      notes.push_back("dropped random term for '" + b.grouping +
                      "': a single observed level is unidentifiable");
    else
      pruned.random_blocks.push_back(b);
  }
  if (pruned.random_blocks.empty())
    fail(errc::invalid_config, "all random terms were single-level; fit a fixed-effects model");
  return fit_design(pruned, criterion, std::move(notes));
}

FittedMixedModel fit_lmm(const ModelSpec& spec, const ObservationTable& table,
                         Criterion criterion) {
  if (spec.family != ModelSpec::Family::Gaussian)
    fail(errc::invalid_config, "mixed models are Gaussian-only");
  const DesignMatrix d = build_design(spec, table);
  if (spec.random.size() == 1 && spec.random[0].time_slope &&
      spec.random[0].structure == RandomSpec::Structure::IntSlopeCorrelated) {
    // correlated intercept-slope first; independent-components fallback
    try {
      FittedMixedModel m = fit_lmm(d, criterion);
      if (m.convergence.converged) return m;
    } catch (const TrialError& e) {
      if (e.code() != errc::non_convergence) throw;
    }
    DesignMatrix indep = d;
    indep.random_blocks[0].structure = RandomSpec::Structure::IndependentComponents;
    FittedMixedModel m = fit_lmm(indep, criterion);
    m.convergence.notes.push_back(
        "correlated intercept-slope fit did not converge; refit with independent components");
    return m;
  }
  return fit_lmm(d, criterion);
}

FittedMixedModel fit_crossed_lmm(const ModelSpec& spec, const ObservationTable& table,
                                 Criterion criterion) {
  for (const auto& r : spec.random)
    if (r.time_slope)
      fail(errc::invalid_config, "crossed random effects are intercept-only");
  return fit_lmm(spec, table, criterion);
}

std::map<std::string, double> extract_subject_slopes(const FittedMixedModel& model) {
  const RandomEffects* re = nullptr;
  for (const auto& b : model.blups)
    if (b.slope.size() > 0) re = &b;
  if (!re) fail(errc::no_random_slope, "model has no random time slope");

  int time_idx = -1;
  for (std::size_t j = 0; j < model.labels.size(); ++j)
    if (model.labels[j] == "time") time_idx = static_cast<int>(j);
  if (time_idx < 0) fail(errc::no_time_term, "model has no fixed time coefficient");

  std::map<std::string, double> out;
  for (std::size_t i = 0; i < re->levels.size(); ++i)
    out[re->levels[i]] = model.beta(time_idx) + re->slope(static_cast<Eigen::Index>(i));
  return out;
}

SpecComparison compare_fixed_specs(const std::vector<ModelSpec>& specs,
                                   const ObservationTable& table,
                                   std::vector<std::string> names) {
  if (specs.empty()) fail(errc::invalid_config, "no specs to compare");
  SpecComparison cmp;
  std::vector<FittedMixedModel> fits;
  std::vector<std::vector<std::string>> labels;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].random.empty())
      fail(errc::invalid_config, "compare_fixed_specs expects mixed-model specs");
    FittedMixedModel m = fit_lmm(specs[i], table, Criterion::ML);
    SpecComparisonRow row;
    row.name = i < names.size() ? names[i] : "spec" + std::to_string(i + 1);
    row.p_fixed = m.p;
    row.loglik = m.loglik_ml;
    row.aic = m.aic;
    row.bic = m.bic;
    labels.push_back(m.labels);
    cmp.rows.push_back(row);
    fits.push_back(std::move(m));
  }

  // winner: lowest AIC, ties to fewer parameters, then input order
  int win = 0;
  for (std::size_t i = 1; i < cmp.rows.size(); ++i) {
    const auto& a = cmp.rows[i];
    const auto& b = cmp.rows[win];
    if (a.aic < b.aic || (a.aic == b.aic && a.p_fixed < b.p_fixed)) win = static_cast<int>(i);
  }
  cmp.winner = win;

  // LRT chain over specs ordered by parameter count
  std::vector<std::size_t> order(specs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return cmp.rows[a].p_fixed < cmp.rows[b].p_fixed;
  });
  for (std::size_t k = 1; k < order.size(); ++k) {
    const std::size_t prev = order[k - 1], cur = order[k];
    const std::set<std::string> prev_labels(labels[prev].begin(), labels[prev].end());
    const std::set<std::string> cur_labels(labels[cur].begin(), labels[cur].end());
    const bool nested =
        cmp.rows[cur].p_fixed > cmp.rows[prev].p_fixed &&
        std::includes(cur_labels.begin(), cur_labels.end(), prev_labels.begin(),
                      prev_labels.end());
    if (!nested) {
      cmp.lrt_chain_valid = false;
      continue;
    }
    auto& row = cmp.rows[cur];
    row.lrt_df = cmp.rows[cur].p_fixed - cmp.rows[prev].p_fixed;
    row.lrt_statistic = std::max(0.0, 2.0 * (cmp.rows[cur].loglik - cmp.rows[prev].loglik));
    row.lrt_p = stats::chi2_sf(*row.lrt_statistic, *row.lrt_df);
  }
  return cmp;
}

FittedFixedModel as_fixed_shell(const FittedMixedModel& m) {
  FittedFixedModel f;
  f.beta = m.beta;
  f.cov = m.cov_beta;
  f.labels = m.labels;
  f.loglik = m.loglik_ml;
  f.n = m.n;
  f.p = m.p + m.n_theta + 1;
  f.family = ModelSpec::Family::Gaussian;
  f.dispersion = m.vc.sigma * m.vc.sigma;
  f.aic = m.aic;
  f.bic = m.bic;
  return f;
}

}  // namespace trialfit
