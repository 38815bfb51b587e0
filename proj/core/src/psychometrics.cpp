#include "trialfit/psychometrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "trialfit/errors.hpp"
#include "trialfit/optim.hpp"
#include "trialfit/rng.hpp"
#include "trialfit/stats.hpp"

namespace trialfit {

namespace {

constexpr double kRhoBound = 0.999;

// bivariate normal CDF with +-inf handled via large sentinels
double bvn(double a, double b, double rho) {
  if (a <= -37.0 || b <= -37.0) return 0.0;
  if (a >= 37.0 && b >= 37.0) return 1.0;
  if (a >= 37.0) return stats::norm_cdf(b);
  if (b >= 37.0) return stats::norm_cdf(a);
  return stats::bvn_cdf(a, b, rho);
}

// thresholds (K-1 of them) plus the observed category->index map
std::pair<std::vector<double>, std::map<int, int>> margin_thresholds(std::span<const int> v) {
  std::map<int, long> counts;
  for (int x : v) counts[x] += 1;
  if (counts.size() < 2)
    fail(errc::degenerate_margin, "ordinal item has a single observed category");
  std::map<int, int> index;
  std::vector<double> tau;
  long cum = 0;
  int k = 0;
  const double n = static_cast<double>(v.size());
  for (const auto& [cat, cnt] : counts) {
    index[cat] = k++;
    cum += cnt;
    if (static_cast<std::size_t>(k) < counts.size())
      tau.push_back(stats::norm_quantile(static_cast<double>(cum) / n));
  }
  return {tau, index};
}

}  // namespace

PolychoricResult polychoric(std::span<const int> x, std::span<const int> y) {
  if (x.size() != y.size() || x.empty())
    fail(errc::value_out_of_range, "polychoric needs two equal-length item vectors");

  auto [tau_x, idx_x] = margin_thresholds(x);
  auto [tau_y, idx_y] = margin_thresholds(y);
  const int kx = static_cast<int>(tau_x.size()) + 1;
  const int ky = static_cast<int>(tau_y.size()) + 1;

  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(kx, ky);
  for (std::size_t i = 0; i < x.size(); ++i) counts(idx_x[x[i]], idx_y[y[i]]) += 1.0;

  auto edge = [](const std::vector<double>& tau, int i) {
    if (i < 0) return -38.0;
    if (i >= static_cast<int>(tau.size())) return 38.0;
    return tau[static_cast<std::size_t>(i)];
  };

  auto neg_loglik = [&](double rho) {
    double ll = 0.0;
    for (int i = 0; i < kx; ++i) {
      for (int j = 0; j < ky; ++j) {
        if (counts(i, j) == 0.0) continue;
        const double p = bvn(edge(tau_x, i), edge(tau_y, j), rho) -
                         bvn(edge(tau_x, i - 1), edge(tau_y, j), rho) -
                         bvn(edge(tau_x, i), edge(tau_y, j - 1), rho) +
                         bvn(edge(tau_x, i - 1), edge(tau_y, j - 1), rho);
        ll += counts(i, j) * std::log(std::max(p, 1e-300));
      }
    }
    return -ll;
  };

  const auto opt = optim::brent_min(neg_loglik, -kRhoBound, kRhoBound, 1e-10);

  PolychoricResult r;
  r.rho = opt.x;
  r.thresholds_x = tau_x;
  r.thresholds_y = tau_y;
  if (std::fabs(r.rho) >= kRhoBound - 1e-6) {
    r.rho = r.rho > 0 ? kRhoBound : -kRhoBound;
    r.clamped = true;
  }
  return r;
}

PolychoricMatrix polychoric_matrix(const Eigen::MatrixXi& items) {
  const int d = static_cast<int>(items.cols());
  const int n = static_cast<int>(items.rows());
  PolychoricMatrix out;
  out.corr = Eigen::MatrixXd::Identity(d, d);

  std::vector<std::vector<int>> cols(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    cols[j].resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) cols[j][static_cast<std::size_t>(i)] = items(i, j);
  }

  for (int a = 0; a < d; ++a) {
    for (int b = a + 1; b < d; ++b) {
      const PolychoricResult r = polychoric(cols[a], cols[b]);
      out.corr(a, b) = out.corr(b, a) = r.rho;
      if (r.clamped) out.clamped_pairs.push_back({a, b});
    }
  }

  // nearest-PSD repair by eigenvalue clipping, rescaled to unit diagonal
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.corr);
  if (es.eigenvalues().minCoeff() < 1e-6) {
    const Eigen::VectorXd clipped = es.eigenvalues().cwiseMax(1e-6);
    Eigen::MatrixXd repaired =
        es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
    const Eigen::VectorXd scale = repaired.diagonal().cwiseSqrt().cwiseInverse();
    repaired = scale.asDiagonal() * repaired * scale.asDiagonal();
    out.repair_delta = (repaired - out.corr).cwiseAbs().maxCoeff();
    out.corr = repaired;
    out.psd_repaired = true;
  }
  return out;
}

// ---------------------------------------------------------------------------
// ULS extraction
// ---------------------------------------------------------------------------

namespace {

// top-k factorisation of R with diagonal replaced by h
Eigen::MatrixXd loadings_at(const Eigen::MatrixXd& corr, const Eigen::VectorXd& h, int k) {
  Eigen::MatrixXd rh = corr;
  rh.diagonal() = h;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(rh);
  const int d = static_cast<int>(corr.rows());
  Eigen::MatrixXd lam(d, k);
  for (int j = 0; j < k; ++j) {
    const int src = d - 1 - j;  // eigenvalues ascend
    const double e = std::max(es.eigenvalues()(src), 0.0);
    lam.col(j) = es.eigenvectors().col(src) * std::sqrt(e);
  }
  return lam;
}

// ULS objective: sum of squared discarded eigenvalues; gradient wrt h
double uls_objective(const Eigen::MatrixXd& corr, const Eigen::VectorXd& h, int k,
                     Eigen::VectorXd* grad) {
  Eigen::MatrixXd rh = corr;
  rh.diagonal() = h;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(rh);
  const int d = static_cast<int>(corr.rows());
  double f = 0.0;
  if (grad) grad->setZero(d);
  for (int j = 0; j < d - k; ++j) {  // ascending order: first d-k are discarded
    const double e = es.eigenvalues()(j);
    f += e * e;
    if (grad)
      *grad += 2.0 * e * es.eigenvectors().col(j).array().square().matrix();
  }
  return f;
}

struct Rotation {
  Eigen::MatrixXd loadings;
  Eigen::MatrixXd phi;
};

// direct quartimin criterion and gradient
std::pair<double, Eigen::MatrixXd> quartimin(const Eigen::MatrixXd& l) {
  const int k = static_cast<int>(l.cols());
  const Eigen::MatrixXd l2 = l.array().square();
  const Eigen::MatrixXd nmat = Eigen::MatrixXd::Ones(k, k) - Eigen::MatrixXd::Identity(k, k);
  const Eigen::MatrixXd m = l2 * nmat;
  const double f = (l2.array() * m.array()).sum() / 4.0;
  const Eigen::MatrixXd gq = l.array() * m.array();
  return {f, gq};
}

// gradient-projection oblique rotation (Bernaards & Jennrich)
Rotation oblimin_rotate(const Eigen::MatrixXd& a) {
  const int k = static_cast<int>(a.cols());
  Eigen::MatrixXd t = Eigen::MatrixXd::Identity(k, k);
  if (k < 2) return {a, Eigen::MatrixXd::Identity(k, k)};

  double al = 1.0;
  Eigen::MatrixXd ti = t.inverse();
  Eigen::MatrixXd l = a * ti.transpose();
  auto [f, gq] = quartimin(l);
  Eigen::MatrixXd g = -(l.transpose() * gq * ti).transpose();

  for (int iter = 0; iter < 500; ++iter) {
    const Eigen::VectorXd colsums = (t.array() * g.array()).colwise().sum();
    const Eigen::MatrixXd gp = g - t * colsums.asDiagonal();
    const double s = gp.norm();
    if (s < 1e-7) break;
    al *= 2.0;
    Eigen::MatrixXd tt;
    double fnew = f;
    for (int half = 0; half < 12; ++half) {
      Eigen::MatrixXd xmat = t - al * gp;
      const Eigen::VectorXd norms = xmat.colwise().norm();
      tt = xmat * norms.cwiseInverse().asDiagonal();
      ti = tt.inverse();
      l = a * ti.transpose();
      auto [f2, gq2] = quartimin(l);
      fnew = f2;
      gq = gq2;
      if (fnew < f - 0.5 * s * s * al) break;
      al /= 2.0;
    }
    t = tt;
    f = fnew;
    g = -(l.transpose() * gq * ti).transpose();
  }
  return {a * t.inverse().transpose(), t.transpose() * t};
}

void canonicalise(FactorSolution& sol) {
  const int d = static_cast<int>(sol.loadings.rows());
  const int k = static_cast<int>(sol.loadings.cols());

  // order factors by explained variance (sum of squared pattern loadings)
  std::vector<double> ss(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) ss[static_cast<std::size_t>(j)] = sol.loadings.col(j).squaredNorm();
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
    return ss[static_cast<std::size_t>(x)] > ss[static_cast<std::size_t>(y)];
  });

  Eigen::MatrixXd lam(d, k);
  Eigen::MatrixXd phi(k, k);
  sol.explained.resize(k);
  for (int j = 0; j < k; ++j) {
    lam.col(j) = sol.loadings.col(order[static_cast<std::size_t>(j)]);
    sol.explained(j) = ss[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])] / d;
  }
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      phi(i, j) = sol.phi(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);

  // largest-magnitude loading per factor positive
  for (int j = 0; j < k; ++j) {
    Eigen::Index imax;
    lam.col(j).cwiseAbs().maxCoeff(&imax);
    if (lam(imax, j) < 0) {
      lam.col(j) = -lam.col(j);
      phi.row(j) = -phi.row(j);
      phi.col(j) = -phi.col(j);
    }
  }
  sol.loadings = lam;
  sol.phi = phi;
}

}  // namespace

FactorSolution efa_uls(const Eigen::MatrixXd& corr, int k) {
  const int d = static_cast<int>(corr.rows());
  if (k < 1 || k >= d) fail(errc::invalid_config, "factor count must satisfy 1 <= k < d");
  if ((corr - corr.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    fail(errc::invalid_config, "correlation matrix must be symmetric");

  FactorSolution sol;
  sol.corr = corr;

  // start from squared multiple correlations
  Eigen::VectorXd h(d);
  {
    Eigen::MatrixXd rinv = corr;
    rinv.diagonal().array() += 1e-8;
    rinv = rinv.inverse();
    for (int i = 0; i < d; ++i) h(i) = std::clamp(1.0 - 1.0 / rinv(i, i), 0.05, 0.995);
  }

  // principal-axis sweeps take h close; gradient descent finishes the ULS fit
  for (int iter = 0; iter < 200; ++iter) {
    const Eigen::MatrixXd lam = loadings_at(corr, h, k);
    Eigen::VectorXd h_new = lam.array().square().rowwise().sum();
    h_new = h_new.cwiseMin(1.0).cwiseMax(0.0);
    const double delta = (h_new - h).cwiseAbs().maxCoeff();
    h = h_new;
    sol.iterations = iter + 1;
    if (delta < 1e-10) break;
  }

  Eigen::VectorXd grad(d);
  double f = uls_objective(corr, h, k, &grad);
  double step = 0.1;
  for (int iter = 0; iter < 500; ++iter) {
    if (grad.cwiseAbs().maxCoeff() < 1e-9) {
      sol.converged = true;
      break;
    }
    Eigen::VectorXd h_try = (h - step * grad).cwiseMin(1.0).cwiseMax(0.0);
    const double f_try = uls_objective(corr, h_try, k, nullptr);
    if (f_try < f) {
      h = h_try;
      f = uls_objective(corr, h, k, &grad);
      step *= 1.5;
    } else {
      step *= 0.5;
      if (step < 1e-14) {
        sol.converged = true;
        break;
      }
    }
    ++sol.iterations;
  }

  sol.heywood = (h.array() >= 1.0 - 1e-9).any();
  sol.communalities = h;

  const Eigen::MatrixXd unrotated = loadings_at(corr, h, k);
  const Rotation rot = oblimin_rotate(unrotated);
  sol.loadings = rot.loadings;
  sol.phi = rot.phi;
  canonicalise(sol);

  // off-diagonal residual RMSR against the reproduced matrix
  const Eigen::MatrixXd reproduced = sol.loadings * sol.phi * sol.loadings.transpose();
  double ss = 0.0;
  int cnt = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const double r = corr(i, j) - reproduced(i, j);
      ss += r * r;
      ++cnt;
    }
  sol.rmsr = cnt ? std::sqrt(ss / cnt) : 0.0;
  return sol;
}

// ---------------------------------------------------------------------------
// Anchored scores
// ---------------------------------------------------------------------------

AnchoredScores score_anchored(const FactorSolution& solution, const Eigen::MatrixXd& pre_data,
                              const Eigen::MatrixXd& post_data) {
  const int d = static_cast<int>(solution.loadings.rows());
  if (pre_data.cols() != d || post_data.cols() != d)
    fail(errc::item_mismatch, "pre/post data must have the solution's item columns");

  const Eigen::VectorXd mean = pre_data.colwise().mean();
  Eigen::VectorXd sd(d);
  for (int j = 0; j < d; ++j) {
    const double var =
        (pre_data.col(j).array() - mean(j)).square().sum() / std::max(1.0, double(pre_data.rows() - 1));
    sd(j) = var > 0 ? std::sqrt(var) : 1.0;
  }

  // regression weights W = R^-1 S with S the structure matrix, rescaled to
  // unit model-implied score variance
  const Eigen::MatrixXd s = solution.loadings * solution.phi;
  const Eigen::MatrixXd w = solution.corr.ldlt().solve(s);
  const int k = static_cast<int>(solution.loadings.cols());
  Eigen::VectorXd scale(k);
  for (int j = 0; j < k; ++j) {
    const double v = w.col(j).dot(solution.corr * w.col(j));
    scale(j) = v > 0 ? 1.0 / std::sqrt(v) : 1.0;
  }

  auto score = [&](const Eigen::MatrixXd& data) {
    Eigen::MatrixXd z = data;
    for (int j = 0; j < d; ++j) z.col(j) = (data.col(j).array() - mean(j)) / sd(j);
    return Eigen::MatrixXd(z * w * scale.asDiagonal());
  };

  return {score(pre_data), score(post_data)};
}

// ---------------------------------------------------------------------------
// K-means
// ---------------------------------------------------------------------------

namespace {

KmeansResult kmeans_once(const Eigen::MatrixXd& data, int k, Rng& rng, int max_iter) {
  const int n = static_cast<int>(data.rows());
  const int d = static_cast<int>(data.cols());

  // k-means++ seeding
  Eigen::MatrixXd centroids(k, d);
  std::vector<double> dist2(static_cast<std::size_t>(n),
                            std::numeric_limits<double>::infinity());
  centroids.row(0) = data.row(static_cast<Eigen::Index>(rng.uniform_int(n)));
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d2 = (data.row(i) - centroids.row(c - 1)).squaredNorm();
      dist2[static_cast<std::size_t>(i)] = std::min(dist2[static_cast<std::size_t>(i)], d2);
      total += dist2[static_cast<std::size_t>(i)];
    }
    double target = rng.uniform() * total;
    int pick = n - 1;
    for (int i = 0; i < n; ++i) {
      target -= dist2[static_cast<std::size_t>(i)];
      if (target <= 0) {
        pick = i;
        break;
      }
    }
    centroids.row(c) = data.row(pick);
  }

  std::vector<int> assign(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (data.row(i) - centroids.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d2 = (data.row(i) - centroids.row(c)).squaredNorm();
        if (d2 < best_d) {
          best_d = d2;
          best = c;
        }
      }
      if (assign[static_cast<std::size_t>(i)] != best) {
        assign[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    if (!changed) break;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, d);
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < n; ++i) {
      sums.row(assign[static_cast<std::size_t>(i)]) += data.row(i);
      counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])] += 1;
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centroids.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
      } else {
        // re-seed an empty cluster at the point farthest from its centroid
        int far = 0;
        double far_d = -1.0;
        for (int i = 0; i < n; ++i) {
          const double d2 =
              (data.row(i) - centroids.row(assign[static_cast<std::size_t>(i)])).squaredNorm();
          if (d2 > far_d) {
            far_d = d2;
            far = i;
          }
        }
        centroids.row(c) = data.row(far);
      }
    }
  }

  KmeansResult r;
  r.assignments = std::move(assign);
  r.centroids = std::move(centroids);
  r.inertia = 0.0;
  for (int i = 0; i < n; ++i)
    r.inertia += (data.row(i) - r.centroids.row(r.assignments[static_cast<std::size_t>(i)]))
                     .squaredNorm();
  return r;
}

}  // namespace

KmeansResult kmeans(const Eigen::MatrixXd& data, int k, std::uint64_t seed, int restarts,
                    int max_iter) {
  const int n = static_cast<int>(data.rows());
  if (k < 1) fail(errc::invalid_config, "k must be >= 1");
  if (n < k) fail(errc::fewer_points_than_clusters, "n=" + std::to_string(n) +
                                                        " points for k=" + std::to_string(k));

  KmeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, restarts); ++r) {
    Rng rng(Rng::derive(seed, {0x6B6D, static_cast<std::uint64_t>(r)}));
    KmeansResult cand = kmeans_once(data, k, rng, max_iter);
    if (cand.inertia < best.inertia) best = std::move(cand);
  }
  return best;
}

Eigen::MatrixXd standardise_columns(const Eigen::MatrixXd& data) {
  Eigen::MatrixXd out = data;
  for (int j = 0; j < data.cols(); ++j) {
    const double mean = data.col(j).mean();
    const double var =
        (data.col(j).array() - mean).square().sum() / std::max(1.0, double(data.rows() - 1));
    const double sd = var > 0 ? std::sqrt(var) : 1.0;
    out.col(j) = (data.col(j).array() - mean) / sd;
    if (var == 0) out.col(j).setZero();
  }
  return out;
}

}  // namespace trialfit
