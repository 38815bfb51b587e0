#include "trialfit/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace trialfit::optim {

SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                          const Eigen::VectorXd& start, const SimplexOptions& opt) {
  const int n = static_cast<int>(start.size());
  const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

  SimplexResult res;
  std::vector<Eigen::VectorXd> x(n + 1, start);
  std::vector<double> fx(n + 1);
  for (int i = 1; i <= n; ++i) x[i](i - 1) += opt.initial_step;
  for (int i = 0; i <= n; ++i) {
    fx[i] = f(x[i]);
    ++res.evaluations;
  }

  std::vector<int> ord(n + 1);
  auto sort_simplex = [&] {
    std::iota(ord.begin(), ord.end(), 0);
    std::sort(ord.begin(), ord.end(), [&](int a, int b) { return fx[a] < fx[b]; });
  };

  while (res.evaluations < opt.max_evals) {
    sort_simplex();
    const int best = ord[0], worst = ord[n], second_worst = ord[n > 0 ? n - 1 : 0];

    double diam = 0.0;
    for (int i = 1; i <= n; ++i)
      diam = std::max(diam, (x[ord[i]] - x[best]).cwiseAbs().maxCoeff());
    const double spread = std::fabs(fx[worst] - fx[best]);
    if (spread <= opt.f_tol_rel * (std::fabs(fx[best]) + 1e-12) && diam <= opt.x_tol) {
      res.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i <= n; ++i)
      if (i != worst) centroid += x[i];
    centroid /= n;

    Eigen::VectorXd xr = centroid + alpha * (centroid - x[worst]);
    double fr = f(xr);
    ++res.evaluations;

    if (fr < fx[best]) {
      Eigen::VectorXd xe = centroid + gamma * (xr - centroid);
      double fe = f(xe);
      ++res.evaluations;
      if (fe < fr) {
        x[worst] = xe;
        fx[worst] = fe;
      } else {
        x[worst] = xr;
        fx[worst] = fr;
      }
    } else if (fr < fx[second_worst]) {
      x[worst] = xr;
      fx[worst] = fr;
    } else {
      const bool outside = fr < fx[worst];
      Eigen::VectorXd xc;
      if (outside) xc = centroid + rho * (xr - centroid);
      else xc = centroid - rho * (centroid - x[worst]);
      double fc = f(xc);
      ++res.evaluations;
      if (fc < std::min(fr, fx[worst])) {
        x[worst] = xc;
        fx[worst] = fc;
      } else {
        for (int i = 0; i <= n; ++i) {
          if (i == best) continue;
          x[i] = x[best] + sigma * (x[i] - x[best]);
          fx[i] = f(x[i]);
          ++res.evaluations;
        }
      }
    }
  }

  sort_simplex();
  res.x = x[ord[0]];
  res.f = fx[ord[0]];
  return res;
}

BrentResult brent_min(const std::function<double(double)>& f, double lo, double hi,
                      double tol, int max_iter) {
  const double gold = 0.5 * (3.0 - std::sqrt(5.0));
  double a = lo, b = hi;
  double x = a + gold * (b - a);
  double w = x, v = x;
  double fx = f(x), fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  BrentResult res;
  res.evaluations = 1;

  for (int iter = 0; iter < max_iter; ++iter) {
    const double m = 0.5 * (a + b);
    const double t = tol * std::fabs(x) + 1e-12;
    if (std::fabs(x - m) <= 2.0 * t - 0.5 * (b - a)) break;

    bool golden = true;
    if (std::fabs(e) > t) {
      // parabolic interpolation through (v, w, x)
      const double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::fabs(q);
      const double e_old = e;
      e = d;
      if (std::fabs(p) < std::fabs(0.5 * q * e_old) && p > q * (a - x) && p < q * (b - x)) {
        d = p / q;
        const double u = x + d;
        if (u - a < 2.0 * t || b - u < 2.0 * t) d = (x < m) ? t : -t;
        golden = false;
      }
    }
    if (golden) {
      e = (x < m) ? b - x : a - x;
      d = gold * e;
    }
    const double u = (std::fabs(d) >= t) ? x + d : x + (d > 0 ? t : -t);
    const double fu = f(u);
    ++res.evaluations;

    if (fu <= fx) {
      if (u < x) b = x; else a = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) a = u; else b = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  res.x = x;
  res.f = fx;
  return res;
}

}  // namespace trialfit::optim
