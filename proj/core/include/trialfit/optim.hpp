#ifndef TRIALFIT_OPTIM_HPP
#define TRIALFIT_OPTIM_HPP

#include <Eigen/Dense>
#include <functional>

namespace trialfit::optim {

struct SimplexOptions {
  double f_tol_rel = 1e-10;   // relative spread of simplex values
  double x_tol = 1e-8;        // simplex diameter
  int max_evals = 4000;
  double initial_step = 0.5;  // per-coordinate displacement of the start simplex
};

struct SimplexResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int evaluations = 0;
  bool converged = false;
};

// Classic Nelder-Mead with shrink handling. The objective may return +inf
// to signal an infeasible point.
SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                          const Eigen::VectorXd& start, const SimplexOptions& opt = {});

// Brent's minimiser on [lo, hi].
struct BrentResult {
  double x = 0.0;
  double f = 0.0;
  int evaluations = 0;
};
BrentResult brent_min(const std::function<double(double)>& f, double lo, double hi,
                      double tol = 1e-10, int max_iter = 200);

}  // namespace trialfit::optim

#endif
