#ifndef TRIALFIT_STATS_HPP
#define TRIALFIT_STATS_HPP

#include <array>
#include <cstdint>

namespace trialfit::stats {

// Univariate distribution helpers (thin wrappers over Boost.Math).
double norm_cdf(double z);
double norm_sf(double z);        // upper tail
double norm_quantile(double p);  // inverse CDF, p in (0,1)
double chi2_sf(double x, double df);
double t_cdf(double x, double df);
double t_sf(double x, double df);

double logit(double p);
double inv_logit(double eta);

// Two-sided Wald p-value for z = estimate / se.
double wald_p(double z);

// Standard bivariate normal CDF P(X <= a, Y <= b) with correlation rho.
// Genz's adaptation of the Drezner-Wesolowsky algorithm; |error| < 5e-16.
double bvn_cdf(double a, double b, double rho);

// Probability of one cell of a 2x2 hypergeometric table with fixed margins.
double hypergeom_log_pmf(long a, long row1, long row2, long col1);

// Two-sided Fisher exact p for a 2x2 table, probability-ordering rule:
// sum of P(T) over tables with the observed margins and P(T) <= P(obs).
double fisher_exact_2x2(const std::array<std::array<long, 2>, 2>& table);

}  // namespace trialfit::stats

#endif
