#include "trialfit/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "trialfit/errors.hpp"

namespace trialfit {

const char* errc_name(errc c) {
  switch (c) {
    case errc::missing_column: return "MissingColumn";
    case errc::value_out_of_range: return "ValueOutOfRange";
    case errc::duplicate_key: return "DuplicateKey";
    case errc::unknown_treatment_level: return "UnknownTreatmentLevel";
    case errc::mixed_scales: return "MixedScales";
    case errc::orphan_record: return "OrphanRecord";
    case errc::rank_deficient: return "RankDeficient";
    case errc::unknown_variable: return "UnknownVariable";
    case errc::empty_factor_level: return "EmptyFactorLevel";
    case errc::insufficient_rows: return "InsufficientRows";
    case errc::separation: return "Separation";
    case errc::non_convergence: return "NonConvergence";
    case errc::not_nested: return "NotNested";
    case errc::row_mismatch: return "RowMismatch";
    case errc::single_observation_per_group_with_slope:
      return "SingleObservationPerGroupWithSlope";
    case errc::no_random_slope: return "NoRandomSlope";
    case errc::non_nested_chain: return "NonNestedChain";
    case errc::grid_outside_design: return "GridOutsideDesign";
    case errc::no_time_term: return "NoTimeTerm";
    case errc::non_monotone_curve: return "NonMonotoneCurve";
    case errc::score_out_of_range: return "ScoreOutOfRange";
    case errc::invalid_p: return "InvalidP";
    case errc::duplicate_test_id: return "DuplicateTestId";
    case errc::empty_overlap: return "EmptyOverlap";
    case errc::zero_cell: return "ZeroCell";
    case errc::non_positive_risk_diff: return "NonPositiveRiskDiff";
    case errc::degenerate_variance: return "DegenerateVariance";
    case errc::degenerate_margin: return "DegenerateMargin";
    case errc::heywood_case: return "HeywoodCase";
    case errc::item_mismatch: return "ItemMismatch";
    case errc::fewer_points_than_clusters: return "FewerPointsThanClusters";
    case errc::invalid_config: return "InvalidConfig";
    case errc::missing_results: return "MissingResults";
    case errc::io_error: return "IoError";
  }
  return "UnknownError";
}

error_kind kind_of(errc c) {
  switch (c) {
    case errc::invalid_config:
    case errc::unknown_variable:
    case errc::missing_results:
      return error_kind::config;
    case errc::rank_deficient:
    case errc::non_convergence:
    case errc::separation:
    case errc::heywood_case:
      return error_kind::numeric;
    default:
      return error_kind::data;
  }
}

}  // namespace trialfit

namespace trialfit::stats {

namespace bm = boost::math;

double norm_cdf(double z) { return bm::cdf(bm::normal_distribution<>(), z); }
double norm_sf(double z) { return bm::cdf(bm::complement(bm::normal_distribution<>(), z)); }
double norm_quantile(double p) { return bm::quantile(bm::normal_distribution<>(), p); }

double chi2_sf(double x, double df) {
  if (x <= 0.0) return 1.0;
  return bm::cdf(bm::complement(bm::chi_squared_distribution<>(df), x));
}

double t_cdf(double x, double df) { return bm::cdf(bm::students_t_distribution<>(df), x); }
double t_sf(double x, double df) {
  return bm::cdf(bm::complement(bm::students_t_distribution<>(df), x));
}

double logit(double p) { return std::log(p / (1.0 - p)); }
double inv_logit(double eta) {
  if (eta >= 0) {
    const double e = std::exp(-eta);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double wald_p(double z) { return 2.0 * norm_sf(std::fabs(z)); }

// ---------------------------------------------------------------------------
// Bivariate normal CDF (Genz 2004, single-precision Drezner-Wesolowsky nodes
// upgraded to the 20-point rule for |rho| close to 1).
// ---------------------------------------------------------------------------

namespace {

// Gauss-Legendre abscissae/weights on (-1,1), split by |rho| regime.
const double kGx1[3] = {-0.9324695142031522, -0.6612093864662647, -0.2386191860831970};
const double kGw1[3] = {0.1713244923791705, 0.3607615730481384, 0.4679139345726904};
const double kGx2[6] = {-0.9815606342467191, -0.9041172563704750, -0.7699026741943050,
                        -0.5873179542866171, -0.3678314989981802, -0.1252334085114692};
const double kGw2[6] = {0.04717533638651177, 0.1069393259953183, 0.1600783285433464,
                        0.2031674267230659,  0.2334925365383547, 0.2491470458134029};
const double kGx3[10] = {-0.9931285991850949, -0.9639719272779138, -0.9122344282513259,
                         -0.8391169718222188, -0.7463319064601508, -0.6360536807265150,
                         -0.5108670019508271, -0.3737060887154196, -0.2277858511416451,
                         -0.07652652113349733};
const double kGw3[10] = {0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
                         0.08327674157670475, 0.1019301198172404,  0.1181945319615184,
                         0.1316886384491766,  0.1420961093183821,  0.1491729864726037,
                         0.1527533871307259};

}  // namespace

double bvn_cdf(double a, double b, double rho) {
  // Work with P(X > -a, Y > -b) as in the original BVND routine.
  double h = -a, k = -b;
  const double twopi = 6.283185307179586;

  const double* gx;
  const double* gw;
  int ng;
  const double ar = std::fabs(rho);
  if (ar < 0.3) {
    gx = kGx1; gw = kGw1; ng = 3;
  } else if (ar < 0.75) {
    gx = kGx2; gw = kGw2; ng = 6;
  } else {
    gx = kGx3; gw = kGw3; ng = 10;
  }

  double hk = h * k;
  double bvn = 0.0;
  if (ar < 0.925) {
    const double hs = (h * h + k * k) / 2.0;
    const double asr = std::asin(rho);
    for (int i = 0; i < ng; ++i) {
      for (int is = -1; is <= 1; is += 2) {
        const double sn = std::sin(asr * (is * gx[i] + 1.0) / 2.0);
        bvn += gw[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
      }
    }
    bvn = bvn * asr / (2.0 * twopi) + norm_cdf(-h) * norm_cdf(-k);
  } else {
    if (rho < 0) {
      k = -k;
      hk = -hk;
    }
    if (ar < 1.0) {
      const double as = (1.0 - rho) * (1.0 + rho);
      double aa = std::sqrt(as);
      const double bs = (h - k) * (h - k);
      const double c = (4.0 - hk) / 8.0;
      const double d = (12.0 - hk) / 16.0;
      const double asr0 = -(bs / as + hk) / 2.0;
      if (asr0 > -100.0) {
        bvn = aa * std::exp(asr0) *
              (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
      }
      if (-hk < 100.0) {
        const double bb = std::sqrt(bs);
        bvn -= std::exp(-hk / 2.0) * std::sqrt(twopi) * norm_cdf(-bb / aa) * bb *
               (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
      }
      aa = aa / 2.0;
      for (int i = 0; i < ng; ++i) {
        for (int is = -1; is <= 1; is += 2) {
          const double xl = aa * (is * gx[i] + 1.0);
          const double xs = xl * xl;
          const double rs = std::sqrt(1.0 - xs);
          const double asr1 = -(bs / xs + hk) / 2.0;
          if (asr1 > -100.0) {
            const double sp = 1.0 + c * xs * (1.0 + d * xs);
            const double ep = std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs;
            bvn += aa * gw[i] * std::exp(asr1) * (ep - sp);
          }
        }
      }
      bvn = -bvn / twopi;
    }
    if (rho > 0) {
      bvn += norm_cdf(-std::max(h, k));
    } else {
      bvn = -bvn;
      if (k > h) bvn += norm_cdf(k) - norm_cdf(h);
    }
  }
  return std::clamp(bvn, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Fisher's exact test
// ---------------------------------------------------------------------------

double hypergeom_log_pmf(long a, long row1, long row2, long col1) {
  const long n = row1 + row2;
  auto lchoose = [](long nn, long kk) {
    return std::lgamma(double(nn) + 1.0) - std::lgamma(double(kk) + 1.0) -
           std::lgamma(double(nn - kk) + 1.0);
  };
  return lchoose(row1, a) + lchoose(row2, col1 - a) - lchoose(n, col1);
}

double fisher_exact_2x2(const std::array<std::array<long, 2>, 2>& t) {
  const long r1 = t[0][0] + t[0][1];
  const long r2 = t[1][0] + t[1][1];
  const long c1 = t[0][0] + t[1][0];
  const long lo = std::max(0L, c1 - r2);
  const long hi = std::min(r1, c1);
  if (lo >= hi) return 1.0;  // degenerate margin: a single feasible table

  const double lobs = hypergeom_log_pmf(t[0][0], r1, r2, c1);
  // Probability-ordering rule with a relative slack for ties.
  const double cutoff = lobs + 1e-7;
  double p = 0.0;
  for (long a = lo; a <= hi; ++a) {
    const double lp = hypergeom_log_pmf(a, r1, r2, c1);
    if (lp <= cutoff) p += std::exp(lp);
  }
  return std::min(p, 1.0);
}

}  // namespace trialfit::stats
