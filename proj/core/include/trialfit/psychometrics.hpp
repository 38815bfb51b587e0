#ifndef TRIALFIT_PSYCHOMETRICS_HPP
#define TRIALFIT_PSYCHOMETRICS_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

namespace trialfit {

// ---------------------------------------------------------------------------
// Polychoric correlation
// ---------------------------------------------------------------------------

struct PolychoricResult {
  double rho = 0.0;
  bool clamped = false;  // |rho| hit the 0.999 bound
  std::vector<double> thresholds_x, thresholds_y;
};

// Two-step estimator: thresholds from marginal inverse-normal quantiles,
// then rho maximising the bivariate-normal contingency likelihood (bounded
// scalar search). Items are ordinal category codes; each needs >= 2 observed
// categories.
PolychoricResult polychoric(std::span<const int> x, std::span<const int> y);

struct PolychoricMatrix {
  Eigen::MatrixXd corr;
  std::vector<std::pair<int, int>> clamped_pairs;
  bool psd_repaired = false;
  double repair_delta = 0.0;  // max absolute change from the repair
};

// Pairwise polychoric matrix with nearest-PSD repair by eigenvalue clipping
// at 1e-6 (rescaled back to unit diagonal).
PolychoricMatrix polychoric_matrix(const Eigen::MatrixXi& items);

// ---------------------------------------------------------------------------
// Exploratory factor analysis
// ---------------------------------------------------------------------------

struct FactorSolution {
  Eigen::MatrixXd loadings;      // d x k pattern matrix, canonicalised
  Eigen::MatrixXd phi;           // k x k factor correlations (oblimin)
  Eigen::VectorXd communalities; // in [0,1]
  Eigen::VectorXd explained;     // explained-variance proportion per factor
  Eigen::MatrixXd corr;          // the analysed correlation matrix
  double rmsr = 0.0;             // off-diagonal residual root mean square
  bool heywood = false;
  bool converged = false;
  int iterations = 0;
};

// Unweighted least squares extraction (minimise squared off-diagonal
// residuals over communalities) followed by direct-quartimin (oblimin,
// gamma = 0) rotation. The solution is canonicalised: factors ordered by
// explained variance, largest-magnitude loading per factor positive.
FactorSolution efa_uls(const Eigen::MatrixXd& corr, int k);

// ---------------------------------------------------------------------------
// Anchored factor scores
// ---------------------------------------------------------------------------

struct AnchoredScores {
  Eigen::MatrixXd pre;   // n_pre x k
  Eigen::MatrixXd post;  // n_post x k, scored with pre loadings and scaling
};

// Regression-method scores standardised to unit model-implied variance.
// Post data are standardised with pre means/SDs and scored with the pre
// solution, so scores are comparable across time points.
AnchoredScores score_anchored(const FactorSolution& solution, const Eigen::MatrixXd& pre_data,
                              const Eigen::MatrixXd& post_data);

// ---------------------------------------------------------------------------
// K-means
// ---------------------------------------------------------------------------

struct KmeansResult {
  std::vector<int> assignments;
  Eigen::MatrixXd centroids;  // k x d
  double inertia = 0.0;
};

// k-means++ initialisation, Lloyd iterations, `restarts` independent runs
// keeping the best inertia. Deterministic given the seed.
KmeansResult kmeans(const Eigen::MatrixXd& data, int k, std::uint64_t seed, int restarts = 10,
                    int max_iter = 100);

// Column z-scores (mean 0, SD 1); constant columns become 0.
Eigen::MatrixXd standardise_columns(const Eigen::MatrixXd& data);

}  // namespace trialfit

#endif
