#pragma once

#include "hetfx/core_regression.hpp"
#include "hetfx/propensity.hpp"

#include <limits>
#include <string>
#include <vector>

namespace hetfx {

enum class Centering { RawMean, CovariatePoly, IndexPoly };

/// Which rows the RawMean centering averages over. The default is the whole
/// sample (Y minus the overall mean); Subsample averages over D in {0, d}.
enum class RawMeanScope { FullSample, Subsample };

struct CenteringVariant {
  Centering kind = Centering::IndexPoly;
  int q = 2;
  bool interactions = true;
  RawMeanScope raw_scope = RawMeanScope::FullSample;
};

/// "raw", "covpoly", "indexpoly".
std::string variant_name(const CenteringVariant& v);
/// Inverse of variant_name with default q and interactions.
CenteringVariant parse_variant(const std::string& name);

/// Rows with d_i in {0, d}, ascending. Throws EmptySubsampleSide when either
/// category is absent and BadCategory unless 1 <= d <= J.
std::vector<Index> subsample_mask(const Dataset& data, int d);

/// Basis of the centering regression restricted to `rows`: poly_basis of the
/// non-constant covariates (CovariatePoly) or of the fitted indices
/// (IndexPoly). Empty for RawMean.
DesignMatrix centering_basis(const Dataset& data, std::span<const Index> rows, const CenteringVariant& v,
                             const PropensityFit* fit);
/// poly_basis over index rows; shared with the moment perturbations in inference.
DesignMatrix index_basis(const MatrixXd& indices, std::span<const Index> rows, const CenteringVariant& v);

struct Centered {
  VectorXd centered_y;  // over the mask rows, in mask order
  VectorXd gamma_hat;
  std::vector<std::string> basis_labels;
};

/// Y minus G_X on the mask rows. Polynomial centerings regress y on their
/// basis using the mask rows only.
Centered center_outcome(const Dataset& data, std::span<const Index> mask, const CenteringVariant& v,
                        const PropensityFit* fit);

/// No-intercept slope sum(c * e) / sum(e^2). Throws DegeneratePsr when the
/// residuals are all (numerically) zero.
double olspsr(const VectorXd& centered_y, const VectorXd& psr);

/// D_d - P_d / (P_0 + P_d) on the given rows.
VectorXd psr_on_rows(const Dataset& data, const MatrixXd& probs, int d, std::span<const Index> rows);

struct OverlapWeights {
  std::vector<Index> rows;
  VectorXd w;  // aligned with rows, mean 1
};

/// w proportional to P_0 P_d / (P_0 + P_d), normalized to mean 1 over `rows`
/// (every observation when empty). Rows with P_0 + P_d = 0 get weight 0.
/// Throws DegenerateDenominator when all weights vanish.
OverlapWeights overlap_weights(const MatrixXd& probs, int d, std::span<const Index> rows = {});
OverlapWeights overlap_weights(const PropensityFit& fit, int d, std::span<const Index> rows = {});

/// mean(w * mu_d) with mu_d aligned to weights.rows.
double ow_target(const OverlapWeights& weights, const VectorXd& mu_d);

struct OverlapDiagnostics {
  double min_pi = 0.0;
  double median_pi = 0.0;
  double max_pi = 0.0;
  Index below_001 = 0;
  Index above_099 = 0;
};

OverlapDiagnostics overlap_diagnostics(const VectorXd& pi_d);

struct SubsampleEstimate {
  int d = 1;
  double beta_hat = 0.0;
  CenteringVariant variant;
  Index n_sub = 0;
  std::vector<Index> mask;
  VectorXd psr;
  VectorXd centered_y;
  VectorXd gamma_hat;
  std::vector<std::string> gamma_labels;
  double asy_sd = std::numeric_limits<double>::quiet_NaN();
  OverlapDiagnostics overlap;
};

/// Subsample OLS with propensity-score residuals for target d.
SubsampleEstimate estimate(const Dataset& data, const PropensityFit& fit, int d, const CenteringVariant& v);

}  // namespace hetfx
