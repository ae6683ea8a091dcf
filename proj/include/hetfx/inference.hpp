#pragma once

#include "hetfx/estimators.hpp"
#include "hetfx/propensity.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace hetfx {

/// The estimating equation of the subsample OLS_psr,
///   m_i(b, a) = D0d_i [Y_i - G(a; X_i) - b e_i(a)] e_i(a),
///   e_i(a) = D_d,i - P_d(a; X_i) / (P_0(a; X_i) + P_d(a; X_i)),
/// holding the centering coefficients at their estimates. G depends on a only
/// through the fitted indices (index centering).
class MomentFunction {
 public:
  MomentFunction(const Dataset& data, const PropensityFit& fit, const SubsampleEstimate& est);

  /// Length N, zero outside the subsample.
  VectorXd per_observation(double b, const VectorXd& a) const;
  double mean(double b, const VectorXd& a) const;

 private:
  const Dataset& data_;
  const PropensityFit& fit_;
  const SubsampleEstimate& est_;
  VectorXd fixed_g_;  // G on the mask rows when it does not depend on a
};

/// Central differences of the mean moment in each a_k with step
/// rel_step * max(1, |a_k|).
VectorXd numeric_L(const MomentFunction& moment, double beta_hat, const VectorXd& alpha_hat,
                   double rel_step = 1e-5);

struct VarianceReport {
  double omega_hat = 0.0;
  double asy_sd = 0.0;
  // Same formula with the first-step term L eta dropped.
  double asy_sd_no_correction = 0.0;
  double a_hat = 0.0;  // N^-1 sum D0d e^2
  VectorXd L_hat;
  MatrixXd eta;
  VectorXd moment_term;      // D0d V e, length N
  VectorXd correction_term;  // L eta_i, length N
  VectorXd influence;        // zeta_i / a_hat
};

/// Throws SingularScoreOuterProduct when the averaged score outer product is
/// not invertible. A fit without parameters gives L = 0.
VarianceReport asy_variance(const SubsampleEstimate& est, const PropensityFit& fit, const Dataset& data);

struct CovarianceReport {
  VectorXd beta;
  MatrixXd cov_matrix;
  // beta' V^-1 beta for the joint null that every target effect is zero.
  std::optional<double> wald;
};

/// Asymptotic covariance of several estimates sharing one sample and
/// propensity fit.
CovarianceReport asy_covariance(std::span<const SubsampleEstimate> estimates, const PropensityFit& fit,
                                const Dataset& data);

/// Everything needed to recompute one estimate from raw data.
struct PipelineConfig {
  ModelConfig model;
  int d = 1;
  CenteringVariant variant;
  FitOptions fit;
};

double run_pipeline(const Dataset& data, const PipelineConfig& config);

struct BootstrapResult {
  double se = 0.0;
  int requested = 0;
  int dropped = 0;
  bool drop_warning = false;  // more than 5% of replicates failed
  std::vector<double> draws;  // successful replicates in replicate order
};

/// Pairs bootstrap. Replicate b draws from stream (seed, b), so the result is
/// independent of `threads`. Failed replicates are dropped and counted.
BootstrapResult bootstrap_se(const Dataset& data, const PipelineConfig& config, int B, std::uint64_t seed,
                             int threads = 1);

}  // namespace hetfx
