#pragma once

#include "hetfx/core_regression.hpp"
#include "hetfx/estimators.hpp"
#include "hetfx/propensity.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hetfx {

enum class DgpFamily { OrdinalBinaryX, OrdinalContinuous, Multinomial, MultinomialAbs };
enum class ErrorDist { Normal, StdChi3 };
enum class SimTable { Ordinal, Multinomial };

struct DgpSpec {
  DgpFamily family = DgpFamily::OrdinalContinuous;
  ErrorDist error_dist = ErrorDist::Normal;
  // Ordinal: the treatment index also carries X2^2 (slope 1). Multinomial: W
  // carries the e^{X3} terms. The estimators never see these terms.
  bool regression_misspec = false;
  Index n = 1000;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

/// Throws InvalidSpecCombination for combinations outside the simulation panels.
void validate_spec(const DgpSpec& spec);

/// Panels 1..4 of either table.
DgpSpec panel_spec(SimTable table, int panel, Index n, std::uint64_t seed);
std::string panel_label(const DgpSpec& spec);

struct SimulatedSample {
  Dataset data;
  MatrixXd true_probs;  // N x (J+1)
  MatrixXd true_mu;     // N x J
  MatrixXd true_index;  // ordinal: N x 1 latent index; multinomial: N x J of W_j'alpha
  VectorXd y0;
};

/// (x - 3) / sqrt(6).
VectorXd standardize_chi3(const VectorXd& raw);
/// CDF of the standardized chi-square(3) variable.
double std_chi3_cdf(double z);

SimulatedSample generate(const DgpSpec& spec);

/// Treatment model the estimators fit for this design: ordered probit on the
/// covariates (constant included) or the five-parameter MNL.
ModelConfig estimation_model(const DgpSpec& spec);
/// Parameter of estimation_model at the truth, when that model is correctly
/// specified.
std::optional<VectorXd> true_alpha(const DgpSpec& spec);

enum class TargetMode { TruePropensity, EstimatedPropensity };

struct MonteCarloOptions {
  int reps = 500;
  std::uint64_t base_seed = 1;
  int threads = 1;
  TargetMode target = TargetMode::TruePropensity;
  std::vector<CenteringVariant> variants = {{Centering::RawMean}, {Centering::CovariatePoly}, {Centering::IndexPoly}};
  std::vector<int> targets = {1, 2};
  bool keep_draws = false;
};

struct MonteCarloRow {
  std::string estimator;
  int d = 1;
  double abs_bias = 0.0;
  double sim_sd = 0.0;  // population SD (divisor R) of the errors, so rmse^2 = bias^2 + sd^2
  double avg_asy_sd = 0.0;
  double rmse = 0.0;
  double coverage = 0.0;  // share of |error| <= 1.96 asy_sd
  std::vector<double> errors;  // per successful rep when keep_draws
  std::vector<double> asy_sds;
};

struct MonteCarloReport {
  std::string panel;
  Index n = 0;
  int reps = 0;
  int failed = 0;
  std::uint64_t base_seed = 0;
  std::vector<MonteCarloRow> rows;
  std::vector<std::string> failures;
};

/// Repetition r draws from stream (base_seed, r). Failed repetitions are
/// excluded; more than 2% of them raises ExcessFailures.
MonteCarloReport run_monte_carlo(const DgpSpec& spec, const MonteCarloOptions& options);

struct DemoReport {
  Index n = 0;
  std::uint64_t seed = 0;
  VectorXd ols_coef;     // (1, D1, D2, X2)
  VectorXd ols_tvalues;
  VectorXd estimand_exact;      // exact cell probabilities
  VectorXd estimand_empirical;  // cell frequencies
  MatrixXd weight_means_exact;
  VectorXd naive_target;  // (1, E X2, 2 E X2, 1) = (1, 0.7, 1.4, 1)
};

DemoReport usual_ols_demo(Index n, std::uint64_t seed);

}  // namespace hetfx
