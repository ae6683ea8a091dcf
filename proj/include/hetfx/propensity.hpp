#pragma once

#include "hetfx/core_regression.hpp"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hetfx {

enum class ModelKind { OrderedProbit, Mnl };

/// A parametric model for P(D = j | X), j = 0..J, bound to a fixed covariate
/// sample. Optimization runs over an unconstrained theta; alpha is the
/// reported (identified) parameter.
class TreatmentModel {
 public:
  virtual ~TreatmentModel() = default;

  virtual ModelKind kind() const = 0;
  virtual int J() const = 0;
  virtual Index n() const = 0;
  virtual Index n_params() const = 0;
  virtual std::vector<std::string> param_labels() const = 0;

  /// N x (J+1).
  virtual MatrixXd probabilities(const VectorXd& alpha) const = 0;
  /// Ordered probit: N x 1 holding X'kappa. MNL: N x J holding W_j'alpha.
  virtual MatrixXd indices(const VectorXd& alpha) const = 0;
  /// Row i is the gradient of log P_{d_i}(alpha; X_i) with respect to alpha.
  virtual MatrixXd scores(const VectorXd& alpha, std::span<const int> d) const = 0;

  virtual VectorXd to_alpha(const VectorXd& theta) const { return theta; }
  /// d alpha / d theta.
  virtual MatrixXd alpha_jacobian(const VectorXd& theta) const {
    return MatrixXd::Identity(theta.size(), theta.size());
  }
  /// Hessian of the mean log-likelihood in theta. Defaults to central
  /// differences of the analytic gradient.
  virtual MatrixXd mean_hessian_theta(const VectorXd& theta, std::span<const int> d) const;

  VectorXd mean_gradient_theta(const VectorXd& theta, std::span<const int> d) const;
  /// Mean log-likelihood with probabilities floored at 1e-300.
  double mean_loglik(const VectorXd& alpha, std::span<const int> d) const;
};

/// Thresholds tau_1 = 0 < tau_2 < ... < tau_J, sigma = 1. alpha is
/// (kappa over every column of x, tau_2, ..., tau_J). Put a constant column in
/// x to free the intercept; its slope is then the identified (kappa_1 - tau_1).
class OrderedProbitModel final : public TreatmentModel {
 public:
  OrderedProbitModel(MatrixXd x, int J, std::vector<std::string> labels = {});

  ModelKind kind() const override { return ModelKind::OrderedProbit; }
  int J() const override { return J_; }
  Index n() const override { return x_.rows(); }
  Index n_params() const override { return x_.cols() + J_ - 1; }
  std::vector<std::string> param_labels() const override;

  MatrixXd probabilities(const VectorXd& alpha) const override;
  MatrixXd indices(const VectorXd& alpha) const override;
  MatrixXd scores(const VectorXd& alpha, std::span<const int> d) const override;

  // theta carries log gaps between consecutive thresholds.
  VectorXd to_alpha(const VectorXd& theta) const override;
  MatrixXd alpha_jacobian(const VectorXd& theta) const override;

  const MatrixXd& x() const { return x_; }
  /// (tau_0, ..., tau_{J+1}) with the infinite end points.
  std::vector<double> thresholds(const VectorXd& alpha) const;

 private:
  MatrixXd x_;
  int J_;
  std::vector<std::string> labels_;
};

/// One entry of W_alternative: slot `param` receives scale * f(x_covariate)
/// where f is the identity or exp, and covariate -1 means the constant 1.
struct MnlTerm {
  int alternative = 1;
  Index param = 0;
  Index covariate = -1;
  double scale = 1.0;
  bool exp_transform = false;
};

struct MnlSpec {
  int J = 2;
  Index alpha_len = 0;
  std::vector<MnlTerm> terms;
  std::vector<std::string> param_labels;
};

/// P_d = exp(W_d'alpha) / (1 + sum_j exp(W_j'alpha)); the base alternative
/// contributes the fixed 1.
class MnlModel final : public TreatmentModel {
 public:
  MnlModel(const MatrixXd& x, const MnlSpec& spec);

  ModelKind kind() const override { return ModelKind::Mnl; }
  int J() const override { return J_; }
  Index n() const override { return n_; }
  Index n_params() const override { return p_; }
  std::vector<std::string> param_labels() const override { return labels_; }

  MatrixXd probabilities(const VectorXd& alpha) const override;
  MatrixXd indices(const VectorXd& alpha) const override;
  MatrixXd scores(const VectorXd& alpha, std::span<const int> d) const override;
  MatrixXd mean_hessian_theta(const VectorXd& theta, std::span<const int> d) const override;

  /// W_j for j = 1..J at position j-1, each N x alpha_len.
  const std::vector<MatrixXd>& w() const { return w_; }

 private:
  Index n_;
  int J_;
  Index p_;
  std::vector<MatrixXd> w_;
  std::vector<std::string> labels_;
};

/// The W_1, W_2 design used in the multinomial simulations, for covariates
/// (X0, X1, X2, X3): W_1 = (-X0, X1, 0, X3, 0), W_2 = (-X0, 0, X2, 0, X3).
/// With `with_exp_terms` the e^{X3} slots are added:
/// W_1 = (-X0, X1, 0, X3, e^X3, 0, 0), W_2 = (-X0, 0, X2, 0, 0, X3, e^X3).
MnlSpec simulation_mnl_spec(bool with_exp_terms = false);

/// Data-free model description; build() binds it to a dataset's covariates.
struct ModelConfig {
  ModelKind kind = ModelKind::OrderedProbit;
  MnlSpec mnl;

  std::shared_ptr<const TreatmentModel> build(const Dataset& data) const;
};

struct FitOptions {
  int max_iterations = 100;
  double grad_tol = 1e-6;
  double step_tol = 1e-8;
};

struct PropensityFit {
  std::shared_ptr<const TreatmentModel> model;  // null for externally supplied probabilities
  VectorXd alpha_hat;
  MatrixXd probs;
  MatrixXd indices;
  MatrixXd scores;
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  double min_prob = 0.0;

  int J() const { return static_cast<int>(probs.cols()) - 1; }
  Index n() const { return probs.rows(); }
  Index n_params() const { return alpha_hat.size(); }
};

/// Newton ascent from theta = 0 with step halving. Throws MissingCategory,
/// NonconvergenceError and SeparationSuspected (fitted probability of some
/// observed category below 1e-12).
PropensityFit fit_propensity(std::shared_ptr<const TreatmentModel> model, std::span<const int> d,
                             const FitOptions& options = {});
PropensityFit fit_ordered_probit(const MatrixXd& x, std::span<const int> d, int J,
                                 const FitOptions& options = {});
PropensityFit fit_mnl(const MatrixXd& x, const MnlSpec& spec, std::span<const int> d,
                      const FitOptions& options = {});

/// The model evaluated at a known alpha (for example the DGP truth).
PropensityFit propensity_at(std::shared_ptr<const TreatmentModel> model, const VectorXd& alpha,
                            std::span<const int> d);
/// Known probabilities with no estimated parameters; `indices` feeds index
/// centering and may be empty.
PropensityFit propensity_from_probs(MatrixXd probs, MatrixXd indices = {});

/// Throws BadCategory unless 0 <= j <= J.
VectorXd category_probs(const PropensityFit& fit, int j);
/// P_d / (P_0 + P_d). Throws DegenerateDenominator when P_0 + P_d < 1e-12.
VectorXd pairwise_propensity(const PropensityFit& fit, int d);
const MatrixXd& score_vectors(const PropensityFit& fit);
/// Standard errors of alpha_hat from the inverse outer product of scores.
VectorXd opg_standard_errors(const PropensityFit& fit);

}  // namespace hetfx
