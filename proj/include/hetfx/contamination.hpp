#pragma once

#include "hetfx/core_regression.hpp"

#include <vector>

namespace hetfx {

/// Assignment of observations to discrete covariate cells 0..n_cells-1.
struct CellLabels {
  std::vector<Index> cell;
  Index n_cells = 0;
};

/// One cell per distinct covariate row, numbered in order of first appearance.
CellLabels cells_from_covariates(const MatrixXd& x);

/// Row i of c_of_x is C(X_i) flattened row-major (entry (j, d) at j*J + d),
/// indices 0..J-1 standing for categories 1..J.
struct ConditionalCov {
  RowMatrixXd c_of_x;
  MatrixXd c_bar;
  int J = 0;

  Index n() const { return c_of_x.rows(); }
  MatrixXd at(Index i) const;
};

/// Empirical within-cell covariances of the treatment dummies. Throws
/// EmptyCell for an unused label and ContinuousCovariate when every
/// observation sits in its own cell.
ConditionalCov conditional_cov(const Dataset& data, const CellLabels& cells);

/// C(X_i) = diag(p_i) - p_i p_i' from exact category probabilities
/// (N x (J+1), column 0 the control). c_bar is the observation average.
ConditionalCov conditional_cov_exact(const MatrixXd& probs);

/// omega row i holds the J x J matrix [omega_kj(X_i)] flattened row-major.
struct ContaminationReport {
  RowMatrixXd omega;
  VectorXd estimand;
  VectorXd usual_ols_slopes;
  MatrixXd weight_means;
  MatrixXd c_bar;
  int J = 0;
  // J >= 4: weights come from the matrix form, which is not proven to carry
  // the estimand interpretation.
  bool conjectured = false;

  double weight(Index i, int k, int j) const { return omega(i, k * J + j); }
};

/// Throws SingularCovariance when |det c_bar| < 1e-12 * scale^J.
void check_invertible(const MatrixXd& c_bar);

// Per-observation weight matrices [omega_kj(X)] from c_bar and C(X).
MatrixXd omega_matrix_form(const MatrixXd& c_bar, const MatrixXd& c_x);
MatrixXd omega_closed_form_j2(const MatrixXd& c_bar, const MatrixXd& c_x);
MatrixXd omega_closed_form_j3(const MatrixXd& c_bar, const MatrixXd& c_x);

/// Closed forms for J = 2, 3; the matrix form otherwise.
ContaminationReport theorem1_weights(const ConditionalCov& cov);

/// estimand_k = mean over i of sum_j omega_kj(X_i) mu_j(X_i); also stores it
/// in the report. `mu` is N x J.
VectorXd theorem1_estimand(ContaminationReport& report, const MatrixXd& mu);

/// Slopes of D_1..D_J in the OLS of y on (D_1, ..., D_J, x).
VectorXd usual_ols(const Dataset& data);

}  // namespace hetfx
