#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace hetfx {

using Index = Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// The observed (Y, D, X) triple. `d` holds categories 0..J with 0 the
/// control; `x` may carry an explicit constant column.
struct Dataset {
  VectorXd y;
  std::vector<int> d;
  MatrixXd x;
  int J = 0;
  std::vector<std::string> x_labels;

  Index n() const { return y.size(); }
};

/// Throws DataError / OutOfRangeCategory / DimensionMismatch on a malformed dataset.
void validate(const Dataset& data);

Dataset select_rows(const Dataset& data, std::span<const Index> rows);

struct DesignMatrix {
  MatrixXd columns;
  std::vector<std::string> column_labels;

  Index rows() const { return columns.rows(); }
  Index cols() const { return columns.cols(); }
};

struct OlsFit {
  VectorXd coef;
  VectorXd residuals;
  VectorXd fitted;
};

inline constexpr double kRankTolerance = 1e-10;

/// Least squares via Householder QR on norm-scaled columns. Throws
/// RankDeficientError naming the first column whose scaled pivot falls below
/// kRankTolerance.
OlsFit fit_ols(const MatrixXd& design, const VectorXd& response);
OlsFit fit_ols(const DesignMatrix& design, const VectorXd& response);

/// Classical (homoskedastic) or HC0 standard errors for a fit from fit_ols.
VectorXd ols_standard_errors(const MatrixXd& design, const OlsFit& fit, bool robust = false);

/// Column j-1 holds 1[d_i = j] for j = 1..J.
MatrixXd make_dummies(std::span<const int> d, int J);

/// Fitted values of the OLS of `target` on `x` (sample linear projection).
VectorXd linear_projection(const VectorXd& target, const MatrixXd& x);

/// Constant column, then pure powers ordered by degree and variable
/// (x1, x2, ..., x1^2, x2^2, ...), then when `with_interactions` the
/// products x_a^p x_b^r (a < b, p, r >= 1) ordered by total degree, then pair,
/// then descending p. For two covariates and q = 2 this is
/// (1, x1, x2, x1^2, x2^2, x1*x2).
DesignMatrix poly_basis(const MatrixXd& x, int q, bool with_interactions,
                        const std::vector<std::string>& labels = {});

/// Indices of columns of `x` that are not constant.
std::vector<Index> non_constant_columns(const MatrixXd& x);

// Standard normal helpers.
double norm_pdf(double z);
double norm_cdf(double z);
/// Upper tail 1 - Phi(z) without cancellation.
double norm_sf(double z);
/// Phi(hi) - Phi(lo) for lo <= hi, accurate in both tails.
double norm_interval(double lo, double hi);

}  // namespace hetfx
