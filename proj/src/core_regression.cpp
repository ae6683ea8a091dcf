#include "hetfx/core_regression.hpp"

#include "hetfx/error.hpp"

#include <cmath>
#include <numbers>

namespace hetfx {

void validate(const Dataset& data) {
  const Index n = data.y.size();
  if (static_cast<Index>(data.d.size()) != n || data.x.rows() != n) {
    throw Error(ErrorKind::DimensionMismatch, "y, d and x must have the same number of rows");
  }
  if (data.J < 1) throw Error(ErrorKind::DataError, "need at least one non-control category (J >= 1)");
  if (n <= data.x.cols()) throw Error(ErrorKind::DataError, "need more observations than covariates");
  for (Index i = 0; i < n; ++i) {
    if (data.d[i] < 0 || data.d[i] > data.J) {
      throw Error(ErrorKind::OutOfRangeCategory,
                  "category out of range at row " + std::to_string(i) + ": " + std::to_string(data.d[i]));
    }
    if (!std::isfinite(data.y[i])) {
      throw Error(ErrorKind::DataError, "non-finite outcome at row " + std::to_string(i));
    }
  }
  for (Index c = 0; c < data.x.cols(); ++c) {
    for (Index i = 0; i < n; ++i) {
      if (!std::isfinite(data.x(i, c))) {
        throw Error(ErrorKind::DataError, "non-finite covariate at row " + std::to_string(i) +
                                              ", column " + std::to_string(c));
      }
    }
  }
}

Dataset select_rows(const Dataset& data, std::span<const Index> rows) {
  Dataset out;
  out.J = data.J;
  out.x_labels = data.x_labels;
  const auto m = static_cast<Index>(rows.size());
  out.y.resize(m);
  out.d.resize(rows.size());
  out.x.resize(m, data.x.cols());
  for (Index k = 0; k < m; ++k) {
    const Index i = rows[k];
    out.y[k] = data.y[i];
    out.d[k] = data.d[i];
    out.x.row(k) = data.x.row(i);
  }
  return out;
}

OlsFit fit_ols(const MatrixXd& design, const VectorXd& response) {
  if (design.rows() != response.size()) {
    throw Error(ErrorKind::DimensionMismatch, "design has " + std::to_string(design.rows()) +
                                                  " rows, response has " + std::to_string(response.size()));
  }
  const Index p = design.cols();
  if (design.rows() < p) throw RankDeficientError(design.rows(), "fewer rows than columns");

  VectorXd scale = design.colwise().norm().transpose();
  for (Index j = 0; j < p; ++j) {
    if (!(scale[j] > 0.0)) throw RankDeficientError(j, "column " + std::to_string(j) + " is zero");
  }
  MatrixXd scaled = design * scale.cwiseInverse().asDiagonal();
  Eigen::HouseholderQR<MatrixXd> qr(scaled);
  const MatrixXd& packed = qr.matrixQR();
  for (Index j = 0; j < p; ++j) {
    if (std::abs(packed(j, j)) < kRankTolerance) {
      throw RankDeficientError(j, "column " + std::to_string(j) + " is collinear with earlier columns");
    }
  }
  VectorXd qty = qr.householderQ().adjoint() * response;
  VectorXd b = packed.topLeftCorner(p, p).triangularView<Eigen::Upper>().solve(qty.head(p));

  OlsFit fit;
  fit.coef = b.cwiseQuotient(scale);
  fit.fitted = design * fit.coef;
  fit.residuals = response - fit.fitted;
  return fit;
}

OlsFit fit_ols(const DesignMatrix& design, const VectorXd& response) {
  return fit_ols(design.columns, response);
}

VectorXd ols_standard_errors(const MatrixXd& design, const OlsFit& fit, bool robust) {
  const Index n = design.rows();
  const Index p = design.cols();
  MatrixXd xtx_inv = (design.transpose() * design).ldlt().solve(MatrixXd::Identity(p, p));
  MatrixXd cov;
  if (robust) {
    MatrixXd meat = design.transpose() * fit.residuals.array().square().matrix().asDiagonal() * design;
    cov = xtx_inv * meat * xtx_inv;
  } else {
    const double s2 = fit.residuals.squaredNorm() / static_cast<double>(n - p);
    cov = s2 * xtx_inv;
  }
  return cov.diagonal().cwiseSqrt();
}

MatrixXd make_dummies(std::span<const int> d, int J) {
  MatrixXd out = MatrixXd::Zero(static_cast<Index>(d.size()), J);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] < 0 || d[i] > J) {
      throw Error(ErrorKind::OutOfRangeCategory,
                  "category out of range at row " + std::to_string(i) + ": " + std::to_string(d[i]));
    }
    if (d[i] > 0) out(static_cast<Index>(i), d[i] - 1) = 1.0;
  }
  return out;
}

VectorXd linear_projection(const VectorXd& target, const MatrixXd& x) {
  return fit_ols(x, target).fitted;
}

DesignMatrix poly_basis(const MatrixXd& x, int q, bool with_interactions,
                        const std::vector<std::string>& labels) {
  if (q < 0) throw Error(ErrorKind::InvalidArgument, "polynomial order must be >= 0");
  const Index n = x.rows();
  const Index k = x.cols();
  auto name = [&](Index v) {
    return v < static_cast<Index>(labels.size()) ? labels[v] : "x" + std::to_string(v + 1);
  };
  auto power_label = [&](Index v, int p) { return p == 1 ? name(v) : name(v) + "^" + std::to_string(p); };

  std::vector<VectorXd> cols;
  std::vector<std::string> names;
  cols.push_back(VectorXd::Ones(n));
  names.emplace_back("1");
  for (int p = 1; p <= q; ++p) {
    for (Index v = 0; v < k; ++v) {
      cols.push_back(x.col(v).array().pow(p).matrix());
      names.push_back(power_label(v, p));
    }
  }
  if (with_interactions) {
    for (int total = 2; total <= q; ++total) {
      for (Index a = 0; a < k; ++a) {
        for (Index b = a + 1; b < k; ++b) {
          for (int p = total - 1; p >= 1; --p) {
            const int r = total - p;
            cols.push_back((x.col(a).array().pow(p) * x.col(b).array().pow(r)).matrix());
            names.push_back(power_label(a, p) + "*" + power_label(b, r));
          }
        }
      }
    }
  }
  DesignMatrix out;
  out.columns.resize(n, static_cast<Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.columns.col(static_cast<Index>(c)) = cols[c];
  out.column_labels = std::move(names);
  return out;
}

std::vector<Index> non_constant_columns(const MatrixXd& x) {
  std::vector<Index> out;
  for (Index c = 0; c < x.cols(); ++c) {
    if (x.rows() > 0 && (x.col(c).array() != x(0, c)).any()) out.push_back(c);
  }
  return out;
}

double norm_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double norm_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double norm_interval(double lo, double hi) {
  if (lo > 0.0) return norm_sf(lo) - norm_sf(hi);
  return norm_cdf(hi) - norm_cdf(lo);
}

}  // namespace hetfx
