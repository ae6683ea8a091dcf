#include "hetfx/contamination.hpp"

#include "hetfx/error.hpp"

#include <cmath>
#include <map>

namespace hetfx {

CellLabels cells_from_covariates(const MatrixXd& x) {
  CellLabels out;
  out.cell.resize(static_cast<std::size_t>(x.rows()));
  std::map<std::vector<double>, Index> seen;
  for (Index i = 0; i < x.rows(); ++i) {
    std::vector<double> key;
    key.reserve(static_cast<std::size_t>(x.cols()));
    for (Index c = 0; c < x.cols(); ++c) key.push_back(x(i, c));
    auto [it, inserted] = seen.try_emplace(std::move(key), out.n_cells);
    if (inserted) ++out.n_cells;
    out.cell[static_cast<std::size_t>(i)] = it->second;
  }
  return out;
}

MatrixXd ConditionalCov::at(Index i) const {
  MatrixXd m(J, J);
  for (int j = 0; j < J; ++j)
    for (int d = 0; d < J; ++d) m(j, d) = c_of_x(i, j * J + d);
  return m;
}

namespace {

void store(RowMatrixXd& dst, Index i, const MatrixXd& m) {
  const Index J = m.rows();
  for (Index j = 0; j < J; ++j)
    for (Index d = 0; d < J; ++d) dst(i, j * J + d) = m(j, d);
}

MatrixXd multinomial_cov(const VectorXd& p) {
  MatrixXd c = -p * p.transpose();
  c.diagonal() += p;
  return c;
}

}  // namespace

ConditionalCov conditional_cov(const Dataset& data, const CellLabels& cells) {
  validate(data);
  const Index n = data.n();
  const int J = data.J;
  if (static_cast<Index>(cells.cell.size()) != n) {
    throw Error(ErrorKind::DimensionMismatch, "cell labels must have one entry per observation");
  }
  if (cells.n_cells >= n && n > 1) {
    throw Error(ErrorKind::ContinuousCovariate,
                "every observation is its own covariate cell; the decomposition needs discrete X");
  }
  // Cell frequencies 1[D = j] summed per cell; within a cell the dummies are
  // mutually exclusive, so their covariance is that of a multinomial draw.
  MatrixXd freq = MatrixXd::Zero(cells.n_cells, J);
  VectorXd count = VectorXd::Zero(cells.n_cells);
  for (Index i = 0; i < n; ++i) {
    const Index c = cells.cell[static_cast<std::size_t>(i)];
    if (c < 0 || c >= cells.n_cells) throw Error(ErrorKind::DimensionMismatch, "cell label out of range");
    count[c] += 1.0;
    if (data.d[i] > 0) freq(c, data.d[i] - 1) += 1.0;
  }
  std::vector<MatrixXd> per_cell(static_cast<std::size_t>(cells.n_cells));
  ConditionalCov out;
  out.J = J;
  out.c_bar = MatrixXd::Zero(J, J);
  for (Index c = 0; c < cells.n_cells; ++c) {
    if (count[c] == 0.0) throw Error(ErrorKind::EmptyCell, "covariate cell " + std::to_string(c) + " is empty");
    per_cell[static_cast<std::size_t>(c)] = multinomial_cov(freq.row(c).transpose() / count[c]);
    out.c_bar += count[c] * per_cell[static_cast<std::size_t>(c)];
  }
  out.c_bar /= static_cast<double>(n);
  out.c_of_x.resize(n, J * J);
  for (Index i = 0; i < n; ++i) store(out.c_of_x, i, per_cell[static_cast<std::size_t>(cells.cell[static_cast<std::size_t>(i)])]);
  return out;
}

ConditionalCov conditional_cov_exact(const MatrixXd& probs) {
  if (probs.cols() < 2) throw Error(ErrorKind::InvalidArgument, "need probabilities for at least two categories");
  const Index n = probs.rows();
  const int J = static_cast<int>(probs.cols() - 1);
  ConditionalCov out;
  out.J = J;
  out.c_of_x.resize(n, J * J);
  out.c_bar = MatrixXd::Zero(J, J);
  for (Index i = 0; i < n; ++i) {
    MatrixXd c = multinomial_cov(probs.row(i).tail(J).transpose());
    store(out.c_of_x, i, c);
    out.c_bar += c;
  }
  out.c_bar /= static_cast<double>(n);
  return out;
}

void check_invertible(const MatrixXd& c_bar) {
  const double scale = c_bar.cwiseAbs().maxCoeff();
  const double det = c_bar.determinant();
  if (!(scale > 0.0) || !(std::abs(det) >= 1e-12 * std::pow(scale, static_cast<double>(c_bar.rows())))) {
    throw Error(ErrorKind::SingularCovariance, "averaged conditional covariance matrix is singular (det = " +
                                                   std::to_string(det) + ")");
  }
}

MatrixXd omega_matrix_form(const MatrixXd& c_bar, const MatrixXd& c_x) {
  return c_bar.partialPivLu().solve(c_x);
}

MatrixXd omega_closed_form_j2(const MatrixXd& c, const MatrixXd& cx) {
  const double det = c(0, 0) * c(1, 1) - c(0, 1) * c(0, 1);
  MatrixXd w(2, 2);
  for (int j = 0; j < 2; ++j) {
    w(0, j) = (c(1, 1) * cx(0, j) - c(0, 1) * cx(1, j)) / det;
    w(1, j) = (c(0, 0) * cx(1, j) - c(1, 0) * cx(0, j)) / det;
  }
  return w;
}

MatrixXd omega_closed_form_j3(const MatrixXd& c, const MatrixXd& cx) {
  // Adjugate of c; row k of adj(c) / det applied to column j of C(X).
  MatrixXd adj(3, 3);
  adj(0, 0) = c(1, 1) * c(2, 2) - c(1, 2) * c(2, 1);
  adj(0, 1) = -(c(0, 1) * c(2, 2) - c(0, 2) * c(2, 1));
  adj(0, 2) = c(0, 1) * c(1, 2) - c(0, 2) * c(1, 1);
  adj(1, 0) = -(c(1, 0) * c(2, 2) - c(1, 2) * c(2, 0));
  adj(1, 1) = c(0, 0) * c(2, 2) - c(0, 2) * c(2, 0);
  adj(1, 2) = -(c(0, 0) * c(1, 2) - c(0, 2) * c(1, 0));
  adj(2, 0) = c(1, 0) * c(2, 1) - c(1, 1) * c(2, 0);
  adj(2, 1) = -(c(0, 0) * c(2, 1) - c(0, 1) * c(2, 0));
  adj(2, 2) = c(0, 0) * c(1, 1) - c(0, 1) * c(1, 0);
  const double det = c(0, 0) * (c(1, 1) * c(2, 2) - c(1, 2) * c(2, 1)) -
                     c(1, 0) * (c(0, 1) * c(2, 2) - c(0, 2) * c(2, 1)) +
                     c(2, 0) * (c(0, 1) * c(1, 2) - c(0, 2) * c(1, 1));
  MatrixXd w(3, 3);
  for (int k = 0; k < 3; ++k)
    for (int j = 0; j < 3; ++j)
      w(k, j) = (adj(k, 0) * cx(0, j) + adj(k, 1) * cx(1, j) + adj(k, 2) * cx(2, j)) / det;
  return w;
}

ContaminationReport theorem1_weights(const ConditionalCov& cov) {
  const int J = cov.J;
  check_invertible(cov.c_bar);
  ContaminationReport rep;
  rep.J = J;
  rep.c_bar = cov.c_bar;
  rep.conjectured = J >= 4;
  rep.omega.resize(cov.n(), J * J);
  rep.weight_means = MatrixXd::Zero(J, J);
  for (Index i = 0; i < cov.n(); ++i) {
    const MatrixXd cx = cov.at(i);
    MatrixXd w;
    if (J == 2) {
      w = omega_closed_form_j2(cov.c_bar, cx);
    } else if (J == 3) {
      w = omega_closed_form_j3(cov.c_bar, cx);
    } else {
      w = omega_matrix_form(cov.c_bar, cx);
    }
    store(rep.omega, i, w);
    rep.weight_means += w;
  }
  if (cov.n() > 0) rep.weight_means /= static_cast<double>(cov.n());
  return rep;
}

VectorXd theorem1_estimand(ContaminationReport& report, const MatrixXd& mu) {
  const int J = report.J;
  if (mu.rows() != report.omega.rows() || mu.cols() != J) {
    throw Error(ErrorKind::DimensionMismatch, "mu must be N x J");
  }
  VectorXd est = VectorXd::Zero(J);
  for (Index i = 0; i < mu.rows(); ++i)
    for (int k = 0; k < J; ++k)
      for (int j = 0; j < J; ++j) est[k] += report.weight(i, k, j) * mu(i, j);
  if (mu.rows() > 0) est /= static_cast<double>(mu.rows());
  report.estimand = est;
  return est;
}

VectorXd usual_ols(const Dataset& data) {
  validate(data);
  MatrixXd design(data.n(), data.J + data.x.cols());
  design << make_dummies(data.d, data.J), data.x;
  return fit_ols(design, data.y).coef.head(data.J);
}

}  // namespace hetfx
