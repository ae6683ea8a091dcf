#include "hetfx/contamination.hpp"
#include "hetfx/error.hpp"
#include "hetfx/rng.hpp"
#include "hetfx/simulation.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>

using namespace hetfx;

namespace {

// Category probabilities bounded away from zero so the averaged covariance
// stays comfortably invertible.
VectorXd random_simplex(RngStream& rng, int categories) {
  VectorXd p(categories);
  for (int j = 0; j < categories; ++j) p[j] = 0.05 + rng.uniform();
  return p / p.sum();
}

MatrixXd cov_of(const VectorXd& p_treated) {
  MatrixXd c = -p_treated * p_treated.transpose();
  c.diagonal() += p_treated;
  return c;
}

double rel_gap(const MatrixXd& a, const MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

// Exact probabilities for every observation of a design with the given cell
// probability rows and cell counts.
MatrixXd expand_cells(const std::vector<VectorXd>& cell_probs, const std::vector<int>& counts) {
  int n = 0;
  for (int c : counts) n += c;
  MatrixXd probs(n, cell_probs[0].size());
  int r = 0;
  for (std::size_t c = 0; c < counts.size(); ++c)
    for (int k = 0; k < counts[c]; ++k) probs.row(r++) = cell_probs[c].transpose();
  return probs;
}

}  // namespace

TEST_CASE("one uniform cell gives the multinomial covariance") {
  MatrixXd probs = MatrixXd::Constant(6, 3, 1.0 / 3.0);
  const ConditionalCov cov = conditional_cov_exact(probs);
  CHECK(cov.c_bar(0, 0) == doctest::Approx(2.0 / 9.0).epsilon(1e-14));
  CHECK(cov.c_bar(0, 1) == doctest::Approx(-1.0 / 9.0).epsilon(1e-14));
  CHECK(cov.at(3)(1, 1) == doctest::Approx(2.0 / 9.0).epsilon(1e-14));
}

TEST_CASE("empirical cell covariance matches direct averaging") {
  Dataset data;
  data.J = 2;
  data.d = {0, 1, 2, 1, 0, 0, 2, 2};
  data.y = VectorXd::Zero(8);
  data.x.resize(8, 1);
  data.x << 0, 0, 0, 0, 1, 1, 1, 1;
  const ConditionalCov cov = conditional_cov(data, cells_from_covariates(data.x));
  // Cell 0: D = (0,1,2,1) so p = (1/2, 1/4); cell 1: D = (0,0,2,2) so p = (0, 1/2).
  VectorXd p0(2), p1(2);
  p0 << 0.5, 0.25;
  p1 << 0.0, 0.5;
  CHECK(rel_gap(cov.at(0), cov_of(p0)) < 1e-15);
  CHECK(rel_gap(cov.at(7), cov_of(p1)) < 1e-15);
  CHECK(rel_gap(cov.c_bar, 0.5 * cov_of(p0) + 0.5 * cov_of(p1)) < 1e-15);
}

TEST_CASE("a cell with constant D has zero covariance") {
  Dataset data;
  data.J = 2;
  data.d = {1, 1, 1, 0, 2};
  data.y = VectorXd::Zero(5);
  data.x.resize(5, 1);
  data.x << 0, 0, 0, 1, 1;
  const ConditionalCov cov = conditional_cov(data, cells_from_covariates(data.x));
  CHECK(cov.at(0).isZero(0.0));
}

TEST_CASE("continuous covariates and empty cells are rejected") {
  Dataset data;
  data.J = 2;
  data.d = {0, 1, 2, 1};
  data.y = VectorXd::Zero(4);
  data.x = VectorXd::LinSpaced(4, 0.1, 0.4);
  try {
    conditional_cov(data, cells_from_covariates(data.x));
    FAIL("expected ContinuousCovariate");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ContinuousCovariate);
  }
  CellLabels gap{{0, 0, 2, 2}, 3};
  try {
    conditional_cov(data, gap);
    FAIL("expected EmptyCell");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyCell);
  }
}

TEST_CASE("binary-X design: exact weights average to the identity") {
  // 3:7 split of X2 = 0, 1 with exact cell probabilities.
  std::vector<VectorXd> cells;
  for (double x2 : {0.0, 1.0}) {
    const auto p = oracle::binary_x_cell_probs(x2);
    cells.push_back(Eigen::Map<const VectorXd>(p.data(), 3));
  }
  const MatrixXd probs = expand_cells(cells, {3, 7});
  CHECK(probs(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(probs(0, 2) == doctest::Approx(1.0 - oracle::Phi(2.0)).epsilon(1e-12));

  const ConditionalCov cov = conditional_cov_exact(probs);
  const MatrixXd c0 = cov_of(cells[0].tail(2)), c1 = cov_of(cells[1].tail(2));
  CHECK(rel_gap(cov.c_bar, 0.3 * c0 + 0.7 * c1) < 1e-14);

  ContaminationReport rep = theorem1_weights(cov);
  CHECK_FALSE(rep.conjectured);
  CHECK((rep.weight_means - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);

  // mu_d(X2) = d X2; estimand against a direct 2 x 2 computation.
  MatrixXd mu(10, 2);
  for (Index i = 0; i < 10; ++i) {
    const double x2 = i < 3 ? 0.0 : 1.0;
    mu(i, 0) = x2;
    mu(i, 1) = 2.0 * x2;
  }
  const VectorXd est = theorem1_estimand(rep, mu);
  VectorXd mu1(2);
  mu1 << 1.0, 2.0;
  const VectorXd direct = 0.7 * (0.3 * c0 + 0.7 * c1).inverse() * c1 * mu1;
  CHECK((est - direct).lpNorm<Eigen::Infinity>() < 1e-12);
  // The published demonstration quotes 0.13 and 1.13.
  CHECK(std::abs(est[0] - 0.13) <= 0.01);
  CHECK(std::abs(est[1] - 1.13) <= 0.01);
  CHECK(std::abs(est[0] - 0.7) > 0.5);
}

TEST_CASE("four-category discrete design: exact weights average to the identity") {
  RngStream rng(42, 0);
  std::vector<VectorXd> cells;
  for (int c = 0; c < 5; ++c) cells.push_back(random_simplex(rng, 4));
  const MatrixXd probs = expand_cells(cells, {2, 5, 1, 7, 3});
  ContaminationReport rep = theorem1_weights(conditional_cov_exact(probs));
  REQUIRE(rep.J == 3);
  CHECK_FALSE(rep.conjectured);
  CHECK((rep.weight_means - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("closed forms agree with the matrix form on random inputs") {
  RngStream rng(2024, 1);
  double worst2 = 0.0, worst3 = 0.0;
  for (int t = 0; t < 10000; ++t) {
    for (int J : {2, 3}) {
      const int cells = J + 2;
      MatrixXd c_bar = MatrixXd::Zero(J, J);
      VectorXd share(cells);
      for (int c = 0; c < cells; ++c) share[c] = 0.1 + rng.uniform();
      share /= share.sum();
      MatrixXd c_x;
      for (int c = 0; c < cells; ++c) {
        const MatrixXd cc = cov_of(random_simplex(rng, J + 1).tail(J));
        c_bar += share[c] * cc;
        if (c == 0) c_x = cc;
      }
      // Oracle: explicit inverse times C(X).
      const MatrixXd ref = c_bar.inverse() * c_x;
      const MatrixXd closed = J == 2 ? omega_closed_form_j2(c_bar, c_x) : omega_closed_form_j3(c_bar, c_x);
      const double gap = rel_gap(closed, omega_matrix_form(c_bar, c_x));
      CHECK(rel_gap(closed, ref) < 1e-10);
      (J == 2 ? worst2 : worst3) = std::max(J == 2 ? worst2 : worst3, gap);
    }
  }
  CHECK(worst2 <= 1e-12);
  CHECK(worst3 <= 1e-12);
}

TEST_CASE("binary treatment reduces to the overlap ratio") {
  MatrixXd probs(4, 2);
  probs << 0.8, 0.2, 0.5, 0.5, 0.3, 0.7, 0.5, 0.5;
  const ContaminationReport rep = theorem1_weights(conditional_cov_exact(probs));
  double mean_pq = 0.0;
  for (Index i = 0; i < 4; ++i) mean_pq += probs(i, 1) * probs(i, 0) / 4.0;
  for (Index i = 0; i < 4; ++i) CHECK(rep.weight(i, 0, 0) == doctest::Approx(probs(i, 1) * probs(i, 0) / mean_pq));
}

TEST_CASE("covariance constant in X gives identity weights everywhere") {
  MatrixXd probs(5, 4);
  for (Index i = 0; i < 5; ++i) probs.row(i) << 0.1, 0.2, 0.3, 0.4;
  const ContaminationReport rep = theorem1_weights(conditional_cov_exact(probs));
  for (Index i = 0; i < 5; ++i)
    for (int k = 0; k < 3; ++k)
      for (int j = 0; j < 3; ++j) CHECK(rep.weight(i, k, j) == doctest::Approx(k == j ? 1.0 : 0.0).epsilon(1e-12));
}

TEST_CASE("constant and zero effects pass straight through") {
  RngStream rng(7, 3);
  std::vector<VectorXd> cells;
  for (int c = 0; c < 4; ++c) cells.push_back(random_simplex(rng, 3));
  const MatrixXd probs = expand_cells(cells, {4, 4, 2, 6});
  ContaminationReport rep = theorem1_weights(conditional_cov_exact(probs));
  MatrixXd mu(16, 2);
  mu.col(0).setConstant(1.5);
  mu.col(1).setConstant(-0.25);
  const VectorXd est = theorem1_estimand(rep, mu);
  CHECK(est[0] == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(est[1] == doctest::Approx(-0.25).epsilon(1e-12));
  CHECK(theorem1_estimand(rep, MatrixXd::Zero(16, 2)).isZero(0.0));
  CHECK_THROWS_AS(theorem1_estimand(rep, MatrixXd::Zero(15, 2)), Error);
}

TEST_CASE("four treatment categories use the matrix form and are flagged") {
  RngStream rng(9, 4);
  std::vector<VectorXd> cells;
  for (int c = 0; c < 6; ++c) cells.push_back(random_simplex(rng, 5));
  const ContaminationReport rep = theorem1_weights(conditional_cov_exact(expand_cells(cells, {1, 2, 3, 4, 5, 6})));
  CHECK(rep.conjectured);
  CHECK((rep.weight_means - MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("singular averaged covariance is reported") {
  // Category 2 never occurs, so the second row and column of C vanish.
  MatrixXd probs(3, 3);
  probs << 0.5, 0.5, 0.0, 0.2, 0.8, 0.0, 0.9, 0.1, 0.0;
  try {
    theorem1_weights(conditional_cov_exact(probs));
    FAIL("expected SingularCovariance");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SingularCovariance);
  }
}

TEST_CASE("usual OLS recovers constant effects") {
  RngStream rng(1, 9);
  const Index n = 2000;
  Dataset data;
  data.J = 2;
  data.y.resize(n);
  data.d.resize(n);
  data.x.resize(n, 2);
  VectorXd noise(n);
  for (Index i = 0; i < n; ++i) {
    const double x = rng.normal();
    data.x(i, 0) = 1.0;
    data.x(i, 1) = x;
    const double v = rng.uniform() + 0.2 * x;
    data.d[i] = v < 0.35 ? 0 : (v < 0.7 ? 1 : 2);
    noise[i] = rng.normal();
  }
  for (Index i = 0; i < n; ++i) data.y[i] = (data.d[i] == 1) + 2.0 * (data.d[i] == 2) + data.x(i, 1);
  const VectorXd exact = usual_ols(data);
  CHECK(exact[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(exact[1] == doctest::Approx(2.0).epsilon(1e-12));

  data.y += noise;
  const VectorXd noisy = usual_ols(data);
  CHECK(std::abs(noisy[0] - 1.0) < 0.2);
  CHECK(std::abs(noisy[1] - 2.0) < 0.2);
}

TEST_CASE("usual OLS converges to the contamination-weight estimand") {
  // Binary-X design at N = 200,000 over independent seeds.
  const int reps = 30;
  std::vector<VectorXd> draws;
  VectorXd exact;
  for (int r = 0; r < reps; ++r) {
    const DemoReport rep = usual_ols_demo(200000, 100 + static_cast<std::uint64_t>(r));
    draws.push_back(rep.ols_coef.segment(1, 2));
    exact = rep.estimand_exact;
  }
  for (Index j = 0; j < 2; ++j) {
    double mean = 0.0, ss = 0.0;
    for (const auto& v : draws) mean += v[j] / reps;
    for (const auto& v : draws) ss += (v[j] - mean) * (v[j] - mean);
    const double mc_se = std::sqrt(ss / (reps - 1) / reps);
    CHECK(std::abs(mean - exact[j]) <= 4.0 * mc_se);
    for (const auto& v : draws) CHECK(std::abs(v[j] - exact[j]) <= 4.0 * mc_se * std::sqrt(double(reps)));
  }
}
