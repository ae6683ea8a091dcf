#pragma once

// Reference computations the tests compare the library against. They are
// written directly from textbook formulas and share no code with src/.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <map>
#include <vector>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }
inline double Phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Binary probit MLE by Fisher scoring with normal equations.
inline VectorXd binary_probit(const MatrixXd& x, const std::vector<int>& d) {
  VectorXd b = VectorXd::Zero(x.cols());
  for (int it = 0; it < 200; ++it) {
    MatrixXd info = MatrixXd::Zero(x.cols(), x.cols());
    VectorXd grad = VectorXd::Zero(x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double z = x.row(i).dot(b);
      const double p = Phi(z), f = phi(z);
      const double lam = (d[i] - p) * f / (p * (1 - p));
      grad += lam * x.row(i).transpose();
      info += (f * f / (p * (1 - p))) * x.row(i).transpose() * x.row(i);
    }
    const VectorXd step = info.ldlt().solve(grad);
    b += step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-13) break;
  }
  return b;
}

// Binary logit MLE by iteratively reweighted least squares.
inline VectorXd binary_logit(const MatrixXd& x, const std::vector<int>& d) {
  VectorXd b = VectorXd::Zero(x.cols());
  for (int it = 0; it < 200; ++it) {
    MatrixXd info = MatrixXd::Zero(x.cols(), x.cols());
    VectorXd grad = VectorXd::Zero(x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double p = 1.0 / (1.0 + std::exp(-x.row(i).dot(b)));
      grad += (d[i] - p) * x.row(i).transpose();
      info += p * (1 - p) * x.row(i).transpose() * x.row(i);
    }
    const VectorXd step = info.ldlt().solve(grad);
    b += step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-13) break;
  }
  return b;
}

// Central-difference gradient.
inline VectorXd gradient(const std::function<double(const VectorXd&)>& f, const VectorXd& at, double h) {
  VectorXd g(at.size());
  for (Eigen::Index k = 0; k < at.size(); ++k) {
    VectorXd up = at, dn = at;
    up[k] += h;
    dn[k] -= h;
    g[k] = (f(up) - f(dn)) / (2 * h);
  }
  return g;
}

// Average of v within each distinct row of x, broadcast back to the rows.
inline VectorXd cell_means(const MatrixXd& x, const VectorXd& v) {
  std::map<std::vector<double>, std::pair<double, int>> acc;
  auto key = [&](Eigen::Index i) {
    std::vector<double> k(x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) k[c] = x(i, c);
    return k;
  };
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    auto& a = acc[key(i)];
    a.first += v[i];
    a.second += 1;
  }
  VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto& a = acc[key(i)];
    out[i] = a.first / a.second;
  }
  return out;
}

// Cell probabilities of the binary-X ordinal design: D* = X2 + e,
// e ~ N(0, 0.5^2), thresholds 0 and 1.
inline std::vector<double> binary_x_cell_probs(double x2) {
  const double z0 = (0.0 - x2) / 0.5, z1 = (1.0 - x2) / 0.5;
  return {Phi(z0), Phi(z1) - Phi(z0), 1.0 - Phi(z1)};
}

}  // namespace oracle
