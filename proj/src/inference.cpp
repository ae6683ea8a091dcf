#include "hetfx/inference.hpp"

#include "hetfx/error.hpp"
#include "hetfx/parallel.hpp"
#include "hetfx/rng.hpp"

#include <cmath>

namespace hetfx {

MomentFunction::MomentFunction(const Dataset& data, const PropensityFit& fit, const SubsampleEstimate& est)
    : data_(data), fit_(fit), est_(est) {
  if (est.variant.kind != Centering::IndexPoly) {
    fixed_g_.resize(est.n_sub);
    for (Index k = 0; k < est.n_sub; ++k) fixed_g_[k] = data.y[est.mask[k]] - est.centered_y[k];
  }
}

VectorXd MomentFunction::per_observation(double b, const VectorXd& a) const {
  const bool reevaluate = fit_.model != nullptr && a.size() > 0;
  const MatrixXd probs = reevaluate ? fit_.model->probabilities(a) : fit_.probs;
  VectorXd g;
  if (est_.variant.kind == Centering::IndexPoly) {
    const MatrixXd idx = reevaluate ? fit_.model->indices(a) : fit_.indices;
    g = index_basis(idx, est_.mask, est_.variant).columns * est_.gamma_hat;
  } else {
    g = fixed_g_;
  }
  const VectorXd e = psr_on_rows(data_, probs, est_.d, est_.mask);
  VectorXd m = VectorXd::Zero(data_.n());
  for (Index k = 0; k < est_.n_sub; ++k) {
    const Index i = est_.mask[k];
    m[i] = (data_.y[i] - g[k] - b * e[k]) * e[k];
  }
  return m;
}

double MomentFunction::mean(double b, const VectorXd& a) const { return per_observation(b, a).mean(); }

VectorXd numeric_L(const MomentFunction& moment, double beta_hat, const VectorXd& alpha_hat, double rel_step) {
  VectorXd L(alpha_hat.size());
  for (Index k = 0; k < alpha_hat.size(); ++k) {
    const double h = rel_step * std::max(1.0, std::abs(alpha_hat[k]));
    VectorXd up = alpha_hat, down = alpha_hat;
    up[k] += h;
    down[k] -= h;
    L[k] = (moment.mean(beta_hat, up) - moment.mean(beta_hat, down)) / (2.0 * h);
  }
  return L;
}

VarianceReport asy_variance(const SubsampleEstimate& est, const PropensityFit& fit, const Dataset& data) {
  const Index n = data.n();
  const auto nd = static_cast<double>(n);
  VarianceReport rep;
  rep.a_hat = est.psr.squaredNorm() / nd;
  rep.moment_term = VectorXd::Zero(n);
  for (Index k = 0; k < est.n_sub; ++k) {
    const double v = est.centered_y[k] - est.beta_hat * est.psr[k];
    rep.moment_term[est.mask[k]] = v * est.psr[k];
  }

  const Index p = fit.model != nullptr ? fit.n_params() : 0;
  if (p > 0) {
    const MatrixXd& s = fit.scores;
    const MatrixXd info = s.transpose() * s / nd;
    Eigen::LDLT<MatrixXd> ldlt(info);
    const double scale = std::max(info.diagonal().maxCoeff(), 1e-300);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 1e-13 * scale).all()) {
      throw Error(ErrorKind::SingularScoreOuterProduct, "averaged score outer product is singular");
    }
    // eta_i = info^-1 s_i, stored as rows.
    rep.eta = ldlt.solve(s.transpose()).transpose();
    const MomentFunction moment(data, fit, est);
    rep.L_hat = numeric_L(moment, est.beta_hat, fit.alpha_hat);
    rep.correction_term = rep.eta * rep.L_hat;
  } else {
    rep.eta = MatrixXd(n, 0);
    rep.L_hat = VectorXd(0);
    rep.correction_term = VectorXd::Zero(n);
  }

  const VectorXd zeta = rep.moment_term + rep.correction_term;
  rep.influence = zeta / rep.a_hat;
  rep.omega_hat = zeta.squaredNorm() / nd / (rep.a_hat * rep.a_hat);
  rep.asy_sd = std::sqrt(rep.omega_hat / nd);
  rep.asy_sd_no_correction = std::sqrt(rep.moment_term.squaredNorm() / nd / (rep.a_hat * rep.a_hat) / nd);
  if (!std::isfinite(rep.asy_sd) || !(rep.omega_hat > 0.0)) {
    throw Error(ErrorKind::DegeneratePsr, "asymptotic variance is not positive");
  }
  return rep;
}

CovarianceReport asy_covariance(std::span<const SubsampleEstimate> estimates, const PropensityFit& fit,
                                const Dataset& data) {
  const auto k = static_cast<Index>(estimates.size());
  const auto nd = static_cast<double>(data.n());
  std::vector<VectorXd> infl;
  CovarianceReport rep;
  rep.beta.resize(k);
  for (Index a = 0; a < k; ++a) {
    infl.push_back(asy_variance(estimates[static_cast<std::size_t>(a)], fit, data).influence);
    rep.beta[a] = estimates[static_cast<std::size_t>(a)].beta_hat;
  }
  // Covariance of the estimates themselves: N^-1 times the covariance of
  // sqrt(N)(beta_hat - beta).
  rep.cov_matrix.resize(k, k);
  for (Index a = 0; a < k; ++a)
    for (Index b = a; b < k; ++b) rep.cov_matrix(a, b) = rep.cov_matrix(b, a) = infl[a].dot(infl[b]) / nd / nd;
  Eigen::LDLT<MatrixXd> ldlt(rep.cov_matrix);
  if (k > 0 && ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0.0).all()) {
    rep.wald = rep.beta.dot(ldlt.solve(rep.beta));
  }
  return rep;
}

double run_pipeline(const Dataset& data, const PipelineConfig& config) {
  const PropensityFit fit = fit_propensity(config.model.build(data), data.d, config.fit);
  return estimate(data, fit, config.d, config.variant).beta_hat;
}

BootstrapResult bootstrap_se(const Dataset& data, const PipelineConfig& config, int B, std::uint64_t seed,
                             int threads) {
  if (B < 100) throw Error(ErrorKind::InvalidArgument, "bootstrap needs B >= 100");
  const Index n = data.n();
  std::vector<double> beta(static_cast<std::size_t>(B), 0.0);
  std::vector<char> ok(static_cast<std::size_t>(B), 0);
  // Bootstrap streams live in the upper half of the stream space so they never
  // coincide with Monte Carlo repetition streams under the same seed.
  constexpr std::uint64_t kStreamBase = 1ull << 63;
  parallel_for(B, threads, [&](Index b) {
    RngStream rng(seed, kStreamBase + static_cast<std::uint64_t>(b));
    std::vector<Index> rows(static_cast<std::size_t>(n));
    for (auto& r : rows) r = static_cast<Index>(rng.index_below(static_cast<std::uint64_t>(n)));
    try {
      beta[static_cast<std::size_t>(b)] = run_pipeline(select_rows(data, rows), config);
      ok[static_cast<std::size_t>(b)] = 1;
    } catch (const Error&) {
    }
  });
  BootstrapResult res;
  res.requested = B;
  for (int b = 0; b < B; ++b) {
    if (ok[static_cast<std::size_t>(b)]) res.draws.push_back(beta[static_cast<std::size_t>(b)]);
  }
  res.dropped = B - static_cast<int>(res.draws.size());
  res.drop_warning = res.dropped > 0.05 * B;
  if (res.draws.size() < 2) throw Error(ErrorKind::ExcessFailures, "fewer than two bootstrap replicates succeeded");
  double mean = 0.0;
  for (double v : res.draws) mean += v;
  mean /= static_cast<double>(res.draws.size());
  double ss = 0.0;
  for (double v : res.draws) ss += (v - mean) * (v - mean);
  res.se = std::sqrt(ss / static_cast<double>(res.draws.size() - 1));
  return res;
}

}  // namespace hetfx
