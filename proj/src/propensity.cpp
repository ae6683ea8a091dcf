#include "hetfx/propensity.hpp"

#include "hetfx/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hetfx {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogFloor = 1e-300;
constexpr double kSeparation = 1e-12;

double pdf_or_zero(double z) { return std::isfinite(z) ? norm_pdf(z) : 0.0; }

void check_categories(std::span<const int> d, int J) {
  std::vector<Index> counts(static_cast<std::size_t>(J + 1), 0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] < 0 || d[i] > J) {
      throw Error(ErrorKind::OutOfRangeCategory,
                  "category out of range at row " + std::to_string(i) + ": " + std::to_string(d[i]));
    }
    ++counts[static_cast<std::size_t>(d[i])];
  }
  for (int j = 0; j <= J; ++j) {
    if (counts[static_cast<std::size_t>(j)] == 0) {
      throw Error(ErrorKind::MissingCategory, "category " + std::to_string(j) + " is never observed");
    }
  }
}

}  // namespace

VectorXd TreatmentModel::mean_gradient_theta(const VectorXd& theta, std::span<const int> d) const {
  const VectorXd alpha = to_alpha(theta);
  const VectorXd g_alpha = scores(alpha, d).colwise().mean().transpose();
  return alpha_jacobian(theta).transpose() * g_alpha;
}

MatrixXd TreatmentModel::mean_hessian_theta(const VectorXd& theta, std::span<const int> d) const {
  const Index p = theta.size();
  MatrixXd h(p, p);
  for (Index k = 0; k < p; ++k) {
    const double step = 1e-5 * std::max(1.0, std::abs(theta[k]));
    VectorXd up = theta, down = theta;
    up[k] += step;
    down[k] -= step;
    h.col(k) = (mean_gradient_theta(up, d) - mean_gradient_theta(down, d)) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

double TreatmentModel::mean_loglik(const VectorXd& alpha, std::span<const int> d) const {
  const MatrixXd p = probabilities(alpha);
  double ll = 0.0;
  for (Index i = 0; i < p.rows(); ++i) ll += std::log(std::max(p(i, d[i]), kLogFloor));
  return ll / static_cast<double>(p.rows());
}

// ---------------------------------------------------------------- ordered probit

OrderedProbitModel::OrderedProbitModel(MatrixXd x, int J, std::vector<std::string> labels)
    : x_(std::move(x)), J_(J), labels_(std::move(labels)) {
  if (J_ < 1) throw Error(ErrorKind::InvalidArgument, "ordered probit needs J >= 1");
}

std::vector<std::string> OrderedProbitModel::param_labels() const {
  std::vector<std::string> out;
  for (Index c = 0; c < x_.cols(); ++c) {
    out.push_back("kappa[" + (c < static_cast<Index>(labels_.size()) ? labels_[c] : std::to_string(c)) + "]");
  }
  for (int m = 2; m <= J_; ++m) out.push_back("tau" + std::to_string(m));
  return out;
}

std::vector<double> OrderedProbitModel::thresholds(const VectorXd& alpha) const {
  std::vector<double> tau(static_cast<std::size_t>(J_ + 2));
  tau[0] = -kInf;
  tau[1] = 0.0;
  for (int m = 2; m <= J_; ++m) tau[m] = alpha[x_.cols() + m - 2];
  tau[J_ + 1] = kInf;
  return tau;
}

MatrixXd OrderedProbitModel::indices(const VectorXd& alpha) const {
  return x_ * alpha.head(x_.cols());
}

MatrixXd OrderedProbitModel::probabilities(const VectorXd& alpha) const {
  const VectorXd index = x_ * alpha.head(x_.cols());
  const auto tau = thresholds(alpha);
  MatrixXd p(n(), J_ + 1);
  for (Index i = 0; i < n(); ++i) {
    for (int j = 0; j <= J_; ++j) p(i, j) = norm_interval(tau[j] - index[i], tau[j + 1] - index[i]);
  }
  return p;
}

MatrixXd OrderedProbitModel::scores(const VectorXd& alpha, std::span<const int> d) const {
  const Index nu = x_.cols();
  const VectorXd index = x_ * alpha.head(nu);
  const auto tau = thresholds(alpha);
  MatrixXd s = MatrixXd::Zero(n(), n_params());
  for (Index i = 0; i < n(); ++i) {
    const int j = d[i];
    const double lo = tau[j] - index[i];
    const double hi = tau[j + 1] - index[i];
    const double p = std::max(norm_interval(lo, hi), kLogFloor);
    const double f_lo = pdf_or_zero(lo);
    const double f_hi = pdf_or_zero(hi);
    s.row(i).head(nu) = -((f_hi - f_lo) / p) * x_.row(i);
    // tau_1 is fixed; tau_m for m >= 2 sits at nu + m - 2.
    if (j + 1 >= 2 && j + 1 <= J_) s(i, nu + j + 1 - 2) += f_hi / p;
    if (j >= 2) s(i, nu + j - 2) -= f_lo / p;
  }
  return s;
}

VectorXd OrderedProbitModel::to_alpha(const VectorXd& theta) const {
  VectorXd alpha = theta;
  const Index nu = x_.cols();
  double tau = 0.0;
  for (int m = 2; m <= J_; ++m) {
    tau += std::exp(theta[nu + m - 2]);
    alpha[nu + m - 2] = tau;
  }
  return alpha;
}

MatrixXd OrderedProbitModel::alpha_jacobian(const VectorXd& theta) const {
  const Index nu = x_.cols();
  MatrixXd jac = MatrixXd::Zero(theta.size(), theta.size());
  jac.topLeftCorner(nu, nu).setIdentity();
  for (int m = 2; m <= J_; ++m)
    for (int l = 2; l <= m; ++l) jac(nu + m - 2, nu + l - 2) = std::exp(theta[nu + l - 2]);
  return jac;
}

// ---------------------------------------------------------------- multinomial logit

MnlModel::MnlModel(const MatrixXd& x, const MnlSpec& spec)
    : n_(x.rows()), J_(spec.J), p_(spec.alpha_len), labels_(spec.param_labels) {
  if (J_ < 1) throw Error(ErrorKind::InvalidArgument, "MNL needs J >= 1");
  if (p_ < 1) throw Error(ErrorKind::InvalidArgument, "MNL needs at least one parameter");
  w_.assign(static_cast<std::size_t>(J_), MatrixXd::Zero(n_, p_));
  for (const MnlTerm& t : spec.terms) {
    if (t.alternative < 1 || t.alternative > J_) {
      throw Error(ErrorKind::InvalidArgument, "MNL term alternative must be in 1..J");
    }
    if (t.param < 0 || t.param >= p_) throw Error(ErrorKind::InvalidArgument, "MNL term parameter slot out of range");
    if (t.covariate < -1 || t.covariate >= x.cols()) {
      throw Error(ErrorKind::InvalidArgument, "MNL term covariate out of range");
    }
    auto col = w_[static_cast<std::size_t>(t.alternative - 1)].col(t.param);
    for (Index i = 0; i < n_; ++i) {
      const double v = t.covariate < 0 ? 1.0 : x(i, t.covariate);
      col[i] += t.scale * (t.exp_transform ? std::exp(v) : v);
    }
  }
  while (static_cast<Index>(labels_.size()) < p_) labels_.push_back("alpha" + std::to_string(labels_.size() + 1));
}

MatrixXd MnlModel::indices(const VectorXd& alpha) const {
  MatrixXd v(n_, J_);
  for (int j = 0; j < J_; ++j) v.col(j) = w_[static_cast<std::size_t>(j)] * alpha;
  return v;
}

MatrixXd MnlModel::probabilities(const VectorXd& alpha) const {
  const MatrixXd v = indices(alpha);
  MatrixXd p(n_, J_ + 1);
  for (Index i = 0; i < n_; ++i) {
    const double top = std::max(0.0, v.row(i).maxCoeff());
    double total = std::exp(-top);
    p(i, 0) = total;
    for (int j = 0; j < J_; ++j) {
      p(i, j + 1) = std::exp(v(i, j) - top);
      total += p(i, j + 1);
    }
    p.row(i) /= total;
  }
  return p;
}

MatrixXd MnlModel::scores(const VectorXd& alpha, std::span<const int> d) const {
  const MatrixXd p = probabilities(alpha);
  MatrixXd s = MatrixXd::Zero(n_, p_);
  for (Index i = 0; i < n_; ++i) {
    if (d[i] > 0) s.row(i) = w_[static_cast<std::size_t>(d[i] - 1)].row(i);
    for (int j = 0; j < J_; ++j) s.row(i) -= p(i, j + 1) * w_[static_cast<std::size_t>(j)].row(i);
  }
  return s;
}

MatrixXd MnlModel::mean_hessian_theta(const VectorXd& theta, std::span<const int>) const {
  const MatrixXd p = probabilities(theta);
  MatrixXd h = MatrixXd::Zero(p_, p_);
  VectorXd wbar(p_);
  for (Index i = 0; i < n_; ++i) {
    wbar.setZero();
    for (int j = 0; j < J_; ++j) {
      const auto wij = w_[static_cast<std::size_t>(j)].row(i).transpose();
      wbar += p(i, j + 1) * wij;
      h.noalias() -= p(i, j + 1) * wij * wij.transpose();
    }
    h.noalias() += wbar * wbar.transpose();
  }
  return h / static_cast<double>(n_);
}

MnlSpec simulation_mnl_spec(bool with_exp_terms) {
  MnlSpec spec;
  spec.J = 2;
  // Covariate columns: 0 = X0, 1 = X1, 2 = X2, 3 = X3.
  spec.terms = {{1, 0, 0, -1.0, false}, {1, 1, 1, 1.0, false}, {1, 3, 3, 1.0, false},
                {2, 0, 0, -1.0, false}, {2, 2, 2, 1.0, false}};
  if (with_exp_terms) {
    spec.alpha_len = 7;
    spec.terms.push_back({1, 4, 3, 1.0, true});
    spec.terms.push_back({2, 5, 3, 1.0, false});
    spec.terms.push_back({2, 6, 3, 1.0, true});
    spec.param_labels = {"alt_var", "X1", "X2", "X3_alt1", "expX3_alt1", "X3_alt2", "expX3_alt2"};
  } else {
    spec.alpha_len = 5;
    spec.terms.push_back({2, 4, 3, 1.0, false});
    spec.param_labels = {"alt_var", "X1", "X2", "X3_alt1", "X3_alt2"};
  }
  return spec;
}

std::shared_ptr<const TreatmentModel> ModelConfig::build(const Dataset& data) const {
  if (kind == ModelKind::OrderedProbit) return std::make_shared<OrderedProbitModel>(data.x, data.J, data.x_labels);
  MnlSpec spec = mnl;
  if (spec.J != data.J) throw Error(ErrorKind::InvalidArgument, "MNL spec J does not match the data");
  return std::make_shared<MnlModel>(data.x, spec);
}

// ---------------------------------------------------------------- fitting

PropensityFit propensity_at(std::shared_ptr<const TreatmentModel> model, const VectorXd& alpha,
                            std::span<const int> d) {
  PropensityFit fit;
  fit.alpha_hat = alpha;
  fit.probs = model->probabilities(alpha);
  fit.indices = model->indices(alpha);
  fit.scores = model->scores(alpha, d);
  fit.loglik = model->mean_loglik(alpha, d) * static_cast<double>(model->n());
  fit.converged = true;
  fit.model = std::move(model);
  return fit;
}

PropensityFit propensity_from_probs(MatrixXd probs, MatrixXd indices) {
  PropensityFit fit;
  fit.alpha_hat = VectorXd(0);
  fit.scores = MatrixXd(probs.rows(), 0);
  fit.probs = std::move(probs);
  fit.indices = std::move(indices);
  fit.converged = true;
  return fit;
}

PropensityFit fit_propensity(std::shared_ptr<const TreatmentModel> model, std::span<const int> d,
                             const FitOptions& options) {
  if (static_cast<Index>(d.size()) != model->n()) {
    throw Error(ErrorKind::DimensionMismatch, "treatment vector length does not match covariates");
  }
  check_categories(d, model->J());
  const Index p = model->n_params();
  VectorXd theta = VectorXd::Zero(p);
  double ll = model->mean_loglik(model->to_alpha(theta), d);
  double grad_norm = kInf;
  bool converged = false;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    const VectorXd g = model->mean_gradient_theta(theta, d);
    grad_norm = g.lpNorm<Eigen::Infinity>();
    if (grad_norm < 1e-14) {
      converged = true;
      break;
    }
    const MatrixXd neg_h = -model->mean_hessian_theta(theta, d);
    Eigen::LDLT<MatrixXd> ldlt(neg_h);
    VectorXd step;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() && (ldlt.vectorD().array() > 0.0).all()) {
      step = ldlt.solve(g);
    } else {
      step = g;
    }
    if (grad_norm < options.grad_tol && step.lpNorm<Eigen::Infinity>() < options.step_tol) {
      converged = true;
      break;
    }
    double t = 1.0;
    double next_ll = model->mean_loglik(model->to_alpha(theta + step), d);
    const double slack = 1e-13 * (1.0 + std::abs(ll));
    while (!(next_ll >= ll - slack) && t > 1e-10) {
      t *= 0.5;
      next_ll = model->mean_loglik(model->to_alpha(theta + t * step), d);
    }
    if (!(next_ll >= ll - slack)) {
      if (grad_norm < options.grad_tol) {
        converged = true;
        break;
      }
      throw NonconvergenceError(it + 1, grad_norm, "line search failed with gradient norm " + std::to_string(grad_norm));
    }
    theta += t * step;
    ll = next_ll;
  }
  if (!converged) {
    throw NonconvergenceError(it, grad_norm, "no convergence after " + std::to_string(it) +
                                                 " iterations (gradient norm " + std::to_string(grad_norm) + ")");
  }
  // Along a separating direction the likelihood flattens out, so the
  // information at the reported optimum is numerically singular.
  {
    const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(-model->mean_hessian_theta(theta, d), Eigen::EigenvaluesOnly);
    const double top = eig.eigenvalues().cwiseAbs().maxCoeff();
    if (p > 0 && !(eig.eigenvalues().minCoeff() > 1e-10 * std::max(top, 1.0))) {
      throw Error(ErrorKind::SeparationSuspected,
                  "information matrix is numerically singular at the optimum (a covariate may predict D exactly)");
    }
  }
  PropensityFit fit = propensity_at(model, model->to_alpha(theta), d);
  fit.iterations = it;
  fit.min_prob = fit.probs.minCoeff();
  // Tail probabilities of unobserved categories legitimately fall below the
  // threshold at extreme covariates; an observed outcome the model deems
  // impossible does not.
  for (Index i = 0; i < fit.n(); ++i) {
    if (fit.probs(i, d[i]) < kSeparation) {
      throw Error(ErrorKind::SeparationSuspected, "fitted probability of the observed category is below 1e-12 at row " +
                                                      std::to_string(i));
    }
  }
  return fit;
}

PropensityFit fit_ordered_probit(const MatrixXd& x, std::span<const int> d, int J, const FitOptions& options) {
  return fit_propensity(std::make_shared<OrderedProbitModel>(x, J), d, options);
}

PropensityFit fit_mnl(const MatrixXd& x, const MnlSpec& spec, std::span<const int> d, const FitOptions& options) {
  return fit_propensity(std::make_shared<MnlModel>(x, spec), d, options);
}

VectorXd category_probs(const PropensityFit& fit, int j) {
  if (j < 0 || j > fit.J()) throw Error(ErrorKind::BadCategory, "category " + std::to_string(j) + " not in model");
  return fit.probs.col(j);
}

VectorXd pairwise_propensity(const PropensityFit& fit, int d) {
  if (d < 1 || d > fit.J()) throw Error(ErrorKind::BadCategory, "target category must be in 1..J");
  VectorXd out(fit.n());
  for (Index i = 0; i < fit.n(); ++i) {
    const double den = fit.probs(i, 0) + fit.probs(i, d);
    if (den < 1e-12) {
      throw Error(ErrorKind::DegenerateDenominator,
                  "P0 + P" + std::to_string(d) + " below 1e-12 at row " + std::to_string(i));
    }
    out[i] = fit.probs(i, d) / den;
  }
  return out;
}

const MatrixXd& score_vectors(const PropensityFit& fit) { return fit.scores; }

VectorXd opg_standard_errors(const PropensityFit& fit) {
  const MatrixXd opg = fit.scores.transpose() * fit.scores;
  Eigen::LDLT<MatrixXd> ldlt(opg);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all()) {
    throw Error(ErrorKind::SingularScoreOuterProduct, "score outer product is singular");
  }
  return ldlt.solve(MatrixXd::Identity(opg.rows(), opg.cols())).diagonal().cwiseSqrt();
}

}  // namespace hetfx
