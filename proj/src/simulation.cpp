#include "hetfx/simulation.hpp"

#include "hetfx/contamination.hpp"
#include "hetfx/error.hpp"
#include "hetfx/inference.hpp"
#include "hetfx/parallel.hpp"
#include "hetfx/rng.hpp"

#include <cmath>
#include <numbers>

namespace hetfx {

namespace {

const double kSqrt6 = std::sqrt(6.0);

// Chi-square(3) CDF and survival function.
double chi3_cdf(double x) {
  if (x <= 0.0) return 0.0;
  return std::erf(std::sqrt(0.5 * x)) - std::sqrt(2.0 * x / std::numbers::pi) * std::exp(-0.5 * x);
}

double chi3_sf(double x) {
  if (x <= 0.0) return 1.0;
  return std::erfc(std::sqrt(0.5 * x)) + std::sqrt(2.0 * x / std::numbers::pi) * std::exp(-0.5 * x);
}

double std_chi3_sf(double z) { return chi3_sf(3.0 + kSqrt6 * z); }

// P(lo <= e < hi) for the standardized chi-square(3) error.
double std_chi3_interval(double lo, double hi) {
  if (lo > 0.0) return std_chi3_sf(lo) - std_chi3_sf(hi);
  return std_chi3_cdf(hi) - std_chi3_cdf(lo);
}

bool is_ordinal(DgpFamily f) { return f == DgpFamily::OrdinalBinaryX || f == DgpFamily::OrdinalContinuous; }

}  // namespace

double std_chi3_cdf(double z) { return chi3_cdf(3.0 + kSqrt6 * z); }

VectorXd standardize_chi3(const VectorXd& raw) { return (raw.array() - 3.0) / kSqrt6; }

void validate_spec(const DgpSpec& spec) {
  if (spec.n < 10) throw Error(ErrorKind::InvalidArgument, "simulated sample size must be at least 10");
  switch (spec.family) {
    case DgpFamily::OrdinalBinaryX:
      if (spec.error_dist != ErrorDist::Normal || spec.regression_misspec) {
        throw Error(ErrorKind::InvalidSpecCombination, "the binary-X design has only normal errors and no misspecification");
      }
      break;
    case DgpFamily::OrdinalContinuous: break;
    case DgpFamily::Multinomial:
    case DgpFamily::MultinomialAbs:
      if (spec.error_dist != ErrorDist::Normal) {
        throw Error(ErrorKind::InvalidSpecCombination, "multinomial designs have no chi-square error option");
      }
      break;
  }
}

DgpSpec panel_spec(SimTable table, int panel, Index n, std::uint64_t seed) {
  if (panel < 1 || panel > 4) throw Error(ErrorKind::InvalidArgument, "panel must be 1..4");
  DgpSpec spec;
  spec.n = n;
  spec.seed = seed;
  spec.regression_misspec = panel >= 3;
  const bool second = panel == 2 || panel == 4;
  if (table == SimTable::Ordinal) {
    spec.family = DgpFamily::OrdinalContinuous;
    spec.error_dist = second ? ErrorDist::StdChi3 : ErrorDist::Normal;
  } else {
    spec.family = second ? DgpFamily::MultinomialAbs : DgpFamily::Multinomial;
  }
  return spec;
}

std::string panel_label(const DgpSpec& spec) {
  std::string s;
  switch (spec.family) {
    case DgpFamily::OrdinalBinaryX: return "ordinal binary-X";
    case DgpFamily::OrdinalContinuous: s = spec.error_dist == ErrorDist::Normal ? "ordinal normal" : "ordinal chi3"; break;
    case DgpFamily::Multinomial: s = "multinomial MNL"; break;
    case DgpFamily::MultinomialAbs: s = "multinomial MNabs"; break;
  }
  if (spec.regression_misspec) s += " reg-misspecified";
  return s;
}

SimulatedSample generate(const DgpSpec& spec) {
  validate_spec(spec);
  const Index n = spec.n;
  RngStream rng(spec.seed, spec.stream);
  SimulatedSample s;
  Dataset& data = s.data;
  data.J = 2;
  data.y.resize(n);
  data.d.resize(static_cast<std::size_t>(n));
  s.true_probs.resize(n, 3);
  s.true_mu.resize(n, 2);
  s.y0.resize(n);

  if (is_ordinal(spec.family)) {
    const bool binary = spec.family == DgpFamily::OrdinalBinaryX;
    data.x.resize(n, binary ? 2 : 3);
    data.x_labels = binary ? std::vector<std::string>{"1", "X2"} : std::vector<std::string>{"1", "X2", "X3"};
    s.true_index.resize(n, 1);
    for (Index i = 0; i < n; ++i) {
      double x2, x3 = 0.0, eps, idx;
      if (binary) {
        x2 = rng.uniform() < 0.7 ? 1.0 : 0.0;
        eps = 0.5 * rng.normal();
        idx = x2;
      } else {
        x2 = rng.normal();
        x3 = 2.0 * rng.uniform();
        if (spec.error_dist == ErrorDist::Normal) {
          eps = rng.normal();
        } else {
          double chi = 0.0;
          for (int k = 0; k < 3; ++k) {
            const double z = rng.normal();
            chi += z * z;
          }
          eps = (chi - 3.0) / kSqrt6;
        }
        idx = x2 + x3 + (spec.regression_misspec ? x2 * x2 : 0.0);
      }
      const double u = rng.normal();
      const double latent = idx + eps;
      const int d = (latent >= 0.0 ? 1 : 0) + (latent >= 1.0 ? 1 : 0);

      if (binary) {
        s.true_probs(i, 0) = norm_cdf(-idx / 0.5);
        s.true_probs(i, 1) = norm_interval(-idx / 0.5, (1.0 - idx) / 0.5);
        s.true_probs(i, 2) = norm_sf((1.0 - idx) / 0.5);
      } else if (spec.error_dist == ErrorDist::Normal) {
        s.true_probs(i, 0) = norm_cdf(-idx);
        s.true_probs(i, 1) = norm_interval(-idx, 1.0 - idx);
        s.true_probs(i, 2) = norm_sf(1.0 - idx);
      } else {
        s.true_probs(i, 0) = std_chi3_cdf(-idx);
        s.true_probs(i, 1) = std_chi3_interval(-idx, 1.0 - idx);
        s.true_probs(i, 2) = std_chi3_sf(1.0 - idx);
      }
      const double effect_x = binary ? x2 : x3;
      s.y0[i] = binary ? 1.0 + x2 + u : 1.0 + x2 + x3 + u;
      s.true_mu(i, 0) = effect_x;
      s.true_mu(i, 1) = 2.0 * effect_x;
      data.y[i] = s.y0[i] + d * effect_x;
      data.d[static_cast<std::size_t>(i)] = d;
      data.x(i, 0) = 1.0;
      data.x(i, 1) = x2;
      if (!binary) data.x(i, 2) = x3;
      s.true_index(i, 0) = idx;
    }
    return s;
  }

  // Multinomial designs.
  data.x.resize(n, 4);
  data.x_labels = {"X0", "X1", "X2", "X3"};
  for (Index i = 0; i < n; ++i) {
    data.x(i, 0) = rng.normal();
    data.x(i, 1) = rng.normal();
    data.x(i, 2) = rng.normal();
    data.x(i, 3) = 2.0 * rng.uniform();
  }
  const MnlSpec w_spec = simulation_mnl_spec(spec.regression_misspec);
  const MnlModel dgp_model(data.x, w_spec);
  VectorXd alpha(w_spec.alpha_len);
  if (spec.regression_misspec) {
    alpha << 1, 1, 1, 1, 2, 1, 2;
  } else {
    alpha << 1, 1, 1, 1, 2;
  }
  s.true_index = dgp_model.indices(alpha);
  if (spec.family == DgpFamily::Multinomial) {
    s.true_probs = dgp_model.probabilities(alpha);
  } else {
    for (Index i = 0; i < n; ++i) {
      const double a1 = std::abs(s.true_index(i, 0));
      const double a2 = std::abs(s.true_index(i, 1));
      const double den = 1.0 + a1 + a2;
      s.true_probs(i, 0) = 1.0 / den;
      s.true_probs(i, 1) = a1 / den;
      s.true_probs(i, 2) = a2 / den;
    }
  }
  for (Index i = 0; i < n; ++i) {
    const double v = rng.uniform();
    const int d = v < s.true_probs(i, 0) ? 0 : (v < s.true_probs(i, 0) + s.true_probs(i, 1) ? 1 : 2);
    const double u = rng.normal();
    const double x3 = data.x(i, 3);
    s.y0[i] = 1.0 + x3 + u;
    s.true_mu(i, 0) = x3;
    s.true_mu(i, 1) = 2.0 * x3;
    data.y[i] = s.y0[i] + d * x3;
    data.d[static_cast<std::size_t>(i)] = d;
  }
  return s;
}

ModelConfig estimation_model(const DgpSpec& spec) {
  ModelConfig cfg;
  if (is_ordinal(spec.family)) {
    cfg.kind = ModelKind::OrderedProbit;
  } else {
    cfg.kind = ModelKind::Mnl;
    cfg.mnl = simulation_mnl_spec(false);
  }
  return cfg;
}

std::optional<VectorXd> true_alpha(const DgpSpec& spec) {
  if (spec.regression_misspec) return std::nullopt;
  switch (spec.family) {
    case DgpFamily::OrdinalBinaryX: {
      // sigma = 0.5 rescales slopes and threshold by 2.
      VectorXd a(3);
      a << 0.0, 2.0, 2.0;
      return a;
    }
    case DgpFamily::OrdinalContinuous: {
      if (spec.error_dist != ErrorDist::Normal) return std::nullopt;
      VectorXd a(4);
      a << 0.0, 1.0, 1.0, 1.0;
      return a;
    }
    case DgpFamily::Multinomial: {
      VectorXd a(5);
      a << 1, 1, 1, 1, 2;
      return a;
    }
    case DgpFamily::MultinomialAbs: return std::nullopt;
  }
  return std::nullopt;
}

namespace {

struct RepOutcome {
  bool ok = false;
  std::string failure;
  std::vector<double> error;
  std::vector<double> asy_sd;
};

}  // namespace

MonteCarloReport run_monte_carlo(const DgpSpec& spec, const MonteCarloOptions& options) {
  validate_spec(spec);
  if (options.reps < 2) throw Error(ErrorKind::InvalidArgument, "need at least 2 repetitions");
  const ModelConfig model_cfg = estimation_model(spec);

  struct Cell {
    CenteringVariant variant;
    int d;
  };
  std::vector<Cell> cells;
  for (int d : options.targets)
    for (const auto& v : options.variants) cells.push_back({v, d});

  std::vector<RepOutcome> outcomes(static_cast<std::size_t>(options.reps));
  parallel_for(options.reps, resolve_threads(options.threads), [&](Index r) {
    RepOutcome& out = outcomes[static_cast<std::size_t>(r)];
    try {
      DgpSpec rep_spec = spec;
      rep_spec.seed = options.base_seed;
      rep_spec.stream = static_cast<std::uint64_t>(r);
      const SimulatedSample sample = generate(rep_spec);
      const PropensityFit fit = fit_propensity(model_cfg.build(sample.data), sample.data.d);
      const MatrixXd& target_probs = options.target == TargetMode::TruePropensity ? sample.true_probs : fit.probs;
      for (const Cell& c : cells) {
        const SubsampleEstimate est = estimate(sample.data, fit, c.d, c.variant);
        const VarianceReport var = asy_variance(est, fit, sample.data);
        const double target = ow_target(overlap_weights(target_probs, c.d), sample.true_mu.col(c.d - 1));
        out.error.push_back(est.beta_hat - target);
        out.asy_sd.push_back(var.asy_sd);
      }
      out.ok = true;
    } catch (const Error& e) {
      out.ok = false;
      out.failure = "rep " + std::to_string(r) + ": " + e.what();
      out.error.clear();
      out.asy_sd.clear();
    }
  });

  MonteCarloReport rep;
  rep.panel = panel_label(spec);
  rep.n = spec.n;
  rep.reps = options.reps;
  rep.base_seed = options.base_seed;
  for (const auto& o : outcomes) {
    if (!o.ok) {
      ++rep.failed;
      rep.failures.push_back(o.failure);
    }
  }
  if (rep.failed > 0.02 * options.reps) {
    throw Error(ErrorKind::ExcessFailures, std::to_string(rep.failed) + " of " + std::to_string(options.reps) +
                                               " repetitions failed; first: " + rep.failures.front());
  }
  const double ok = static_cast<double>(options.reps - rep.failed);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    MonteCarloRow row;
    row.estimator = variant_name(cells[c].variant);
    row.d = cells[c].d;
    double sum = 0.0, sum_sq = 0.0, sum_asy = 0.0, covered = 0.0;
    for (const auto& o : outcomes) {
      if (!o.ok) continue;
      const double e = o.error[c];
      sum += e;
      sum_sq += e * e;
      sum_asy += o.asy_sd[c];
      if (std::abs(e) <= 1.96 * o.asy_sd[c]) covered += 1.0;
      if (options.keep_draws) {
        row.errors.push_back(e);
        row.asy_sds.push_back(o.asy_sd[c]);
      }
    }
    const double bias = sum / ok;
    double ss = 0.0;
    for (const auto& o : outcomes) {
      if (o.ok) ss += (o.error[c] - bias) * (o.error[c] - bias);
    }
    row.abs_bias = std::abs(bias);
    row.sim_sd = std::sqrt(ss / ok);
    row.avg_asy_sd = sum_asy / ok;
    row.rmse = std::sqrt(sum_sq / ok);
    row.coverage = covered / ok;
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

DemoReport usual_ols_demo(Index n, std::uint64_t seed) {
  DgpSpec spec;
  spec.family = DgpFamily::OrdinalBinaryX;
  spec.n = n;
  spec.seed = seed;
  const SimulatedSample s = generate(spec);
  const Dataset& data = s.data;

  DemoReport rep;
  rep.n = n;
  rep.seed = seed;
  MatrixXd design(n, 4);
  design.col(0).setOnes();
  design.middleCols(1, 2) = make_dummies(data.d, 2);
  design.col(3) = data.x.col(1);
  const OlsFit ols = fit_ols(design, data.y);
  rep.ols_coef = ols.coef;
  rep.ols_tvalues = ols.coef.cwiseQuotient(ols_standard_errors(design, ols));

  ContaminationReport exact = theorem1_weights(conditional_cov_exact(s.true_probs));
  rep.estimand_exact = theorem1_estimand(exact, s.true_mu);
  rep.weight_means_exact = exact.weight_means;
  ContaminationReport empirical = theorem1_weights(conditional_cov(data, cells_from_covariates(data.x)));
  rep.estimand_empirical = theorem1_estimand(empirical, s.true_mu);

  // beta_1, E(X2), 2 E(X2), beta_2 with P(X2 = 1) = 0.7.
  rep.naive_target.resize(4);
  rep.naive_target << 1.0, 0.7, 1.4, 1.0;
  return rep;
}

}  // namespace hetfx
