#include "hetfx/estimators.hpp"

#include "hetfx/error.hpp"

#include <algorithm>

namespace hetfx {

std::string variant_name(const CenteringVariant& v) {
  switch (v.kind) {
    case Centering::RawMean: return "raw";
    case Centering::CovariatePoly: return "covpoly";
    case Centering::IndexPoly: return "indexpoly";
  }
  return "?";
}

CenteringVariant parse_variant(const std::string& name) {
  CenteringVariant v;
  if (name == "raw") {
    v.kind = Centering::RawMean;
  } else if (name == "covpoly") {
    v.kind = Centering::CovariatePoly;
  } else if (name == "indexpoly") {
    v.kind = Centering::IndexPoly;
  } else {
    throw Error(ErrorKind::InvalidArgument, "unknown variant '" + name + "' (expected raw, covpoly or indexpoly)");
  }
  return v;
}

std::vector<Index> subsample_mask(const Dataset& data, int d) {
  if (d < 1 || d > data.J) throw Error(ErrorKind::BadCategory, "target category must be in 1..J");
  std::vector<Index> rows;
  Index n0 = 0, nd = 0;
  for (Index i = 0; i < data.n(); ++i) {
    if (data.d[i] == 0) {
      ++n0;
      rows.push_back(i);
    } else if (data.d[i] == d) {
      ++nd;
      rows.push_back(i);
    }
  }
  if (n0 == 0 || nd == 0) {
    throw Error(ErrorKind::EmptySubsampleSide, n0 == 0 ? "no control observations"
                                                        : "no observations with D = " + std::to_string(d));
  }
  return rows;
}

DesignMatrix index_basis(const MatrixXd& indices, std::span<const Index> rows, const CenteringVariant& v) {
  MatrixXd sub(static_cast<Index>(rows.size()), indices.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) sub.row(static_cast<Index>(k)) = indices.row(rows[k]);
  std::vector<std::string> labels;
  for (Index c = 0; c < indices.cols(); ++c) labels.push_back("index" + std::to_string(c + 1));
  return poly_basis(sub, v.q, v.interactions, labels);
}

DesignMatrix centering_basis(const Dataset& data, std::span<const Index> rows, const CenteringVariant& v,
                             const PropensityFit* fit) {
  switch (v.kind) {
    case Centering::RawMean: return {};
    case Centering::CovariatePoly: {
      const auto cols = non_constant_columns(data.x);
      MatrixXd sub(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
      std::vector<std::string> labels;
      for (std::size_t c = 0; c < cols.size(); ++c) {
        for (std::size_t k = 0; k < rows.size(); ++k) sub(static_cast<Index>(k), static_cast<Index>(c)) = data.x(rows[k], cols[c]);
        labels.push_back(cols[c] < static_cast<Index>(data.x_labels.size()) ? data.x_labels[cols[c]]
                                                                            : "x" + std::to_string(cols[c] + 1));
      }
      return poly_basis(sub, v.q, v.interactions, labels);
    }
    case Centering::IndexPoly: {
      if (fit == nullptr || fit->indices.size() == 0) {
        throw Error(ErrorKind::InvalidArgument, "index centering needs a propensity fit with index functions");
      }
      return index_basis(fit->indices, rows, v);
    }
  }
  return {};
}

Centered center_outcome(const Dataset& data, std::span<const Index> mask, const CenteringVariant& v,
                        const PropensityFit* fit) {
  if (mask.empty()) throw Error(ErrorKind::EmptySubsampleSide, "empty subsample");
  if (v.q < 0) throw Error(ErrorKind::InvalidArgument, "centering order must be >= 0");
  const auto m = static_cast<Index>(mask.size());
  VectorXd y(m);
  for (Index k = 0; k < m; ++k) y[k] = data.y[mask[k]];

  Centered out;
  if (v.kind == Centering::RawMean) {
    const double mean = v.raw_scope == RawMeanScope::FullSample ? data.y.mean() : y.mean();
    out.centered_y = y.array() - mean;
    out.gamma_hat = VectorXd::Constant(1, mean);
    out.basis_labels = {"1"};
    return out;
  }
  const DesignMatrix basis = centering_basis(data, mask, v, fit);
  const OlsFit ols = fit_ols(basis, y);
  out.centered_y = ols.residuals;
  out.gamma_hat = ols.coef;
  out.basis_labels = basis.column_labels;
  return out;
}

double olspsr(const VectorXd& centered_y, const VectorXd& psr) {
  if (centered_y.size() != psr.size()) throw Error(ErrorKind::DimensionMismatch, "centered y and psr differ in length");
  const double den = psr.squaredNorm();
  if (!(den > 1e-12 * static_cast<double>(std::max<Index>(psr.size(), 1)))) {
    throw Error(ErrorKind::DegeneratePsr, "propensity-score residuals are all zero on the subsample");
  }
  return centered_y.dot(psr) / den;
}

VectorXd psr_on_rows(const Dataset& data, const MatrixXd& probs, int d, std::span<const Index> rows) {
  VectorXd e(static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Index i = rows[k];
    const double den = probs(i, 0) + probs(i, d);
    if (den < 1e-12) {
      throw Error(ErrorKind::DegenerateDenominator,
                  "P0 + P" + std::to_string(d) + " below 1e-12 at row " + std::to_string(i));
    }
    e[static_cast<Index>(k)] = (data.d[i] == d ? 1.0 : 0.0) - probs(i, d) / den;
  }
  return e;
}

OverlapWeights overlap_weights(const MatrixXd& probs, int d, std::span<const Index> rows) {
  if (d < 1 || d >= probs.cols()) throw Error(ErrorKind::BadCategory, "target category must be in 1..J");
  OverlapWeights out;
  if (rows.empty()) {
    out.rows.resize(static_cast<std::size_t>(probs.rows()));
    for (Index i = 0; i < probs.rows(); ++i) out.rows[static_cast<std::size_t>(i)] = i;
  } else {
    out.rows.assign(rows.begin(), rows.end());
  }
  const auto m = static_cast<Index>(out.rows.size());
  out.w.resize(m);
  for (Index k = 0; k < m; ++k) {
    const double p0 = probs(out.rows[k], 0);
    const double pd = probs(out.rows[k], d);
    out.w[k] = p0 + pd > 0.0 ? p0 * pd / (p0 + pd) : 0.0;
  }
  const double mean = out.w.mean();
  if (!(mean > 0.0)) throw Error(ErrorKind::DegenerateDenominator, "overlap weights are all zero");
  out.w /= mean;
  return out;
}

OverlapWeights overlap_weights(const PropensityFit& fit, int d, std::span<const Index> rows) {
  return overlap_weights(fit.probs, d, rows);
}

double ow_target(const OverlapWeights& weights, const VectorXd& mu_d) {
  if (mu_d.size() != weights.w.size()) throw Error(ErrorKind::DimensionMismatch, "mu_d must align with the weights");
  return weights.w.dot(mu_d) / static_cast<double>(mu_d.size());
}

OverlapDiagnostics overlap_diagnostics(const VectorXd& pi_d) {
  OverlapDiagnostics diag;
  if (pi_d.size() == 0) return diag;
  std::vector<double> v(pi_d.data(), pi_d.data() + pi_d.size());
  std::sort(v.begin(), v.end());
  diag.min_pi = v.front();
  diag.max_pi = v.back();
  const std::size_t mid = v.size() / 2;
  diag.median_pi = v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
  for (double p : v) {
    if (p < 0.01) ++diag.below_001;
    if (p > 0.99) ++diag.above_099;
  }
  return diag;
}

SubsampleEstimate estimate(const Dataset& data, const PropensityFit& fit, int d, const CenteringVariant& v) {
  if (fit.n() != data.n()) throw Error(ErrorKind::DimensionMismatch, "propensity fit and data differ in size");
  SubsampleEstimate est;
  est.d = d;
  est.variant = v;
  est.mask = subsample_mask(data, d);
  est.n_sub = static_cast<Index>(est.mask.size());
  est.psr = psr_on_rows(data, fit.probs, d, est.mask);
  Centered c = center_outcome(data, est.mask, v, &fit);
  est.centered_y = std::move(c.centered_y);
  est.gamma_hat = std::move(c.gamma_hat);
  est.gamma_labels = std::move(c.basis_labels);
  est.beta_hat = olspsr(est.centered_y, est.psr);
  // pi^d = D_d - psr on the subsample.
  VectorXd pi(est.n_sub);
  for (Index k = 0; k < est.n_sub; ++k) pi[k] = (data.d[est.mask[k]] == d ? 1.0 : 0.0) - est.psr[k];
  est.overlap = overlap_diagnostics(pi);
  return est;
}

}  // namespace hetfx
