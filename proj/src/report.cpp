#include "hetfx/report.hpp"

#include <iomanip>
#include <ostream>
#include <sstream>

namespace hetfx {

using nlohmann::json;

namespace {

json vec(const VectorXd& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json mat(const MatrixXd& m) {
  json a = json::array();
  for (Index r = 0; r < m.rows(); ++r) a.push_back(vec(m.row(r).transpose()));
  return a;
}

json overlap_json(const OverlapDiagnostics& o) {
  return {{"min_pi", o.min_pi}, {"median_pi", o.median_pi}, {"max_pi", o.max_pi},
          {"count_below_0.01", o.below_001}, {"count_above_0.99", o.above_099}};
}

std::string joined(const VectorXd& v) {
  std::string s = "(";
  for (Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_human(v[i]);
  return s + ")";
}

}  // namespace

std::string format_human(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

json to_json(const EstimateReport& r) {
  json rows = json::array();
  for (const auto& e : r.rows) {
    json row = {{"d", e.d},         {"variant", e.variant}, {"beta_hat", e.beta_hat},
                {"asy_sd", e.asy_sd}, {"t_value", e.t_value}, {"n_sub", e.n_sub},
                {"overlap", overlap_json(e.overlap)}};
    if (e.bootstrap_se) {
      row["bootstrap_se"] = *e.bootstrap_se;
      row["bootstrap_dropped"] = e.bootstrap_dropped;
    }
    rows.push_back(std::move(row));
  }
  json cov = json::array();
  for (const auto& c : r.covariances) {
    json block = {{"variant", c.variant}, {"targets", c.targets}, {"cov_matrix", mat(c.cov)}};
    block["wald"] = c.wald ? json(*c.wald) : json(nullptr);
    cov.push_back(std::move(block));
  }
  return {{"command", "estimate"},
          {"model", r.model},
          {"n", r.n},
          {"propensity", {{"labels", r.alpha_labels},
                          {"alpha_hat", vec(r.alpha_hat)},
                          {"opg_se", vec(r.alpha_se)},
                          {"iterations", r.iterations},
                          {"loglik", r.loglik}}},
          {"estimates", rows},
          {"covariances", cov}};
}

json to_json(const MonteCarloReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"estimator", row.estimator}, {"d", row.d},           {"abs_bias", row.abs_bias},
                    {"sd", row.sim_sd},           {"sd_asy", row.avg_asy_sd}, {"rmse", row.rmse},
                    {"coverage", row.coverage}});
  }
  return {{"command", "simulate"}, {"panel", r.panel}, {"n", r.n},         {"reps", r.reps},
          {"failed", r.failed},    {"seed", r.base_seed}, {"rows", rows}};
}

json to_json(const DemoReport& r) {
  return {{"command", "demo"},
          {"n", r.n},
          {"seed", r.seed},
          {"ols_labels", {"1", "D1", "D2", "X2"}},
          {"ols_coef", vec(r.ols_coef)},
          {"ols_tvalues", vec(r.ols_tvalues)},
          {"theorem1_estimand", vec(r.estimand_exact)},
          {"theorem1_estimand_empirical", vec(r.estimand_empirical)},
          {"weight_means", mat(r.weight_means_exact)},
          {"naive_target", vec(r.naive_target)}};
}

CsvTable to_csv(const EstimateReport& r) {
  CsvTable t;
  t.header = {"d", "variant", "beta_hat", "asy_sd", "t_value", "n_sub", "min_pi", "median_pi", "max_pi",
              "count_below_0.01", "count_above_0.99", "bootstrap_se"};
  for (const auto& e : r.rows) {
    t.rows.push_back({std::to_string(e.d), e.variant, format_double(e.beta_hat), format_double(e.asy_sd),
                      format_double(e.t_value), std::to_string(e.n_sub), format_double(e.overlap.min_pi),
                      format_double(e.overlap.median_pi), format_double(e.overlap.max_pi),
                      std::to_string(e.overlap.below_001), std::to_string(e.overlap.above_099),
                      e.bootstrap_se ? format_double(*e.bootstrap_se) : ""});
  }
  return t;
}

CsvTable to_csv(const MonteCarloReport& r) {
  CsvTable t;
  t.header = {"panel", "n", "reps", "failed", "estimator", "d", "abs_bias", "sd", "sd_asy", "rmse", "coverage"};
  for (const auto& row : r.rows) {
    t.rows.push_back({r.panel, std::to_string(r.n), std::to_string(r.reps), std::to_string(r.failed), row.estimator,
                      std::to_string(row.d), format_double(row.abs_bias), format_double(row.sim_sd),
                      format_double(row.avg_asy_sd), format_double(row.rmse), format_double(row.coverage)});
  }
  return t;
}

void print(std::ostream& out, const EstimateReport& r) {
  out << "propensity model: " << r.model << " (N = " << r.n << ", " << r.iterations << " Newton iterations)\n";
  for (std::size_t k = 0; k < r.alpha_labels.size(); ++k) {
    out << "  " << std::left << std::setw(14) << r.alpha_labels[k] << std::right << std::setw(12)
        << format_human(r.alpha_hat[static_cast<Index>(k)]) << "  (" << format_human(r.alpha_se[static_cast<Index>(k)])
        << ")\n";
  }
  out << "d  variant     beta_hat      asy_sd     t_value   n_sub  pi_min/median/max\n";
  for (const auto& e : r.rows) {
    out << e.d << "  " << std::left << std::setw(10) << e.variant << std::right << std::setw(10) << format_human(e.beta_hat)
        << std::setw(12) << format_human(e.asy_sd) << std::setw(12) << format_human(e.t_value) << std::setw(8) << e.n_sub
        << "  " << format_human(e.overlap.min_pi) << "/" << format_human(e.overlap.median_pi) << "/"
        << format_human(e.overlap.max_pi);
    if (e.bootstrap_se) out << "  bootstrap se " << format_human(*e.bootstrap_se);
    out << "\n";
  }
  for (const auto& c : r.covariances) {
    out << "covariance (" << c.variant << "):\n";
    for (Index i = 0; i < c.cov.rows(); ++i) {
      out << " ";
      for (Index j = 0; j < c.cov.cols(); ++j) out << " " << std::setw(12) << format_human(c.cov(i, j));
      out << "\n";
    }
    if (c.wald) out << "  Wald (all effects zero): " << format_human(*c.wald) << "\n";
  }
}

void print(std::ostream& out, const MonteCarloReport& r) {
  out << r.panel << ", N = " << r.n << ", " << r.reps << " repetitions";
  if (r.failed) out << " (" << r.failed << " failed)";
  out << "\n  estimator   d   |bias| (SD, SD_asy) RMSE   coverage\n";
  for (const auto& row : r.rows) {
    out << "  " << std::left << std::setw(10) << row.estimator << std::right << std::setw(3) << row.d << "   "
        << format_human(row.abs_bias) << " (" << format_human(row.sim_sd) << ", " << format_human(row.avg_asy_sd)
        << ") " << format_human(row.rmse) << "   " << format_human(row.coverage) << "\n";
  }
}

void print(std::ostream& out, const DemoReport& r) {
  out << "binary-X ordinal design, N = " << r.n << "\n";
  out << "usual OLS on (1, D1, D2, X2):   " << joined(r.ols_coef) << "\n";
  out << "  t-values:                     " << joined(r.ols_tvalues) << "\n";
  out << "contamination-weight estimand:  " << joined(r.estimand_exact) << "  (from cell frequencies "
      << joined(r.estimand_empirical) << ")\n";
  out << "naive target:                   " << joined(r.naive_target) << "\n";
}

}  // namespace hetfx
