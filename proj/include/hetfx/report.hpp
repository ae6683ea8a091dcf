#pragma once

#include "hetfx/csv.hpp"
#include "hetfx/estimators.hpp"
#include "hetfx/simulation.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hetfx {

struct EstimateRow {
  int d = 1;
  std::string variant;
  double beta_hat = 0.0;
  double asy_sd = 0.0;
  double t_value = 0.0;
  Index n_sub = 0;
  OverlapDiagnostics overlap;
  std::optional<double> bootstrap_se;
  int bootstrap_dropped = 0;
};

struct CovarianceBlock {
  std::string variant;
  std::vector<int> targets;
  MatrixXd cov;
  std::optional<double> wald;
};

struct EstimateReport {
  std::string model;
  Index n = 0;
  std::vector<std::string> alpha_labels;
  VectorXd alpha_hat;
  VectorXd alpha_se;
  int iterations = 0;
  double loglik = 0.0;
  std::vector<EstimateRow> rows;
  std::vector<CovarianceBlock> covariances;
};

nlohmann::json to_json(const EstimateReport& r);
nlohmann::json to_json(const MonteCarloReport& r);
nlohmann::json to_json(const DemoReport& r);

CsvTable to_csv(const EstimateReport& r);
CsvTable to_csv(const MonteCarloReport& r);

// Human-readable summaries, 6 significant digits.
void print(std::ostream& out, const EstimateReport& r);
void print(std::ostream& out, const MonteCarloReport& r);
void print(std::ostream& out, const DemoReport& r);

std::string format_human(double v);

}  // namespace hetfx
