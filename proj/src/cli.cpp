#include "hetfx/cli.hpp"

#include "hetfx/contamination.hpp"
#include "hetfx/csv.hpp"
#include "hetfx/error.hpp"
#include "hetfx/estimators.hpp"
#include "hetfx/inference.hpp"
#include "hetfx/parallel.hpp"
#include "hetfx/propensity.hpp"
#include "hetfx/report.hpp"
#include "hetfx/simulation.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>

namespace hetfx {

namespace {

constexpr const char* kVariantHelp =
    "Centering variants:\n"
    "  raw        beta^0   Y minus its sample mean\n"
    "  covpoly    beta^X   Y minus an order-q polynomial in X fit on D in {0,d}\n"
    "  indexpoly  beta^pi  Y minus an order-q polynomial in the fitted index (X'kappa or W_j'alpha) fit on D in {0,d}\n"
    "Exit codes: 0 success, 2 input or validation error, 3 numerical failure.\n";

struct DataOptions {
  std::string input;
  std::string outcome = "y";
  std::string treatment = "d";
  std::vector<std::string> covariates;
  std::string model = "ordered-probit";
  std::vector<std::string> mnl_terms;
  std::string constant = "auto";
  int categories = -1;
  std::vector<int> targets;
};

struct Output {
  std::string path;
  std::string format;

  bool csv() const {
    if (!format.empty()) return format == "csv";
    return path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
  }
};

void add_data_options(CLI::App* cmd, DataOptions& o) {
  cmd->add_option("--input", o.input, "CSV file with a header row")->required();
  cmd->add_option("--outcome", o.outcome, "outcome column")->capture_default_str();
  cmd->add_option("--treatment", o.treatment, "treatment column, integer coded 0..J")->capture_default_str();
  cmd->add_option("--covariates", o.covariates, "covariate columns")->delimiter(',')->required();
  cmd->add_option("--model", o.model, "treatment model")
      ->check(CLI::IsMember({"ordered-probit", "mnl"}))
      ->capture_default_str();
  cmd->add_option("--mnl-term", o.mnl_terms,
                  "MNL index entry alt:param:column[:scale]; column is a covariate name, exp(name) or 1. "
                  "Without terms the simulation design over four covariates is used");
  cmd->add_option("--constant", o.constant, "prepend a constant covariate (auto: ordered probit only)")
      ->check(CLI::IsMember({"auto", "yes", "no"}))
      ->capture_default_str();
  cmd->add_option("--categories", o.categories, "J, the largest treatment code (default: largest observed)");
  cmd->add_option("--targets", o.targets, "treatment categories d to estimate (default 1..J)")->delimiter(',');
}

void add_output_options(CLI::App* cmd, Output& o) {
  cmd->add_option("--output,--out", o.path, "report file");
  cmd->add_option("--format", o.format, "report format (default from the file extension, else json)")
      ->check(CLI::IsMember({"json", "csv"}));
}

MnlSpec parse_mnl_terms(const std::vector<std::string>& terms, const std::vector<std::string>& labels, int J) {
  MnlSpec spec;
  spec.J = J;
  for (const auto& raw : terms) {
    std::vector<std::string> parts;
    std::stringstream ss(raw);
    std::string piece;
    while (std::getline(ss, piece, ':')) parts.push_back(piece);
    if (parts.size() < 3 || parts.size() > 4) {
      throw Error(ErrorKind::InvalidArgument, "bad --mnl-term '" + raw + "' (expected alt:param:column[:scale])");
    }
    MnlTerm t;
    try {
      t.alternative = std::stoi(parts[0]);
      t.param = std::stol(parts[1]) - 1;
      if (parts.size() == 4) t.scale = std::stod(parts[3]);
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidArgument, "bad number in --mnl-term '" + raw + "'");
    }
    std::string col = parts[2];
    if (col.rfind("exp(", 0) == 0 && col.back() == ')') {
      t.exp_transform = true;
      col = col.substr(4, col.size() - 5);
    }
    if (col == "1" && std::find(labels.begin(), labels.end(), "1") == labels.end()) {
      t.covariate = -1;
    } else {
      auto it = std::find(labels.begin(), labels.end(), col);
      if (it == labels.end()) throw Error(ErrorKind::InvalidArgument, "--mnl-term column '" + col + "' is not a covariate");
      t.covariate = it - labels.begin();
    }
    spec.alpha_len = std::max(spec.alpha_len, t.param + 1);
    spec.terms.push_back(t);
  }
  for (Index p = 0; p < spec.alpha_len; ++p) spec.param_labels.push_back("alpha" + std::to_string(p + 1));
  return spec;
}

struct LoadedData {
  Dataset data;
  ModelConfig model;
  std::vector<int> targets;
};

LoadedData load(const DataOptions& o) {
  LoadedData out;
  const bool mnl = o.model == "mnl";
  const bool constant = o.constant == "yes" || (o.constant == "auto" && !mnl);
  out.data = dataset_from_csv(read_csv(o.input), o.outcome, o.treatment, o.covariates, constant, o.categories);
  validate(out.data);
  out.model.kind = mnl ? ModelKind::Mnl : ModelKind::OrderedProbit;
  if (mnl) {
    if (o.mnl_terms.empty()) {
      if (out.data.x.cols() != 4 || out.data.J != 2) {
        throw Error(ErrorKind::InvalidArgument,
                    "the default MNL design needs J = 2 and four covariates (X0, X1, X2, X3); pass --mnl-term otherwise");
      }
      out.model.mnl = simulation_mnl_spec(false);
    } else {
      out.model.mnl = parse_mnl_terms(o.mnl_terms, out.data.x_labels, out.data.J);
    }
  }
  out.targets = o.targets;
  if (out.targets.empty()) {
    for (int d = 1; d <= out.data.J; ++d) out.targets.push_back(d);
  }
  for (int d : out.targets) {
    if (d < 1 || d > out.data.J) throw Error(ErrorKind::BadCategory, "target " + std::to_string(d) + " not in 1..J");
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::DataError, "cannot write '" + path + "'");
  f << text;
}

void write_report(const Output& o, const nlohmann::json& j, const CsvTable& csv) {
  if (o.path.empty()) return;
  write_text(o.path, o.csv() ? to_csv_string(csv) : j.dump(2) + "\n");
}

std::vector<CenteringVariant> parse_variants(const std::vector<std::string>& names, int q, bool interactions) {
  std::vector<CenteringVariant> out;
  for (const auto& n : names) {
    CenteringVariant v = parse_variant(n);
    v.q = q;
    v.interactions = interactions;
    out.push_back(v);
  }
  return out;
}

// ---------------------------------------------------------------- estimate

struct EstimateOptions {
  DataOptions data;
  Output output;
  std::vector<std::string> variants = {"raw", "covpoly", "indexpoly"};
  int q = 2;
  bool no_interactions = false;
  std::string se = "asymptotic";
  int bootstrap_reps = 200;
  std::uint64_t seed = 1;
  int threads = 0;
};

int cmd_estimate(const EstimateOptions& o, std::ostream& out) {
  const LoadedData ld = load(o.data);
  const Dataset& data = ld.data;
  const auto variants = parse_variants(o.variants, o.q, !o.no_interactions);
  const PropensityFit fit = fit_propensity(ld.model.build(data), data.d);

  EstimateReport rep;
  rep.model = o.data.model;
  rep.n = data.n();
  rep.alpha_labels = fit.model->param_labels();
  rep.alpha_hat = fit.alpha_hat;
  rep.alpha_se = opg_standard_errors(fit);
  rep.iterations = fit.iterations;
  rep.loglik = fit.loglik;
  for (const auto& v : variants) {
    std::vector<SubsampleEstimate> ests;
    for (int d : ld.targets) {
      SubsampleEstimate est = estimate(data, fit, d, v);
      est.asy_sd = asy_variance(est, fit, data).asy_sd;
      EstimateRow row;
      row.d = d;
      row.variant = variant_name(v);
      row.beta_hat = est.beta_hat;
      row.asy_sd = est.asy_sd;
      row.t_value = est.beta_hat / est.asy_sd;
      row.n_sub = est.n_sub;
      row.overlap = est.overlap;
      if (o.se == "bootstrap") {
        PipelineConfig cfg{ld.model, d, v, {}};
        const BootstrapResult b = bootstrap_se(data, cfg, o.bootstrap_reps, o.seed, resolve_threads(o.threads));
        row.bootstrap_se = b.se;
        row.bootstrap_dropped = b.dropped;
        if (b.drop_warning) {
          out << "warning: " << b.dropped << " of " << b.requested << " bootstrap replicates failed (d = " << d
              << ", " << row.variant << ")\n";
        }
      }
      rep.rows.push_back(row);
      ests.push_back(std::move(est));
    }
    if (ests.size() >= 2) {
      const CovarianceReport cov = asy_covariance(ests, fit, data);
      rep.covariances.push_back({variant_name(v), ld.targets, cov.cov_matrix, cov.wald});
    }
  }
  print(out, rep);
  write_report(o.output, to_json(rep), to_csv(rep));
  return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
  Output output;
  std::string table = "ordinal";
  int panel = 1;
  Index n = 1000;
  int reps = 500;
  bool full = false;
  std::uint64_t seed = 7;
  int threads = 0;
  std::string target = "true";
  std::vector<std::string> variants = {"raw", "covpoly", "indexpoly"};
  std::vector<int> targets = {1, 2};
  int q = 2;
  std::string emit_data;
};

int cmd_simulate(const SimulateOptions& o, std::ostream& out) {
  const SimTable table = o.table == "ordinal" ? SimTable::Ordinal : SimTable::Multinomial;
  const DgpSpec spec = panel_spec(table, o.panel, o.n, o.seed);
  if (!o.emit_data.empty()) {
    write_csv(o.emit_data, dataset_to_csv(generate(spec).data));
    out << "wrote one generated sample (seed " << o.seed << ", stream 0) to " << o.emit_data << "\n";
  }
  MonteCarloOptions mc;
  mc.reps = o.full ? 5000 : o.reps;
  mc.base_seed = o.seed;
  mc.threads = resolve_threads(o.threads);
  mc.target = o.target == "true" ? TargetMode::TruePropensity : TargetMode::EstimatedPropensity;
  mc.variants = parse_variants(o.variants, o.q, true);
  mc.targets = o.targets;
  const MonteCarloReport rep = run_monte_carlo(spec, mc);
  print(out, rep);
  write_report(o.output, to_json(rep), to_csv(rep));
  return 0;
}

// ---------------------------------------------------------------- demo

int cmd_demo(Index n, std::uint64_t seed, const Output& o, std::ostream& out) {
  const DemoReport rep = usual_ols_demo(n, seed);
  print(out, rep);
  if (!o.path.empty()) write_text(o.path, to_json(rep).dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------- weights

std::vector<double> quantiles(VectorXd v, std::initializer_list<double> probs) {
  std::sort(v.data(), v.data() + v.size());
  std::vector<double> out;
  for (double p : probs) {
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<Index>(pos);
    const Index hi = std::min<Index>(lo + 1, v.size() - 1);
    out.push_back(v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]));
  }
  return out;
}

int cmd_weights(const DataOptions& d, bool contamination, const std::string& path, std::ostream& out) {
  const LoadedData ld = load(d);
  const Dataset& data = ld.data;
  const PropensityFit fit = fit_propensity(ld.model.build(data), data.d);

  CsvTable t;
  t.header = {"row", "d"};
  std::vector<VectorXd> cols;
  for (int target : ld.targets) {
    const OverlapWeights w = overlap_weights(fit, target);
    VectorXd pi(data.n());
    for (Index i = 0; i < data.n(); ++i) {
      const double den = fit.probs(i, 0) + fit.probs(i, target);
      pi[i] = den > 0.0 ? fit.probs(i, target) / den : 0.0;
    }
    t.header.push_back("pi_" + std::to_string(target));
    t.header.push_back("ow_" + std::to_string(target));
    cols.push_back(pi);
    cols.push_back(w.w);
    const auto q = quantiles(w.w, {0.0, 0.25, 0.5, 0.75, 1.0});
    out << "ow_" << target << ": mean " << format_human(w.w.mean()) << ", min " << format_human(q[0]) << ", q25 "
        << format_human(q[1]) << ", median " << format_human(q[2]) << ", q75 " << format_human(q[3]) << ", max "
        << format_human(q[4]) << "\n";
  }
  if (contamination) {
    ContaminationReport cr = theorem1_weights(conditional_cov(data, cells_from_covariates(data.x)));
    for (int k = 0; k < data.J; ++k) {
      for (int j = 0; j < data.J; ++j) {
        t.header.push_back("omega_" + std::to_string(k + 1) + "_" + std::to_string(j + 1));
        VectorXd c(data.n());
        for (Index i = 0; i < data.n(); ++i) c[i] = cr.weight(i, k, j);
        cols.push_back(c);
        out << "mean omega_" << k + 1 << j + 1 << " = " << format_human(cr.weight_means(k, j)) << "\n";
      }
    }
    if (cr.conjectured) out << "note: J >= 4, the weights are a conjectured decomposition\n";
  }
  for (Index i = 0; i < data.n(); ++i) {
    std::vector<std::string> row = {std::to_string(i), std::to_string(data.d[static_cast<std::size_t>(i)])};
    for (const auto& c : cols) row.push_back(format_double(c[i]));
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"hetfx: multiple-treatment effects via subsample OLS with propensity-score residuals"};
  app.footer(kVariantHelp);
  app.require_subcommand(1);

  EstimateOptions est;
  auto* estimate_cmd = app.add_subcommand("estimate", "estimate effects from a CSV file");
  add_data_options(estimate_cmd, est.data);
  add_output_options(estimate_cmd, est.output);
  estimate_cmd->add_option("--variant", est.variants, "raw, covpoly, indexpoly (comma separated)")
      ->delimiter(',')
      ->check(CLI::IsMember({"raw", "covpoly", "indexpoly"}));
  estimate_cmd->add_option("--q", est.q, "polynomial order of the centering")->check(CLI::NonNegativeNumber)->capture_default_str();
  estimate_cmd->add_flag("--no-interactions", est.no_interactions, "drop cross products from the centering basis");
  estimate_cmd->add_option("--se", est.se, "asymptotic or bootstrap")
      ->check(CLI::IsMember({"asymptotic", "bootstrap"}))
      ->capture_default_str();
  estimate_cmd->add_option("--bootstrap-reps", est.bootstrap_reps, "bootstrap replicates B (>= 100)")->capture_default_str();
  estimate_cmd->add_option("--seed", est.seed, "bootstrap seed")->capture_default_str();
  estimate_cmd->add_option("--threads", est.threads, "worker threads (default HETFX_THREADS or all cores)");
  estimate_cmd->footer(kVariantHelp);

  SimulateOptions sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo replication of the simulation tables");
  add_output_options(simulate_cmd, sim.output);
  simulate_cmd->add_option("--table", sim.table, "ordinal or multinomial")
      ->check(CLI::IsMember({"ordinal", "multinomial"}))
      ->capture_default_str();
  simulate_cmd->add_option("--panel", sim.panel, "panel 1..4")->check(CLI::Range(1, 4))->capture_default_str();
  simulate_cmd->add_option("--n", sim.n, "sample size")->capture_default_str();
  simulate_cmd->add_option("--reps", sim.reps, "repetitions")->capture_default_str();
  simulate_cmd->add_flag("--full", sim.full, "use 5000 repetitions");
  simulate_cmd->add_option("--seed", sim.seed, "base seed")->capture_default_str();
  simulate_cmd->add_option("--threads", sim.threads, "worker threads (default HETFX_THREADS or all cores)");
  simulate_cmd->add_option("--target", sim.target, "propensities in the overlap-weighted target: true or estimated")
      ->check(CLI::IsMember({"true", "estimated"}))
      ->capture_default_str();
  simulate_cmd->add_option("--variant", sim.variants, "raw, covpoly, indexpoly (comma separated)")
      ->delimiter(',')
      ->check(CLI::IsMember({"raw", "covpoly", "indexpoly"}));
  simulate_cmd->add_option("--targets", sim.targets, "treatment categories (comma separated)")->delimiter(',');
  simulate_cmd->add_option("--q", sim.q, "polynomial order of the centering")->check(CLI::NonNegativeNumber)->capture_default_str();
  simulate_cmd->add_option("--emit-data", sim.emit_data, "also write one generated sample to this CSV");
  simulate_cmd->footer(kVariantHelp);

  Index demo_n = 1000000;
  std::uint64_t demo_seed = 1;
  Output demo_out;
  auto* demo_cmd = app.add_subcommand("demo", "inconsistency of the usual multi-dummy OLS on the binary-X design");
  demo_cmd->add_option("--n", demo_n, "sample size")->capture_default_str();
  demo_cmd->add_option("--seed", demo_seed, "seed")->capture_default_str();
  demo_cmd->add_option("--output,--out", demo_out.path, "JSON report file");

  DataOptions wdata;
  bool contamination = false;
  std::string weights_path;
  auto* weights_cmd = app.add_subcommand("weights", "export overlap and contamination weights");
  add_data_options(weights_cmd, wdata);
  weights_cmd->add_flag("--contamination", contamination, "also export contamination weights (discrete X only)");
  weights_cmd->add_option("--output,--out", weights_path, "CSV file for per-observation weights")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*estimate_cmd) return cmd_estimate(est, out);
    if (*simulate_cmd) return cmd_simulate(sim, out);
    if (*demo_cmd) return cmd_demo(demo_n, demo_seed, demo_out, out);
    if (*weights_cmd) return cmd_weights(wdata, contamination, weights_path, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return is_numerical(e.kind()) ? 3 : 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace hetfx
