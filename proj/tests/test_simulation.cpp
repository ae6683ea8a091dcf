#include "hetfx/error.hpp"
#include "hetfx/rng.hpp"
#include "hetfx/simulation.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <set>

using namespace hetfx;

namespace {

double chi3_cdf_oracle(double x) {
  if (x <= 0) return 0.0;
  return std::erf(std::sqrt(x / 2)) - std::sqrt(2 * x / M_PI) * std::exp(-x / 2);
}

void check_frequencies(const DgpSpec& spec) {
  const SimulatedSample s = generate(spec);
  const double n = static_cast<double>(spec.n);
  for (int j = 0; j <= 2; ++j) {
    double count = 0;
    for (int v : s.data.d) count += v == j;
    const double p = s.true_probs.col(j).mean();
    CHECK(std::abs(count / n - p) <= 4.0 * std::sqrt(p * (1 - p) / n));
  }
}

}  // namespace

TEST_CASE("Philox4x32-10 known-answer vectors") {
  using B = Philox4x32::Block;
  using K = Philox4x32::Key;
  CHECK(Philox4x32::block(B{0, 0, 0, 0}, K{0, 0}) == B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::block(B{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}) ==
        B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::block(B{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}) ==
        B{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("engine streams") {
  Philox4x32 a(7, 0), b(7, 0), c(7, 1), d(8, 0);
  std::vector<std::uint64_t> va, vb, vc, vd;
  for (int i = 0; i < 64; ++i) {
    va.push_back(a());
    vb.push_back(b());
    vc.push_back(c());
    vd.push_back(d());
  }
  CHECK(va == vb);
  CHECK(va != vc);
  CHECK(va != vd);
  // The first two outputs are the first counter block.
  const auto blk = Philox4x32::block({0, 0, 0, 0}, {7, 0});
  CHECK(va[0] == ((static_cast<std::uint64_t>(blk[1]) << 32) | blk[0]));
  CHECK(va[1] == ((static_cast<std::uint64_t>(blk[3]) << 32) | blk[2]));

  Philox4x32 e(7, 0);
  e.discard(10);
  CHECK(e() == va[10]);
}

TEST_CASE("standardized chi-square(3) draws") {
  RngStream rng(3, 0);
  const Index n = 1000000;
  VectorXd raw(n);
  for (Index i = 0; i < n; ++i) {
    double s = 0;
    for (int k = 0; k < 3; ++k) {
      const double z = rng.normal();
      s += z * z;
    }
    raw[i] = s;
  }
  const VectorXd z = standardize_chi3(raw);
  const double mean = z.mean();
  const double sd = std::sqrt((z.array() - mean).square().mean());
  const double skew = ((z.array() - mean) / sd).cube().mean();
  CHECK(std::abs(mean) <= 0.01);
  CHECK(std::abs(sd - 1.0) <= 0.01);
  CHECK(std::abs(skew - std::sqrt(8.0 / 3.0)) <= 0.02);
  CHECK(standardize_chi3(VectorXd::Constant(1, 3.0))[0] == 0.0);
}

TEST_CASE("standardized chi-square(3) CDF") {
  for (double z : {-1.2, -1.0, -0.5, 0.0, 0.7, 1.0, 2.5, 6.0}) {
    CHECK(std_chi3_cdf(z) == doctest::Approx(chi3_cdf_oracle(3.0 + std::sqrt(6.0) * z)).epsilon(1e-12));
  }
  CHECK(std_chi3_cdf(-1.3) == 0.0);
}

TEST_CASE("binary-X design control share") {
  const SimulatedSample s = generate({DgpFamily::OrdinalBinaryX, ErrorDist::Normal, false, 1000000, 2, 0});
  double zero = 0;
  for (int v : s.data.d) zero += v == 0;
  const double closed = 0.3 * oracle::Phi(0.0) + 0.7 * oracle::Phi(-2.0);
  CHECK(closed == doctest::Approx(0.166).epsilon(0.01));
  CHECK(std::abs(zero / 1e6 - closed) <= 0.002);
}

TEST_CASE("continuous ordinal design mean effect") {
  const SimulatedSample s = generate({DgpFamily::OrdinalContinuous, ErrorDist::Normal, false, 1000000, 2, 0});
  CHECK(std::abs(s.true_mu.col(1).mean() - 2.0) <= 0.01);
  CHECK(std::abs(s.true_mu.col(0).mean() - 1.0) <= 0.01);
}

TEST_CASE("category frequencies match the true probabilities") {
  for (SimTable t : {SimTable::Ordinal, SimTable::Multinomial})
    for (int panel = 1; panel <= 4; ++panel) check_frequencies(panel_spec(t, panel, 200000, 5));
  check_frequencies({DgpFamily::OrdinalBinaryX, ErrorDist::Normal, false, 200000, 5, 0});
}

TEST_CASE("observed outcome is the selected potential outcome") {
  for (SimTable t : {SimTable::Ordinal, SimTable::Multinomial}) {
    for (int panel = 1; panel <= 4; ++panel) {
      const SimulatedSample s = generate(panel_spec(t, panel, 500, 6));
      for (Index i = 0; i < 500; ++i) {
        const int d = s.data.d[static_cast<std::size_t>(i)];
        const double expect = s.y0[i] + (d > 0 ? s.true_mu(i, d - 1) : 0.0);
        CHECK(s.data.y[i] == doctest::Approx(expect).epsilon(1e-14));
      }
      CHECK((s.true_probs.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
      CHECK(s.true_probs.minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("absolute-value multinomial probabilities") {
  const SimulatedSample s = generate(panel_spec(SimTable::Multinomial, 2, 2000, 7));
  CHECK(s.true_probs.minCoeff() > 0.0);
  CHECK(s.true_probs.maxCoeff() < 1.0);
  for (Index i = 0; i < 2000; i += 111) {
    const double a1 = std::abs(s.true_index(i, 0)), a2 = std::abs(s.true_index(i, 1));
    CHECK(s.true_probs(i, 1) == doctest::Approx(a1 / (1 + a1 + a2)).epsilon(1e-14));
  }
}

TEST_CASE("generation is deterministic per stream") {
  DgpSpec spec = panel_spec(SimTable::Ordinal, 2, 300, 11);
  const SimulatedSample a = generate(spec), b = generate(spec);
  CHECK(a.data.y == b.data.y);
  CHECK(a.data.d == b.data.d);
  spec.stream = 1;
  CHECK(generate(spec).data.y != a.data.y);
}

TEST_CASE("spec validation and panels") {
  CHECK_THROWS_AS(generate({DgpFamily::OrdinalBinaryX, ErrorDist::StdChi3, false, 100, 1, 0}), Error);
  try {
    validate_spec({DgpFamily::Multinomial, ErrorDist::StdChi3, false, 100, 1, 0});
    FAIL("expected InvalidSpecCombination");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidSpecCombination);
  }
  CHECK_THROWS_AS(validate_spec({DgpFamily::OrdinalContinuous, ErrorDist::Normal, false, 5, 1, 0}), Error);
  CHECK_THROWS_AS(panel_spec(SimTable::Ordinal, 5, 100, 1), Error);

  const DgpSpec p4 = panel_spec(SimTable::Ordinal, 4, 100, 1);
  CHECK(p4.error_dist == ErrorDist::StdChi3);
  CHECK(p4.regression_misspec);
  CHECK(panel_spec(SimTable::Multinomial, 2, 100, 1).family == DgpFamily::MultinomialAbs);
  CHECK(panel_spec(SimTable::Multinomial, 3, 100, 1).family == DgpFamily::Multinomial);

  std::set<std::string> labels;
  for (SimTable t : {SimTable::Ordinal, SimTable::Multinomial})
    for (int p = 1; p <= 4; ++p) labels.insert(panel_label(panel_spec(t, p, 100, 1)));
  CHECK(labels.size() == 8);

  CHECK_FALSE(true_alpha(p4).has_value());
  CHECK(true_alpha(panel_spec(SimTable::Multinomial, 1, 100, 1))->size() == 5);
}

TEST_CASE("Monte Carlo summaries") {
  const DgpSpec spec = panel_spec(SimTable::Ordinal, 1, 300, 3);
  MonteCarloOptions opt;
  opt.reps = 40;
  opt.keep_draws = true;
  const MonteCarloReport r = run_monte_carlo(spec, opt);
  CHECK(r.rows.size() == 6);
  for (const auto& row : r.rows) {
    const double lhs = row.rmse * row.rmse;
    const double rhs = row.abs_bias * row.abs_bias + row.sim_sd * row.sim_sd;
    CHECK(std::abs(lhs - rhs) <= 1e-6 * rhs);
    REQUIRE(row.errors.size() == static_cast<std::size_t>(r.reps - r.failed));
    double mean = 0, cover = 0;
    for (std::size_t k = 0; k < row.errors.size(); ++k) {
      mean += row.errors[k];
      cover += std::abs(row.errors[k]) <= 1.96 * row.asy_sds[k];
    }
    mean /= static_cast<double>(row.errors.size());
    CHECK(row.abs_bias == doctest::Approx(std::abs(mean)).epsilon(1e-12));
    CHECK(row.coverage == doctest::Approx(cover / static_cast<double>(row.errors.size())).epsilon(1e-12));
  }

  opt.reps = 1;
  CHECK_THROWS_AS(run_monte_carlo(spec, opt), Error);
}

TEST_CASE("Monte Carlo results do not depend on the thread count") {
  for (SimTable t : {SimTable::Ordinal, SimTable::Multinomial}) {
    const DgpSpec spec = panel_spec(t, 2, 250, 9);
    MonteCarloOptions opt;
    opt.reps = 24;
    opt.keep_draws = true;
    opt.threads = 1;
    const MonteCarloReport one = run_monte_carlo(spec, opt);
    opt.threads = 8;
    const MonteCarloReport eight = run_monte_carlo(spec, opt);
    REQUIRE(one.rows.size() == eight.rows.size());
    for (std::size_t k = 0; k < one.rows.size(); ++k) {
      CHECK(one.rows[k].errors == eight.rows[k].errors);
      CHECK(one.rows[k].rmse == eight.rows[k].rmse);
      CHECK(one.rows[k].avg_asy_sd == eight.rows[k].avg_asy_sd);
    }
  }
}

TEST_CASE("index centering beats raw centering under misspecification") {
  for (SimTable t : {SimTable::Ordinal, SimTable::Multinomial}) {
    for (int panel = 2; panel <= 4; ++panel) {
      MonteCarloOptions opt;
      opt.reps = 100;
      opt.variants = {{Centering::RawMean}, {Centering::IndexPoly}};
      const MonteCarloReport r = run_monte_carlo(panel_spec(t, panel, 4000, 21), opt);
      for (int d : {1, 2}) {
        double raw = 0, idx = 0;
        for (const auto& row : r.rows) {
          if (row.d != d) continue;
          (row.estimator == "raw" ? raw : idx) = row.rmse;
        }
        INFO(r.panel << " d=" << d << " raw " << raw << " indexpoly " << idx);
        CHECK(idx <= raw);
      }
    }
  }
}

TEST_CASE("demonstration at modest N keeps its structure") {
  const DemoReport r = usual_ols_demo(1000, 3);
  CHECK(r.ols_coef.size() == 4);
  CHECK(r.estimand_exact.size() == 2);
  CHECK(r.estimand_empirical.size() == 2);
  CHECK(r.naive_target.size() == 4);
  CHECK(r.naive_target[1] == 0.7);
  CHECK(r.naive_target[2] == 1.4);
  CHECK((r.weight_means_exact - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(std::abs(r.ols_coef[1] - 0.13) < 0.3);
}
