#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "ionmpt/random.hpp"
#include "ionmpt/scaling.hpp"

using namespace ionmpt;

namespace {

// Synthetic family with a planted scaling form: S(N,p) = c(N) + F((p-pc) N^(1/nu)).
EntropyDataset synthetic(double p_c, double nu, double noise,
                         std::uint64_t seed, bool offset_per_n = false) {
  RandomStream rng(seed);
  EntropyDataset data;
  const std::vector<int> sizes = {8, 12, 16, 20, 24, 28};
  for (int n : sizes) {
    for (double p = 0.05; p <= 0.35 + 1e-12; p += 0.0125) {
      const double x = (p - p_c) * std::pow(n, 1.0 / nu);
      double s = -0.7 * std::tanh(0.8 * x);
      if (offset_per_n) s += 0.26 * std::log(n) + 0.33;
      if (noise > 0.0) s += noise * rng.normal();
      data.points.push_back({n, p, s, noise, 300});
    }
  }
  return data;
}

}  // namespace

TEST_CASE("parity classification") {
  CHECK(half_chain_parity(8) == Parity::Even);   // N/2 = 4
  CHECK(half_chain_parity(10) == Parity::Odd);   // N/2 = 5
  CHECK(half_chain_parity(12) == Parity::Even);
  CHECK(half_chain_parity(14) == Parity::Odd);
  EntropyDataset data = synthetic(0.2, 1.3, 0.0, 1);
  const EntropyDataset even = data.filter_parity(Parity::Even);
  for (const EntropyPoint& pt : even.points) CHECK((pt.n / 2) % 2 == 0);
}

TEST_CASE("perfect synthetic data collapses exactly at the truth") {
  const EntropyDataset data = synthetic(0.20, 1.30, 0.0, 1);
  const double at_truth = collapse_objective(data, 0.20, 1.30);
  CHECK(at_truth < 1e-6);
  CHECK(collapse_objective(data, 0.20, 2.60) > at_truth);
  CHECK(collapse_objective(data, 0.12, 1.30) > at_truth);
}

TEST_CASE("collapse objective ignores per-size constants") {
  const EntropyDataset plain = synthetic(0.20, 1.30, 0.0, 1, false);
  const EntropyDataset shifted = synthetic(0.20, 1.30, 0.0, 1, true);
  const double a = collapse_objective(plain, 0.18, 1.5);
  const double b = collapse_objective(shifted, 0.18, 1.5);
  CHECK(a == doctest::Approx(b).epsilon(1e-9));
}

TEST_CASE("collapse objective rejects out-of-range p_c") {
  const EntropyDataset data = synthetic(0.20, 1.30, 0.0, 1);
  CHECK_THROWS_AS(collapse_objective(data, 0.40, 1.3), std::invalid_argument);
  CHECK_THROWS_AS(collapse_objective(data, 0.01, 1.3), std::invalid_argument);
  EntropyDataset tiny;
  tiny.points = {{8, 0.1, 1.0, 0.0, 10}, {8, 0.2, 0.9, 0.0, 10},
                 {12, 0.1, 1.1, 0.0, 10}, {12, 0.2, 0.8, 0.0, 10}};
  CHECK_THROWS_AS(collapse_objective(tiny, 0.15, 1.3), std::invalid_argument);
}

TEST_CASE("planted parameters are recovered from noisy data") {
  const EntropyDataset data = synthetic(0.20, 1.30, 0.01, 20250301);
  CollapseOptions opt;
  opt.resamples = 100;
  const CollapseFit fit = fit_collapse(data, opt);
  CHECK(fit.converged);
  CHECK(std::abs(fit.p_c - 0.20) <= 0.01);
  // the objective valley is shallow along nu, so recovery is looser there
  CHECK(std::abs(fit.nu - 1.30) <= 0.20);
  CHECK(fit.p_c_err > 0.0);
  CHECK(fit.nu_err > 0.0);
  CHECK(fit.quality >= 0.0);

  // deterministic given the resampling seed
  const CollapseFit again = fit_collapse(data, opt);
  CHECK(fit.p_c == again.p_c);
  CHECK(fit.nu == again.nu);
  CHECK(fit.p_c_err == again.p_c_err);
  CHECK(fit.nu_err == again.nu_err);
}

TEST_CASE("log_fit recovers exact logarithmic data with zero errors") {
  const std::vector<double> xs = {8, 12, 16, 20};
  std::vector<double> ys;
  for (double x : xs) ys.push_back(0.3 * std::log(x) + 0.1);
  const LogFit fit = log_fit(xs, ys, {0, 0, 0, 0}, OffsetForm::LnN);
  CHECK(fit.slope == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(0.1).epsilon(1e-10));
  CHECK(fit.slope_err == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(fit.intercept_err == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("log_fit offset conventions") {
  const double pi = 3.14159265358979323846;
  const std::vector<double> xs = {8, 12, 16, 20};
  std::vector<double> ys;
  for (double x : xs) ys.push_back(0.26 * std::log(2.0 * x / pi) + 0.33);
  const LogFit fit = log_fit(xs, ys, {0, 0, 0, 0}, OffsetForm::Ln2NOverPi);
  CHECK(fit.slope == doctest::Approx(0.26).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(0.33).epsilon(1e-10));
  // same data fitted against ln N keeps the slope, shifts the intercept
  const LogFit alt = log_fit(xs, ys, {0, 0, 0, 0}, OffsetForm::LnN);
  CHECK(alt.slope == doctest::Approx(0.26).epsilon(1e-12));
  CHECK(alt.intercept ==
        doctest::Approx(0.33 + 0.26 * std::log(2.0 / pi)).epsilon(1e-9));
}

TEST_CASE("log_fit weighted errors follow the covariance formula") {
  // three points with unit errors at u = {0, 1, 2}: var(slope) = Sw/Delta = 1/2
  const double e = std::exp(1.0);
  const std::vector<double> xs = {1.0, e, e * e};
  const std::vector<double> ys = {0.1, 0.4, 0.7};
  const LogFit fit = log_fit(xs, ys, {1.0, 1.0, 1.0}, OffsetForm::LnN);
  CHECK(fit.slope == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(fit.slope_err == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
}

TEST_CASE("log_fit input validation") {
  CHECK_THROWS_AS(log_fit({8, 12}, {1, 2}, {0, 0}, OffsetForm::LnN),
                  std::invalid_argument);
  CHECK_THROWS_AS(log_fit({8, -12, 16}, {1, 2, 3}, {0, 0, 0}, OffsetForm::LnN),
                  std::invalid_argument);
  CHECK_THROWS_AS(log_fit({8, 8, 8}, {1, 2, 3}, {0, 0, 0}, OffsetForm::LnN),
                  std::invalid_argument);
}

TEST_CASE("mse_scan finds logarithmic data and penalizes volume law") {
  EntropyDataset data;
  const std::vector<int> sizes = {8, 12, 16, 20};
  for (int n : sizes) {
    data.points.push_back({n, 0.17, 0.26 * std::log(n) + 0.33, 0.01, 100});
    data.points.push_back({n, 0.05, 0.12 * n, 0.01, 100});  // volume law
  }
  const auto scan = mse_scan(data, {0.05, 0.17}, Parity::Even);
  REQUIRE(scan.size() == 2);
  CHECK(scan[1].second < 1e-10);          // exact log data
  CHECK(scan[0].second > scan[1].second);  // volume law fits the log form badly

  CHECK_THROWS_AS(mse_scan(data, {0.05}, Parity::Odd), std::invalid_argument);
}

TEST_CASE("dynamical exponent with error propagation") {
  LogFit t, x;
  t.slope = 0.26;
  t.slope_err = 0.01;
  x.slope = 0.25;
  x.slope_err = 0.01;
  const auto [z, z_err] = dynamical_exponent(t, x);
  CHECK(z == doctest::Approx(1.04).epsilon(1e-12));
  CHECK(z_err == doctest::Approx(0.057711004150).epsilon(1e-9));

  const auto [z1, e1] = dynamical_exponent(x, x);
  CHECK(z1 == doctest::Approx(1.0).epsilon(1e-12));

  LogFit bad;
  bad.slope = -0.1;
  CHECK_THROWS_AS(dynamical_exponent(t, bad), std::invalid_argument);
}

TEST_CASE("postselection cost") {
  CHECK(postselection_runs(10, 0.0, 20).runs == 1.0);
  const PostselectionCost c = postselection_runs(10, 0.05, 20);
  CHECK(c.log2_runs == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(c.runs == doctest::Approx(1048576.0).epsilon(1e-12));
  CHECK(postselection_runs(20, 0.17, 40).log2_runs ==
        doctest::Approx(272.0).epsilon(1e-12));
  // monotone in each argument
  CHECK(postselection_runs(12, 0.05, 20).runs > c.runs);
  CHECK(postselection_runs(10, 0.06, 20).runs > c.runs);
  CHECK(postselection_runs(10, 0.05, 21).runs > c.runs);
  CHECK_THROWS_AS(postselection_runs(10, 1.5, 20), std::invalid_argument);
}

TEST_CASE("emission estimate") {
  const double linewidth = 2.0 * 3.14159265358979323846 * 20e6;
  const double p_d = crosstalk_emission_estimate(1e-4, linewidth, 10e-6);
  CHECK(p_d == doctest::Approx(2.094395102393e-2).epsilon(1e-10));
  CHECK(crosstalk_emission_estimate(0.0, linewidth, 10e-6) == 0.0);
  CHECK(crosstalk_emission_estimate(1e-4, linewidth, 20e-6) ==
        doctest::Approx(2.0 * p_d).epsilon(1e-12));
  CHECK_THROWS_AS(crosstalk_emission_estimate(-1.0, linewidth, 1e-6),
                  std::invalid_argument);
  CHECK_THROWS_AS(crosstalk_emission_estimate(1e-4, 0.0, 1e-6),
                  std::invalid_argument);
}

TEST_CASE("absorption estimate") {
  const AbsorptionEstimate est =
      crosstalk_absorption_estimate(369.5e-9, 5e-6, 7e6, 10e-6);
  CHECK(est.sigma_m2 == doctest::Approx(2.172946416907e-14).epsilon(1e-9));
  CHECK(est.radius_m == doctest::Approx(8.316671970501e-8).epsilon(1e-9));
  CHECK(est.fraction == doctest::Approx(6.915268373792e-5).epsilon(1e-9));
  CHECK(est.p_d == doctest::Approx(4.840687861654e-3).epsilon(1e-9));
  CHECK_THROWS_AS(crosstalk_absorption_estimate(0.0, 5e-6, 7e6, 1e-5),
                  std::invalid_argument);
  CHECK_THROWS_AS(crosstalk_absorption_estimate(369.5e-9, -5e-6, 7e6, 1e-5),
                  std::invalid_argument);
}
