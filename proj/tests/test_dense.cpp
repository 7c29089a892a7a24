#include <doctest.h>

#include <cmath>

#include "ionmpt/dense.hpp"

using namespace ionmpt;
using cd = std::complex<double>;

namespace {

Mat4 givens_block() {
  const double c = std::sqrt(0.9);
  const double s = std::sqrt(0.1);
  Mat4 g = Mat4::Identity();
  g(0, 0) = c;
  g(0, 3) = -s;
  g(3, 0) = s;
  g(3, 3) = c;
  return g;
}

}  // namespace

TEST_CASE("site 0 is the most significant amplitude bit") {
  DenseState st(3, 0);
  Mat2 x;
  x << 0, 1, 1, 0;
  st.apply_one_site(0, x);
  // |000> -> |100>, index 4
  CHECK(std::abs(st.amplitudes()(4) - cd(1, 0)) < 1e-15);
  CHECK(st.amplitudes().cwiseAbs().sum() == doctest::Approx(1.0));

  DenseState st2(3, 0);
  st2.apply_one_site(2, x);  // |000> -> |001>, index 1
  CHECK(std::abs(st2.amplitudes()(1) - cd(1, 0)) < 1e-15);
}

TEST_CASE("two-site gate acts on the adjacent pair with left = lower index") {
  DenseState st(2, 0);
  st.apply_two_site(0, givens_block());
  CHECK(std::abs(st.amplitudes()(0) - cd(std::sqrt(0.9), 0)) < 1e-14);
  CHECK(std::abs(st.amplitudes()(3) - cd(std::sqrt(0.1), 0)) < 1e-14);

  // in a 3-site chain the pair (1,2) leaves site 0 untouched
  DenseState st3(3, 0);
  st3.apply_two_site(1, givens_block());
  CHECK(std::abs(st3.amplitudes()(0) - cd(std::sqrt(0.9), 0)) < 1e-14);
  CHECK(std::abs(st3.amplitudes()(3) - cd(std::sqrt(0.1), 0)) < 1e-14);  // |011>
}

TEST_CASE("dense schmidt spectrum and entropies match the construction") {
  DenseState st(2, 0);
  st.apply_two_site(0, givens_block());
  SchmidtSpectrum spec = st.schmidt_spectrum(1);
  REQUIRE(spec.values.size() == 2);
  CHECK(spec.values[0] == doctest::Approx(std::sqrt(0.9)).epsilon(1e-12));
  CHECK(spec.values[1] == doctest::Approx(std::sqrt(0.1)).epsilon(1e-12));
  CHECK(st.entropy(1, 1.0) == doctest::Approx(0.3250829733914482).epsilon(1e-12));
  CHECK(st.entropy(1, 2.0) == doctest::Approx(0.1984509387238383).epsilon(1e-12));
}

TEST_CASE("degenerate schmidt spectra are read out exactly") {
  // Paired singular values with a large null space is the structure produced
  // by disentangled sites; build it explicitly as U diag(w) V^H at a 16x16
  // reshape and require the readout to return w itself.
  const std::vector<double> w = {std::sqrt(0.35), std::sqrt(0.35),
                                 std::sqrt(0.10), std::sqrt(0.10),
                                 std::sqrt(0.04), std::sqrt(0.04),
                                 std::sqrt(0.01), std::sqrt(0.01)};
  RandomStream rng(424242);
  auto unitary = [&rng](int d) {
    Eigen::MatrixXcd g(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) g(i, j) = cd(rng.normal(), rng.normal());
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
    return Eigen::MatrixXcd(qr.householderQ() *
                            Eigen::MatrixXcd::Identity(d, d));
  };
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(16);
  for (std::size_t i = 0; i < w.size(); ++i) diag(static_cast<int>(i)) = w[i];
  const Eigen::MatrixXcd m =
      unitary(16) * diag.asDiagonal() * unitary(16).adjoint();

  Eigen::VectorXcd amp(256);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) amp(i * 16 + j) = m(i, j);
  DenseState st(8, amp);
  const SchmidtSpectrum spec = st.schmidt_spectrum(4);
  REQUIRE(spec.values.size() >= w.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    CHECK(spec.values[i] == doctest::Approx(w[i]).epsilon(1e-12));
  for (std::size_t i = w.size(); i < spec.values.size(); ++i)
    CHECK(spec.values[i] < 1e-12);
}

TEST_CASE("dense measurement and reset mirror the MPS semantics") {
  DenseState st(2, 0);
  st.apply_two_site(0, givens_block());

  DenseState plus = st;
  CHECK(plus.measure_with_uniform(0, 0.5) == +1);
  CHECK(plus.norm() == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(plus.measure_with_uniform(1, 0.999999) == +1);

  DenseState minus = st;
  CHECK(minus.measure_with_uniform(0, 0.95) == -1);
  CHECK(minus.measure_with_uniform(1, 1e-9) == -1);

  DenseState reset = st;
  reset.reset_site(0);
  CHECK(std::abs(reset.amplitudes()(0) - cd(std::sqrt(0.9), 0)) < 1e-12);
  CHECK(std::abs(reset.amplitudes()(1) - cd(std::sqrt(0.1), 0)) < 1e-12);
}

TEST_CASE("to_dense agrees with direct dense evolution") {
  MpsState mps = product_state(6, 0);
  DenseState dense(6, 0);
  int k = 0;
  for (int b : layer_bonds(LayerParity::Odd, 6)) {
    const Mat4 u = brick_unitary(kAxisChoices[k % 3], kAxisChoices[(k + 1) % 3]);
    mps.apply_two_site(b, u, {});
    dense.apply_two_site(b, u);
    ++k;
  }
  for (int b : layer_bonds(LayerParity::Even, 6)) {
    const Mat4 u = brick_unitary(kAxisChoices[k % 3], kAxisChoices[(k + 2) % 3]);
    mps.apply_two_site(b, u, {});
    dense.apply_two_site(b, u);
    ++k;
  }
  const Eigen::VectorXcd a = to_dense(mps).amplitudes();
  const Eigen::VectorXcd b = dense.amplitudes();
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(fidelity(to_dense(mps), dense) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("dense capability limits") {
  CHECK_THROWS_AS(DenseState(22, 0), CapabilityError);
  CHECK_THROWS_AS(DenseState(1, 0), std::invalid_argument);
  CHECK_THROWS_AS(DenseState(4, Eigen::VectorXcd::Zero(16)), std::invalid_argument);
  CHECK_THROWS_AS(DenseState(4, Eigen::VectorXcd::Ones(7)), std::invalid_argument);
}

TEST_CASE("dense fidelity") {
  DenseState a(4, 0), b(4, 0), c(4, 1);
  CHECK(fidelity(a, b) == doctest::Approx(1.0));
  CHECK(fidelity(a, c) == doctest::Approx(0.0));
}
