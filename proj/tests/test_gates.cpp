#include <doctest.h>

#include <complex>

#include "ionmpt/gates.hpp"

using namespace ionmpt;
using cd = std::complex<double>;

namespace {

Mat4 kron2(const Mat2& a, const Mat2& b) {
  Mat4 k;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) k.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return k;
}

// expansion coefficients of a 4x4 operator in the two-qubit Pauli basis
int pauli_support(const Mat4& op) {
  Mat2 paulis[4];
  paulis[0] = Mat2::Identity();
  paulis[1] << 0, 1, 1, 0;
  paulis[2] << 0, cd(0, -1), cd(0, 1), 0;
  paulis[3] << 1, 0, 0, -1;
  int support = 0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const Mat4 basis = kron2(paulis[i], paulis[j]);
      const cd coef = (basis.adjoint() * op).trace() / 4.0;
      if (std::abs(coef) > 1e-9) ++support;
    }
  }
  return support;
}

}  // namespace

TEST_CASE("ms_gate matrix elements") {
  const Mat4 m = ms_gate(kMsTheta);
  const double c = std::sqrt(0.5);
  CHECK(m(0, 0).real() == doctest::Approx(c).epsilon(1e-14));
  CHECK(std::abs(m(0, 3) - cd(0, -c)) < 1e-15);
  CHECK(std::abs(m(1, 2) - cd(0, -c)) < 1e-15);
  CHECK(std::abs(m(3, 0) - cd(0, -c)) < 1e-15);
  CHECK(std::abs(m(0, 1)) == 0.0);
  CHECK(is_unitary(m, 1e-13));

  // theta = 0 is the identity, and M|00> = cos(t)|00> - i sin(t)|11>
  CHECK((ms_gate(0.0) - Mat4::Identity()).cwiseAbs().maxCoeff() < 1e-15);
  Eigen::Vector4cd v = Eigen::Vector4cd::Zero();
  v(0) = 1.0;
  v = ms_gate(0.3) * v;
  CHECK(std::abs(v(0) - cd(std::cos(0.3), 0)) < 1e-14);
  CHECK(std::abs(v(3) - cd(0, -std::sin(0.3))) < 1e-14);
  CHECK(std::abs(v(1)) + std::abs(v(2)) < 1e-15);
}

TEST_CASE("rotation_gate matrix elements") {
  const Mat2 r0 = rotation_gate(kRotationTheta, 0.0);
  const double c = std::sqrt(0.5);
  CHECK(std::abs(r0(0, 0) - cd(c, 0)) < 1e-14);
  CHECK(std::abs(r0(0, 1) - cd(0, -c)) < 1e-14);
  CHECK(std::abs(r0(1, 0) - cd(0, -c)) < 1e-14);
  CHECK(is_unitary(r0, 1e-13));

  // theta = pi about the phi = pi/2 axis is a pure Y rotation: [[0,-1],[1,0]]
  const Mat2 ry = rotation_gate(kPi, kPi / 2.0);
  CHECK(std::abs(ry(0, 0)) < 1e-15);
  CHECK(std::abs(ry(0, 1) - cd(-1, 0)) < 1e-14);
  CHECK(std::abs(ry(1, 0) - cd(1, 0)) < 1e-14);
}

TEST_CASE("brick unitary is rotations after MS, lower site = left factor") {
  for (double pl : kAxisChoices) {
    for (double pu : kAxisChoices) {
      const Mat4 u = brick_unitary(pl, pu);
      CHECK(is_unitary(u, 1e-13));
      const Mat4 expected =
          kron2(rotation_gate(kRotationTheta, pl), rotation_gate(kRotationTheta, pu)) *
          ms_gate(kMsTheta);
      CHECK((u - expected).cwiseAbs().maxCoeff() < 1e-14);
    }
  }
}

TEST_CASE("the gate set is not Clifford") {
  // A Clifford conjugation maps one Pauli string to one Pauli string; the
  // pi/4 rotation axis produces a genuine superposition of strings.
  const Mat4 u = brick_unitary(kPi / 4.0, 0.0);
  Mat2 x;
  x << 0, 1, 1, 0;
  const Mat4 conj = u * kron2(x, Mat2::Identity()) * u.adjoint();
  CHECK(pauli_support(conj) >= 2);
}

TEST_CASE("layer bonds tile the open chain") {
  CHECK(layer_bonds(LayerParity::Odd, 8) == std::vector<int>{0, 2, 4, 6});
  CHECK(layer_bonds(LayerParity::Even, 8) == std::vector<int>{1, 3, 5});
  CHECK(layer_bonds(LayerParity::Odd, 4) == std::vector<int>{0, 2});
  CHECK(layer_bonds(LayerParity::Even, 4) == std::vector<int>{1});
  CHECK_THROWS_AS(layer_bonds(LayerParity::Odd, 7), std::invalid_argument);
  CHECK_THROWS_AS(layer_bonds(LayerParity::Odd, 2), std::invalid_argument);
}

TEST_CASE("plan_layer draws two axes per brick in site order") {
  RandomStream a(11), b(11);
  const LayerPlan plan = plan_layer(LayerParity::Odd, 8, a);
  REQUIRE(plan.gates.size() == 4);
  for (const GateSpec& g : plan.gates) {
    const double pl = kAxisChoices[static_cast<std::size_t>(b.uniform_index(3))];
    const double pu = kAxisChoices[static_cast<std::size_t>(b.uniform_index(3))];
    CHECK(g.phi_lower == pl);
    CHECK(g.phi_upper == pu);
    CHECK((g.matrix - brick_unitary(pl, pu)).cwiseAbs().maxCoeff() < 1e-15);
  }
  // stream positions agree afterwards: exactly 8 draws were consumed
  CHECK(a.uniform() == b.uniform());
}
