#include "ionmpt/gates.hpp"

#include <stdexcept>

namespace ionmpt {

namespace {
const std::complex<double> kI(0.0, 1.0);
}

Mat4 ms_gate(double theta) {
  // X(x)X has eigenvalues +-1; exp(-i theta X(x)X) = cos(theta) I - i sin(theta) X(x)X
  Mat4 u = Mat4::Identity() * std::cos(theta);
  const std::complex<double> off = -kI * std::sin(theta);
  u(0, 3) = off;
  u(1, 2) = off;
  u(2, 1) = off;
  u(3, 0) = off;
  return u;
}

Mat2 rotation_gate(double theta, double phi) {
  const double c = std::cos(theta / 2.0);
  const double s = std::sin(theta / 2.0);
  Mat2 u;
  u(0, 0) = c;
  u(0, 1) = -kI * std::exp(-kI * phi) * s;
  u(1, 0) = -kI * std::exp(kI * phi) * s;
  u(1, 1) = c;
  return u;
}

Mat4 brick_unitary(double phi_lower, double phi_upper) {
  const Mat2 rl = rotation_gate(kRotationTheta, phi_lower);
  const Mat2 ru = rotation_gate(kRotationTheta, phi_upper);
  Mat4 kron;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      kron.block<2, 2>(2 * a, 2 * b) = rl(a, b) * ru;
  return kron * ms_gate(kMsTheta);  // MS acts first
}

std::vector<int> layer_bonds(LayerParity parity, int n_sites) {
  if (n_sites < 4 || n_sites % 2 != 0)
    throw std::invalid_argument("layer_bonds: n_sites must be even and >= 4");
  std::vector<int> bonds;
  const int first = (parity == LayerParity::Odd) ? 0 : 1;
  for (int b = first; b + 1 < n_sites; b += 2) bonds.push_back(b);
  return bonds;
}

LayerPlan plan_layer(LayerParity parity, int n_sites, RandomStream& angles) {
  LayerPlan plan;
  plan.parity = parity;
  for (int b : layer_bonds(parity, n_sites)) {
    GateSpec g;
    g.left_site = b;
    g.phi_lower = kAxisChoices[static_cast<std::size_t>(angles.uniform_index(3))];
    g.phi_upper = kAxisChoices[static_cast<std::size_t>(angles.uniform_index(3))];
    g.matrix = brick_unitary(g.phi_lower, g.phi_upper);
    plan.gates.push_back(std::move(g));
  }
  return plan;
}

bool is_unitary(const Eigen::MatrixXcd& u, double tol) {
  if (u.rows() != u.cols()) return false;
  Eigen::MatrixXcd d = u.adjoint() * u - Eigen::MatrixXcd::Identity(u.rows(), u.cols());
  return d.cwiseAbs().maxCoeff() < tol;
}

}  // namespace ionmpt
