#pragma once

#include <array>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "ionmpt/random.hpp"

namespace ionmpt {

using Mat2 = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4cd;

inline constexpr double kPi = 3.14159265358979323846;

// Fixed gate angles of the native set: the entangling angle of the
// Molmer-Sorensen interaction and the single-qubit rotation angle.
inline constexpr double kMsTheta = kPi / 4.0;
inline constexpr double kRotationTheta = kPi / 2.0;

// Rotation-axis angles sampled uniformly when planning a random layer.
inline constexpr std::array<double, 3> kAxisChoices = {0.0, kPi / 4.0, kPi / 2.0};

// exp(-i theta X(x)X) in the basis |00>,|01>,|10>,|11>
Mat4 ms_gate(double theta);

// R(theta, phi) = [[cos(t/2), -i e^{-i phi} sin(t/2)],
//                  [-i e^{+i phi} sin(t/2), cos(t/2)]]
Mat2 rotation_gate(double theta, double phi);

// One brick of the random circuit: MS(pi/4) followed by independent
// R(pi/2, phi) rotations on each of the two sites. The lower site index is
// the left tensor factor.
Mat4 brick_unitary(double phi_lower, double phi_upper);

enum class LayerParity { Even, Odd };

struct GateSpec {
  int left_site = 0;  // acts on (left_site, left_site + 1)
  double phi_lower = 0.0;
  double phi_upper = 0.0;
  Mat4 matrix;
};

struct LayerPlan {
  LayerParity parity = LayerParity::Odd;
  std::vector<GateSpec> gates;
};

// Left sites of the bricks in one layer. Odd layers tile bonds
// (0,1),(2,3),...,(N-2,N-1); even layers tile (1,2),(3,4),...,(N-3,N-2)
// with open boundaries. n_sites must be even and >= 4.
std::vector<int> layer_bonds(LayerParity parity, int n_sites);

// Draws two axis angles per brick from the angle stream, left to right,
// lower site first. Consumes exactly 2 * layer_bonds(...).size() draws.
LayerPlan plan_layer(LayerParity parity, int n_sites, RandomStream& angles);

bool is_unitary(const Eigen::MatrixXcd& u, double tol = 1e-12);

}  // namespace ionmpt
