#pragma once

#include <stdexcept>

#include <Eigen/Dense>

#include "ionmpt/mps.hpp"

namespace ionmpt {

// Thrown when a dense-state request exceeds what the oracle can hold.
struct CapabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exact state vector over n qubits. Site 0 is the most significant bit of
// the amplitude index, matching the MPS site order. Intended as a slow,
// trusted reference for small systems.
class DenseState {
 public:
  static constexpr int kMaxSites = 20;

  DenseState(int n_sites, int basis_bit);
  // Adopts an amplitude vector of length 2^n_sites (must be normalizable).
  DenseState(int n_sites, Eigen::VectorXcd amplitudes);

  int n_sites() const { return n_; }
  const Eigen::VectorXcd& amplitudes() const { return amp_; }
  double norm() const { return amp_.norm(); }

  void apply_one_site(int site, const Mat2& u);
  // u acts on the adjacent pair (site, site+1), site being the left factor.
  void apply_two_site(int site, const Mat4& u);

  int measure_site(int site, RandomStream& outcomes);
  int measure_with_uniform(int site, double u);
  void reset_site(int site);

  SchmidtSpectrum schmidt_spectrum(int cut) const;
  double entropy(int cut, double alpha) const;

 private:
  int n_ = 0;
  Eigen::VectorXcd amp_;

  int bit_shift(int site) const { return n_ - 1 - site; }
};

DenseState dense_product_state(int n_sites, int basis_bit);

// Expands an MPS into its amplitude vector; refuses chains too large to
// expand safely.
DenseState to_dense(const MpsState& state);

double fidelity(const DenseState& a, const DenseState& b);

}  // namespace ionmpt
