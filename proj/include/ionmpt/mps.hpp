#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "ionmpt/gates.hpp"
#include "ionmpt/random.hpp"

namespace ionmpt {

// Thrown when a projection or reset leaves no weight to renormalize, or a
// truncation would discard the entire spectrum.
struct NumericalDegeneracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TruncationPolicy {
  // Discard singular values below cutoff * largest value at the bond.
  double cutoff = 1e-10;
  // Optional hard cap on the kept rank; takes priority over the tie rule.
  std::optional<int> max_bond;
};

// Number of leading values kept from a descending singular-value spectrum.
// Values within a relative tie tolerance of the last retained one are kept
// as well (never split a degenerate multiplet), except when the hard cap
// forces the cut. Throws NumericalDegeneracyError if nothing survives.
int truncation_rank(const std::vector<double>& descending_values,
                    const TruncationPolicy& policy);

// Schmidt coefficients (not squared) across the cut separating sites
// [0, cut) from [cut, n), in descending order, normalized to unit 2-norm.
struct SchmidtSpectrum {
  int cut = 0;
  std::vector<double> values;
};

// Renyi entropy S_alpha of the squared Schmidt spectrum, in nats.
// alpha = 1 is the von Neumann limit; alpha <= 0 is invalid.
double renyi_entropy(const SchmidtSpectrum& spectrum, double alpha);

// Matrix-product state over n qubits with open boundaries. Site tensors are
// stored as one matrix per physical basis state; an orthogonality center is
// maintained so that local probabilities and Schmidt spectra come from the
// center tensor alone.
class MpsState {
 public:
  MpsState() = default;

  int n_sites() const { return static_cast<int>(a_.size()); }
  int ortho_center() const { return center_; }

  // Dimension of the bond between sites cut-1 and cut; 1 at the chain ends.
  int bond_dim(int cut) const;
  int max_bond() const;

  double norm() const;

  const Eigen::MatrixXcd& tensor(int site, int s) const { return a_[site][s]; }

  void move_center(int site);

  void apply_one_site(int site, const Mat2& u);

  // Applies u to sites (site, site+1), truncates the new bond per policy,
  // and returns the discarded weight (sum of squared singular values dropped
  // before renormalization). The center ends on site+1.
  double apply_two_site(int site, const Mat4& u, const TruncationPolicy& policy);

  // cut must lie strictly inside the chain: 1 <= cut <= n-1.
  SchmidtSpectrum schmidt_spectrum(int cut);

  // Projective Z measurement; outcome +1 is |0>. Consumes one uniform draw.
  int measure_site(int site, RandomStream& outcomes);
  // Same, with the uniform supplied by the caller.
  int measure_with_uniform(int site, double u);

  // Maps |0> -> |0> and |1> -> |0> (no outcome recorded), then renormalizes.
  void reset_site(int site);

  static MpsState product_state(int n_sites, int basis_bit);

 private:
  std::vector<std::array<Eigen::MatrixXcd, 2>> a_;
  int center_ = 0;

  void shift_center_right();
  void shift_center_left();
};

inline MpsState product_state(int n_sites, int basis_bit) {
  return MpsState::product_state(n_sites, basis_bit);
}

// |<a|b>|^2 for normalized states of equal length.
double fidelity(const MpsState& a, const MpsState& b);

}  // namespace ionmpt
