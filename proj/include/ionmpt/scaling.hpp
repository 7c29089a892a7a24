#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace ionmpt {

enum class Parity { Even, Odd };

// Half-chain subsystem parity: even when N/2 is even.
inline Parity half_chain_parity(int n) {
  return ((n / 2) % 2 == 0) ? Parity::Even : Parity::Odd;
}

struct EntropyPoint {
  int n = 0;
  double p = 0.0;
  double mean_s = 0.0;
  double stderr_s = 0.0;
  int n_runs = 0;
};

struct EntropyDataset {
  std::vector<EntropyPoint> points;

  std::vector<int> sizes() const;
  EntropyDataset filter_parity(Parity parity) const;
};

struct CollapseFit {
  double p_c = 0.0;
  double nu = 0.0;
  double p_c_err = 0.0;
  double nu_err = 0.0;
  double quality = 0.0;
  bool converged = true;
};

struct CollapseOptions {
  double p_c_step = 0.005;
  double nu_min = 0.5;
  double nu_max = 3.0;
  double nu_step = 0.05;
  int resamples = 100;
  std::uint64_t seed = 20200517;
};

// Master-curve smoothness: each transformed point (x, y) is compared with the
// line through its nearest x-neighbors belonging to other system sizes, and
// the squared deviation is normalized by the combined errors. Lower is better.
double collapse_objective(const EntropyDataset& data, double p_c, double nu);

CollapseFit fit_collapse(const EntropyDataset& data,
                         const CollapseOptions& options = {});

enum class OffsetForm { LnN, Ln2NOverPi, LnT };

struct LogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_err = 0.0;
  double intercept_err = 0.0;
};

// Weighted least squares of S against the logarithm of the chosen abscissa.
// With any zero error bar the fit falls back to unweighted least squares and
// residual-based errors (zero for an exact fit).
LogFit log_fit(const std::vector<double>& x_values,
               const std::vector<double>& s_values,
               const std::vector<double>& s_errors, OffsetForm form);

// R(p): mean squared residual of the fit S(N) = alpha ln N + b over the
// sizes of one parity class, for each p in the grid.
std::vector<std::pair<double, double>> mse_scan(const EntropyDataset& data,
                                                const std::vector<double>& p_grid,
                                                Parity parity);

// z = slope_t / slope_x with first-order error propagation.
std::pair<double, double> dynamical_exponent(const LogFit& time_fit,
                                             const LogFit& space_fit);

struct PostselectionCost {
  double log2_runs = 0.0;
  double runs = 0.0;  // 2^log2_runs; inf when it exceeds double range
};

PostselectionCost postselection_runs(double n, double p, double t);

// Scattering probability at saturation intensity: I_rel * (Gamma/6) * tau.
double crosstalk_emission_estimate(double relative_intensity,
                                   double linewidth_rad_s, double detect_time_s);

struct AbsorptionEstimate {
  double sigma_m2 = 0.0;     // absorption cross section lambda^2 / 2 pi
  double radius_m = 0.0;     // sqrt(sigma / pi)
  double fraction = 0.0;     // solid-angle fraction (1 - cos theta) / 2
  double p_d = 0.0;          // scatter_rate * detect_time * fraction
};

AbsorptionEstimate crosstalk_absorption_estimate(double wavelength_m,
                                                 double ion_distance_m,
                                                 double scatter_rate_hz,
                                                 double detect_time_s);

}  // namespace ionmpt
