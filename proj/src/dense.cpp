#include "ionmpt/dense.hpp"

#include <cmath>

namespace ionmpt {

DenseState::DenseState(int n_sites, int basis_bit) : n_(n_sites) {
  if (n_sites < 2) throw std::invalid_argument("DenseState: need n >= 2");
  if (n_sites > kMaxSites)
    throw CapabilityError("DenseState: chain too large for the dense oracle");
  if (basis_bit != 0 && basis_bit != 1)
    throw std::invalid_argument("DenseState: basis_bit must be 0 or 1");
  amp_ = Eigen::VectorXcd::Zero(1ll << n_sites);
  long long idx = 0;
  if (basis_bit == 1) idx = (1ll << n_sites) - 1;
  amp_(idx) = 1.0;
}

DenseState::DenseState(int n_sites, Eigen::VectorXcd amplitudes) : n_(n_sites) {
  if (n_sites < 2) throw std::invalid_argument("DenseState: need n >= 2");
  if (n_sites > kMaxSites)
    throw CapabilityError("DenseState: chain too large for the dense oracle");
  if (amplitudes.size() != (1ll << n_sites))
    throw std::invalid_argument("DenseState: amplitude vector has wrong length");
  if (!(amplitudes.norm() > 0.0))
    throw std::invalid_argument("DenseState: amplitude vector has zero norm");
  amp_ = std::move(amplitudes);
}

DenseState dense_product_state(int n_sites, int basis_bit) {
  return DenseState(n_sites, basis_bit);
}

void DenseState::apply_one_site(int site, const Mat2& u) {
  if (site < 0 || site >= n_)
    throw std::invalid_argument("apply_one_site: site out of range");
  const long long bit = 1ll << bit_shift(site);
  const long long dim = amp_.size();
  for (long long b = 0; b < dim; ++b) {
    if (b & bit) continue;
    const std::complex<double> a0 = amp_(b);
    const std::complex<double> a1 = amp_(b | bit);
    amp_(b) = u(0, 0) * a0 + u(0, 1) * a1;
    amp_(b | bit) = u(1, 0) * a0 + u(1, 1) * a1;
  }
}

void DenseState::apply_two_site(int site, const Mat4& u) {
  if (site < 0 || site + 1 >= n_)
    throw std::invalid_argument("apply_two_site: bond out of range");
  const long long hi = 1ll << bit_shift(site);      // left site of the pair
  const long long lo = 1ll << bit_shift(site + 1);
  const long long dim = amp_.size();
  for (long long b = 0; b < dim; ++b) {
    if (b & (hi | lo)) continue;
    Eigen::Vector4cd v;
    v << amp_(b), amp_(b | lo), amp_(b | hi), amp_(b | hi | lo);
    v = u * v;
    amp_(b) = v(0);
    amp_(b | lo) = v(1);
    amp_(b | hi) = v(2);
    amp_(b | hi | lo) = v(3);
  }
}

int DenseState::measure_with_uniform(int site, double u) {
  if (site < 0 || site >= n_)
    throw std::invalid_argument("measure: site out of range");
  const long long bit = 1ll << bit_shift(site);
  const long long dim = amp_.size();
  double w0 = 0.0, w1 = 0.0;
  for (long long b = 0; b < dim; ++b) {
    const double w = std::norm(amp_(b));
    if (b & bit) w1 += w;
    else w0 += w;
  }
  const double total = w0 + w1;
  if (!(total > 0.0))
    throw NumericalDegeneracyError("measure: zero-norm state");
  const double p0 = w0 / total;
  const int outcome = (u < p0) ? +1 : -1;
  const double wk = (outcome > 0) ? w0 : w1;
  if (!(wk > 0.0))
    throw NumericalDegeneracyError("measure: selected branch has zero weight");
  const double scale = 1.0 / std::sqrt(wk);
  for (long long b = 0; b < dim; ++b) {
    const bool one = (b & bit) != 0;
    if (one == (outcome > 0)) amp_(b) = 0.0;
    else amp_(b) *= scale;
  }
  return outcome;
}

int DenseState::measure_site(int site, RandomStream& outcomes) {
  return measure_with_uniform(site, outcomes.uniform());
}

void DenseState::reset_site(int site) {
  if (site < 0 || site >= n_)
    throw std::invalid_argument("reset_site: site out of range");
  const long long bit = 1ll << bit_shift(site);
  const long long dim = amp_.size();
  for (long long b = 0; b < dim; ++b) {
    if (b & bit) continue;
    amp_(b) += amp_(b | bit);
    amp_(b | bit) = 0.0;
  }
  const double nrm = amp_.norm();
  if (nrm < 1e-12)
    throw NumericalDegeneracyError("reset_site: destructive interference left no weight");
  amp_ /= nrm;
}

SchmidtSpectrum DenseState::schmidt_spectrum(int cut) const {
  if (cut < 1 || cut >= n_)
    throw std::invalid_argument("schmidt_spectrum: cut must be interior");
  const long long rows = 1ll << cut;
  const long long cols = 1ll << (n_ - cut);
  // Site 0 is the MSB, so leading bits index the rows of a row-major reshape.
  Eigen::Map<const Eigen::Matrix<std::complex<double>, Eigen::Dynamic,
                                 Eigen::Dynamic, Eigen::RowMajor>>
      m(amp_.data(), rows, cols);
  // One-sided Jacobi: BDCSVD's deflation miscomputes degenerate spectra
  // (doubly repeated Schmidt values are common here), and a reference
  // backend cannot afford that.
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  Eigen::VectorXd s = svd.singularValues();
  SchmidtSpectrum out;
  out.cut = cut;
  const double nrm = s.norm();
  if (!(nrm > 0.0))
    throw NumericalDegeneracyError("schmidt_spectrum: zero-norm state");
  out.values.assign(s.data(), s.data() + s.size());
  for (double& v : out.values) v /= nrm;
  return out;
}

double DenseState::entropy(int cut, double alpha) const {
  return renyi_entropy(schmidt_spectrum(cut), alpha);
}

DenseState to_dense(const MpsState& state) {
  const int n = state.n_sites();
  if (n > 16)
    throw CapabilityError("to_dense: chain too large to expand");
  // contract left to right, carrying amplitudes for every prefix bit string
  Eigen::MatrixXcd c = Eigen::MatrixXcd::Ones(1, 1);
  for (int j = 0; j < n; ++j) {
    const Eigen::MatrixXcd& a0 = state.tensor(j, 0);
    const Eigen::MatrixXcd& a1 = state.tensor(j, 1);
    Eigen::MatrixXcd next(c.rows() * 2, a0.cols());
    for (long long b = 0; b < c.rows(); ++b) {
      next.row(2 * b) = c.row(b) * a0;
      next.row(2 * b + 1) = c.row(b) * a1;
    }
    c = std::move(next);
  }
  return DenseState(n, c.col(0));
}

double fidelity(const DenseState& a, const DenseState& b) {
  if (a.n_sites() != b.n_sites())
    throw std::invalid_argument("fidelity: size mismatch");
  const std::complex<double> overlap = a.amplitudes().adjoint() * b.amplitudes();
  return std::norm(overlap);
}

}  // namespace ionmpt
