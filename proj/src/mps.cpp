#include "ionmpt/mps.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#if defined(IONMPT_HAVE_LAPACKE)
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>
#endif

namespace ionmpt {

namespace {

struct ThinSvd {
  Eigen::MatrixXcd u;
  Eigen::VectorXd s;
  Eigen::MatrixXcd vh;
};

// Divide-and-conquer LAPACK SVD with an Eigen fallback. zgesdd is the hot
// path of the whole simulator; JacobiSVD is kept for environments without
// LAPACKE and for the rare inputs where zgesdd fails to converge. (Not
// BDCSVD: its deflation miscomputes degenerate spectra, which circuits
// with disentangled sites produce routinely.)
ThinSvd svd_thin(Eigen::MatrixXcd m) {
  const int rows = static_cast<int>(m.rows());
  const int cols = static_cast<int>(m.cols());
  const int k = std::min(rows, cols);
  ThinSvd out;
#if defined(IONMPT_HAVE_LAPACKE)
  out.u.resize(rows, k);
  out.s.resize(k);
  out.vh.resize(k, cols);
  lapack_int info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'S', rows, cols, m.data(),
                                   rows, out.s.data(), out.u.data(), rows,
                                   out.vh.data(), k);
  if (info == 0) return out;
#endif
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m,
                                         Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.u = svd.matrixU();
  out.s = svd.singularValues();
  out.vh = svd.matrixV().adjoint();
  return out;
}

Eigen::VectorXd singular_values_only(Eigen::MatrixXcd m) {
  const int rows = static_cast<int>(m.rows());
  const int cols = static_cast<int>(m.cols());
  const int k = std::min(rows, cols);
  Eigen::VectorXd s(k);
#if defined(IONMPT_HAVE_LAPACKE)
  lapack_int info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'N', rows, cols, m.data(),
                                   rows, s.data(), nullptr, rows, nullptr, k);
  if (info == 0) return s;
#endif
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  return svd.singularValues();
}

}  // namespace

int truncation_rank(const std::vector<double>& values,
                    const TruncationPolicy& policy) {
  if (values.empty())
    throw NumericalDegeneracyError("truncation_rank: empty spectrum");
  const double lead = values.front();
  if (!(lead > 0.0))
    throw NumericalDegeneracyError("truncation_rank: zero leading value");

  const double floor = policy.cutoff * lead;
  int keep = 0;
  for (double v : values) {
    if (v >= floor) ++keep;
    else break;
  }
  if (keep == 0)
    throw NumericalDegeneracyError("truncation_rank: cutoff removes everything");

  // Never split a near-degenerate group at the cut boundary...
  const double tie = 1e-14;
  if (keep < static_cast<int>(values.size())) {
    const double last = values[keep - 1];
    while (keep < static_cast<int>(values.size()) &&
           std::abs(values[keep] - last) <= tie * last) {
      ++keep;
    }
  }
  // ...unless the hard cap says otherwise.
  if (policy.max_bond && keep > *policy.max_bond) keep = *policy.max_bond;
  if (keep == 0)
    throw NumericalDegeneracyError("truncation_rank: max_bond is zero");
  return keep;
}

double renyi_entropy(const SchmidtSpectrum& spectrum, double alpha) {
  if (!(alpha > 0.0))
    throw std::invalid_argument("renyi_entropy: alpha must be positive");
  double norm = 0.0;
  for (double v : spectrum.values) norm += v * v;
  if (!(norm > 0.0))
    throw std::invalid_argument("renyi_entropy: empty spectrum");

  if (std::abs(alpha - 1.0) < 1e-12) {
    double s = 0.0;
    for (double v : spectrum.values) {
      const double p = v * v / norm;
      if (p > 0.0) s -= p * std::log(p);
    }
    return std::max(s, 0.0);
  }
  double z = 0.0;
  for (double v : spectrum.values) {
    const double p = v * v / norm;
    if (p > 0.0) z += std::pow(p, alpha);
  }
  return std::max(std::log(z) / (1.0 - alpha), 0.0);
}

MpsState MpsState::product_state(int n_sites, int basis_bit) {
  if (n_sites < 2) throw std::invalid_argument("product_state: need n >= 2");
  if (basis_bit != 0 && basis_bit != 1)
    throw std::invalid_argument("product_state: basis_bit must be 0 or 1");
  MpsState st;
  st.a_.resize(n_sites);
  for (auto& site : st.a_) {
    site[basis_bit] = Eigen::MatrixXcd::Ones(1, 1);
    site[1 - basis_bit] = Eigen::MatrixXcd::Zero(1, 1);
  }
  st.center_ = 0;
  return st;
}

int MpsState::bond_dim(int cut) const {
  if (cut < 0 || cut > n_sites())
    throw std::invalid_argument("bond_dim: cut out of range");
  if (cut == 0 || cut == n_sites()) return 1;
  return static_cast<int>(a_[cut][0].rows());
}

int MpsState::max_bond() const {
  int d = 1;
  for (int c = 1; c < n_sites(); ++c) d = std::max(d, bond_dim(c));
  return d;
}

double MpsState::norm() const {
  const auto& c = a_[center_];
  return std::sqrt(c[0].squaredNorm() + c[1].squaredNorm());
}

void MpsState::shift_center_right() {
  const int j = center_;
  const auto dl = a_[j][0].rows();
  const auto dr = a_[j][0].cols();
  // Stack the two physical blocks vertically and orthonormalize columns.
  Eigen::MatrixXcd m(2 * dl, dr);
  m.topRows(dl) = a_[j][0];
  m.bottomRows(dl) = a_[j][1];
  const auto k = std::min(m.rows(), m.cols());
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(m);
  Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(m.rows(), k);
  Eigen::MatrixXcd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  a_[j][0] = q.topRows(dl);
  a_[j][1] = q.bottomRows(dl);
  a_[j + 1][0] = r * a_[j + 1][0];
  a_[j + 1][1] = r * a_[j + 1][1];
  center_ = j + 1;
}

void MpsState::shift_center_left() {
  const int j = center_;
  const auto dl = a_[j][0].rows();
  const auto dr = a_[j][0].cols();
  // Stack horizontally and orthonormalize rows via QR of the adjoint.
  Eigen::MatrixXcd m(dl, 2 * dr);
  m.leftCols(dr) = a_[j][0];
  m.rightCols(dr) = a_[j][1];
  const auto k = std::min(m.rows(), m.cols());
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(m.adjoint());
  Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(m.cols(), k);
  Eigen::MatrixXcd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  // m = r^H q^H with q^H having orthonormal rows
  a_[j][0] = q.adjoint().leftCols(dr);
  a_[j][1] = q.adjoint().rightCols(dr);
  Eigen::MatrixXcd l = r.adjoint();
  a_[j - 1][0] = a_[j - 1][0] * l;
  a_[j - 1][1] = a_[j - 1][1] * l;
  center_ = j - 1;
}

void MpsState::move_center(int site) {
  if (site < 0 || site >= n_sites())
    throw std::invalid_argument("move_center: site out of range");
  while (center_ < site) shift_center_right();
  while (center_ > site) shift_center_left();
}

void MpsState::apply_one_site(int site, const Mat2& u) {
  if (site < 0 || site >= n_sites())
    throw std::invalid_argument("apply_one_site: site out of range");
  Eigen::MatrixXcd b0 = u(0, 0) * a_[site][0] + u(0, 1) * a_[site][1];
  Eigen::MatrixXcd b1 = u(1, 0) * a_[site][0] + u(1, 1) * a_[site][1];
  a_[site][0] = std::move(b0);
  a_[site][1] = std::move(b1);
}

double MpsState::apply_two_site(int site, const Mat4& u,
                                const TruncationPolicy& policy) {
  if (site < 0 || site + 1 >= n_sites())
    throw std::invalid_argument("apply_two_site: bond out of range");
  if (center_ < site) move_center(site);
  if (center_ > site + 1) move_center(site + 1);

  const auto dl = a_[site][0].rows();
  const auto dr = a_[site + 1][0].cols();

  // theta[s1][s2] = A[site][s1] * A[site+1][s2], then the gate mixes the
  // four physical blocks of the (2 dl) x (2 dr) matrix.
  std::array<std::array<Eigen::MatrixXcd, 2>, 2> theta;
  for (int s1 = 0; s1 < 2; ++s1)
    for (int s2 = 0; s2 < 2; ++s2)
      theta[s1][s2].noalias() = a_[site][s1] * a_[site + 1][s2];

  Eigen::MatrixXcd m(2 * dl, 2 * dr);
  for (int s1 = 0; s1 < 2; ++s1) {
    for (int s2 = 0; s2 < 2; ++s2) {
      Eigen::MatrixXcd block = Eigen::MatrixXcd::Zero(dl, dr);
      for (int t1 = 0; t1 < 2; ++t1)
        for (int t2 = 0; t2 < 2; ++t2)
          block += u(2 * s1 + s2, 2 * t1 + t2) * theta[t1][t2];
      m.block(s1 * dl, s2 * dr, dl, dr) = block;
    }
  }

  ThinSvd svd = svd_thin(std::move(m));
  std::vector<double> vals(svd.s.data(), svd.s.data() + svd.s.size());
  const int keep = truncation_rank(vals, policy);

  double kept_weight = 0.0;
  for (int i = 0; i < keep; ++i) kept_weight += vals[i] * vals[i];
  double discarded = 0.0;
  for (int i = keep; i < static_cast<int>(vals.size()); ++i)
    discarded += vals[i] * vals[i];

  const double scale = 1.0 / std::sqrt(kept_weight);
  Eigen::VectorXcd w = (svd.s.head(keep) * scale).cast<std::complex<double>>();

  a_[site][0] = svd.u.block(0, 0, dl, keep);
  a_[site][1] = svd.u.block(dl, 0, dl, keep);
  Eigen::MatrixXcd right = w.asDiagonal() * svd.vh.topRows(keep);
  a_[site + 1][0] = right.leftCols(dr);
  a_[site + 1][1] = right.rightCols(dr);
  center_ = site + 1;
  return discarded;
}

SchmidtSpectrum MpsState::schmidt_spectrum(int cut) {
  if (cut < 1 || cut >= n_sites())
    throw std::invalid_argument("schmidt_spectrum: cut must be interior");
  move_center(cut - 1);
  const auto dl = a_[cut - 1][0].rows();
  const auto dr = a_[cut - 1][0].cols();
  Eigen::MatrixXcd m(2 * dl, dr);
  m.topRows(dl) = a_[cut - 1][0];
  m.bottomRows(dl) = a_[cut - 1][1];
  Eigen::VectorXd s = singular_values_only(std::move(m));

  SchmidtSpectrum out;
  out.cut = cut;
  const double nrm = s.norm();
  if (!(nrm > 0.0))
    throw NumericalDegeneracyError("schmidt_spectrum: zero-norm state");
  out.values.assign(s.data(), s.data() + s.size());
  for (double& v : out.values) v /= nrm;
  return out;
}

int MpsState::measure_with_uniform(int site, double u) {
  if (site < 0 || site >= n_sites())
    throw std::invalid_argument("measure: site out of range");
  move_center(site);
  const double w0 = a_[site][0].squaredNorm();
  const double w1 = a_[site][1].squaredNorm();
  const double total = w0 + w1;
  if (!(total > 0.0))
    throw NumericalDegeneracyError("measure: zero-norm state");
  const double p0 = w0 / total;
  const int outcome = (u < p0) ? +1 : -1;
  const int keep = (outcome > 0) ? 0 : 1;
  const double wk = (keep == 0) ? w0 : w1;
  if (!(wk > 0.0))
    throw NumericalDegeneracyError("measure: selected branch has zero weight");
  a_[site][1 - keep].setZero();
  a_[site][keep] /= std::sqrt(wk);
  return outcome;
}

int MpsState::measure_site(int site, RandomStream& outcomes) {
  return measure_with_uniform(site, outcomes.uniform());
}

void MpsState::reset_site(int site) {
  if (site < 0 || site >= n_sites())
    throw std::invalid_argument("reset_site: site out of range");
  move_center(site);
  a_[site][0] += a_[site][1];
  a_[site][1].setZero();
  const double nrm = a_[site][0].norm();
  if (nrm < 1e-12)
    throw NumericalDegeneracyError("reset_site: destructive interference left no weight");
  a_[site][0] /= nrm;
}

double fidelity(const MpsState& a, const MpsState& b) {
  if (a.n_sites() != b.n_sites())
    throw std::invalid_argument("fidelity: size mismatch");
  Eigen::MatrixXcd l = Eigen::MatrixXcd::Ones(1, 1);
  for (int j = 0; j < a.n_sites(); ++j) {
    Eigen::MatrixXcd next = a.tensor(j, 0).adjoint() * l * b.tensor(j, 0);
    next += a.tensor(j, 1).adjoint() * l * b.tensor(j, 1);
    l = std::move(next);
  }
  const std::complex<double> overlap = l(0, 0);
  return std::norm(overlap);
}

}  // namespace ionmpt
