#include "ionmpt/scaling.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include "ionmpt/random.hpp"

namespace ionmpt {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

std::vector<int> EntropyDataset::sizes() const {
  std::set<int> s;
  for (const EntropyPoint& pt : points) s.insert(pt.n);
  return {s.begin(), s.end()};
}

EntropyDataset EntropyDataset::filter_parity(Parity parity) const {
  EntropyDataset out;
  for (const EntropyPoint& pt : points)
    if (half_chain_parity(pt.n) == parity) out.points.push_back(pt);
  return out;
}

namespace {

struct Curve {
  std::vector<double> p, s, err;  // sorted by p
};

std::map<int, Curve> curves_by_size(const EntropyDataset& data) {
  std::map<int, std::vector<EntropyPoint>> grouped;
  for (const EntropyPoint& pt : data.points) grouped[pt.n].push_back(pt);
  std::map<int, Curve> out;
  for (auto& [n, pts] : grouped) {
    std::sort(pts.begin(), pts.end(),
              [](const EntropyPoint& a, const EntropyPoint& b) { return a.p < b.p; });
    Curve c;
    for (const EntropyPoint& pt : pts) {
      c.p.push_back(pt.p);
      c.s.push_back(pt.mean_s);
      c.err.push_back(pt.stderr_s);
    }
    out[n] = std::move(c);
  }
  return out;
}

// S(p_c) and its error on one size's curve, by linear interpolation.
std::pair<double, double> interpolate_at(const Curve& c, double p_c) {
  if (p_c < c.p.front() || p_c > c.p.back())
    throw std::invalid_argument("collapse: p_c outside the sampled range");
  const auto it = std::lower_bound(c.p.begin(), c.p.end(), p_c);
  std::size_t hi = static_cast<std::size_t>(it - c.p.begin());
  if (hi == 0) return {c.s[0], c.err[0]};
  if (hi >= c.p.size()) hi = c.p.size() - 1;
  const std::size_t lo = hi - 1;
  const double span = c.p[hi] - c.p[lo];
  const double w = span > 0.0 ? (p_c - c.p[lo]) / span : 0.5;
  const double s = (1.0 - w) * c.s[lo] + w * c.s[hi];
  const double var = (1.0 - w) * (1.0 - w) * c.err[lo] * c.err[lo] +
                     w * w * c.err[hi] * c.err[hi];
  return {s, std::sqrt(var)};
}

struct ScaledPoint {
  double x, y, var;
  int n;
};

}  // namespace

double collapse_objective(const EntropyDataset& data, double p_c, double nu) {
  if (!(nu > 0.0)) throw std::invalid_argument("collapse: nu must be positive");
  const auto curves = curves_by_size(data);
  if (curves.size() < 3)
    throw std::invalid_argument("collapse: need at least three system sizes");

  std::vector<ScaledPoint> pts;
  for (const auto& [n, curve] : curves) {
    const auto [s_c, s_c_err] = interpolate_at(curve, p_c);
    const double scale = std::pow(static_cast<double>(n), 1.0 / nu);
    for (std::size_t i = 0; i < curve.p.size(); ++i) {
      ScaledPoint sp;
      sp.x = (curve.p[i] - p_c) * scale;
      sp.y = curve.s[i] - s_c;
      sp.var = curve.err[i] * curve.err[i] + s_c_err * s_c_err;
      sp.n = n;
      pts.push_back(sp);
    }
  }
  std::sort(pts.begin(), pts.end(),
            [](const ScaledPoint& a, const ScaledPoint& b) { return a.x < b.x; });

  double total = 0.0;
  int used = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    // nearest bracketing neighbors from other sizes
    int lo = -1, hi = -1;
    for (int j = static_cast<int>(i) - 1; j >= 0; --j)
      if (pts[j].n != pts[i].n) { lo = j; break; }
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      if (pts[j].n != pts[i].n) { hi = static_cast<int>(j); break; }
    if (lo < 0 || hi < 0) continue;

    const ScaledPoint& a = pts[lo];
    const ScaledPoint& b = pts[hi];
    const double span = b.x - a.x;
    const double w = span > 0.0 ? (pts[i].x - a.x) / span : 0.5;
    const double y_hat = (1.0 - w) * a.y + w * b.y;
    const double var_hat = (1.0 - w) * (1.0 - w) * a.var + w * w * b.var;
    double denom = pts[i].var + var_hat;
    if (!(denom > 0.0)) denom = 1.0;
    total += (pts[i].y - y_hat) * (pts[i].y - y_hat) / denom;
    ++used;
  }
  if (used == 0)
    throw std::invalid_argument("collapse: no point has neighbors from other sizes");
  return total / used;
}

namespace {

// Intersection of the sampled p-ranges of all sizes: p_c must be
// interpolable on every curve.
std::pair<double, double> common_p_range(const EntropyDataset& data) {
  const auto curves = curves_by_size(data);
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (const auto& [n, c] : curves) {
    lo = std::max(lo, c.p.front());
    hi = std::min(hi, c.p.back());
  }
  if (!(lo < hi))
    throw std::invalid_argument("collapse: sampled p-ranges do not overlap");
  return {lo, hi};
}

struct SimplexResult {
  double p_c, nu, value;
};

// Two-parameter Nelder-Mead with a box penalty; deterministic.
template <typename F>
SimplexResult nelder_mead(F objective, double p0, double nu0, double dp,
                          double dnu, int max_iter) {
  struct Vertex {
    double p, nu, f;
  };
  auto eval = [&](double p, double nu) { return objective(p, nu); };
  std::array<Vertex, 3> v = {Vertex{p0, nu0, eval(p0, nu0)},
                             Vertex{p0 + dp, nu0, eval(p0 + dp, nu0)},
                             Vertex{p0, nu0 + dnu, eval(p0, nu0 + dnu)}};
  auto order = [&]() {
    std::sort(v.begin(), v.end(),
              [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
  };
  order();
  for (int it = 0; it < max_iter; ++it) {
    if (std::abs(v[2].f - v[0].f) < 1e-14 &&
        std::abs(v[2].p - v[0].p) < 1e-10 && std::abs(v[2].nu - v[0].nu) < 1e-8)
      break;
    const double cp = (v[0].p + v[1].p) / 2.0;
    const double cnu = (v[0].nu + v[1].nu) / 2.0;
    // reflect
    double rp = cp + (cp - v[2].p);
    double rnu = cnu + (cnu - v[2].nu);
    double rf = eval(rp, rnu);
    if (rf < v[0].f) {
      // expand
      const double ep = cp + 2.0 * (cp - v[2].p);
      const double enu = cnu + 2.0 * (cnu - v[2].nu);
      const double ef = eval(ep, enu);
      if (ef < rf) v[2] = {ep, enu, ef};
      else v[2] = {rp, rnu, rf};
    } else if (rf < v[1].f) {
      v[2] = {rp, rnu, rf};
    } else {
      // contract
      const double kp = cp + 0.5 * (v[2].p - cp);
      const double knu = cnu + 0.5 * (v[2].nu - cnu);
      const double kf = eval(kp, knu);
      if (kf < v[2].f) {
        v[2] = {kp, knu, kf};
      } else {
        // shrink toward the best vertex
        for (int i = 1; i < 3; ++i) {
          v[i].p = v[0].p + 0.5 * (v[i].p - v[0].p);
          v[i].nu = v[0].nu + 0.5 * (v[i].nu - v[0].nu);
          v[i].f = eval(v[i].p, v[i].nu);
        }
      }
    }
    order();
  }
  return {v[0].p, v[0].nu, v[0].f};
}

SimplexResult minimize_collapse(const EntropyDataset& data,
                                const CollapseOptions& opt, double p_lo,
                                double p_hi, bool grid) {
  const double big = std::numeric_limits<double>::max();
  auto boxed = [&](double p, double nu) {
    if (p < p_lo || p > p_hi || nu < opt.nu_min || nu > opt.nu_max) return big;
    return collapse_objective(data, p, nu);
  };

  double best_p = (p_lo + p_hi) / 2.0;
  double best_nu = 1.0;
  double best_f = big;
  if (grid) {
    for (double p = p_lo; p <= p_hi + 1e-12; p += opt.p_c_step) {
      const double pc = std::min(p, p_hi);
      for (double nu = opt.nu_min; nu <= opt.nu_max + 1e-12; nu += opt.nu_step) {
        const double f = boxed(pc, std::min(nu, opt.nu_max));
        if (f < best_f) {
          best_f = f;
          best_p = pc;
          best_nu = std::min(nu, opt.nu_max);
        }
      }
    }
  }
  return nelder_mead(boxed, best_p, best_nu, opt.p_c_step, opt.nu_step, 400);
}

}  // namespace

CollapseFit fit_collapse(const EntropyDataset& data, const CollapseOptions& opt) {
  const auto [p_lo, p_hi] = common_p_range(data);
  const SimplexResult point = minimize_collapse(data, opt, p_lo, p_hi, true);

  CollapseFit fit;
  fit.p_c = point.p_c;
  fit.nu = point.nu;
  fit.quality = point.value;
  fit.converged = (point.nu > opt.nu_min + 1e-3) && (point.nu < opt.nu_max - 1e-3);

  // Parametric bootstrap: resample each mean from (mean, stderr), refit
  // locally, and report the spread. Deterministic given the seed.
  RandomStream noise(derive_seed(opt.seed, "collapse-bootstrap"));
  std::vector<double> ps, nus;
  for (int r = 0; r < opt.resamples; ++r) {
    EntropyDataset resampled = data;
    for (EntropyPoint& pt : resampled.points)
      pt.mean_s += pt.stderr_s * noise.normal();
    const double big = std::numeric_limits<double>::max();
    auto boxed = [&](double p, double nu) {
      if (p < p_lo || p > p_hi || nu < opt.nu_min || nu > opt.nu_max) return big;
      return collapse_objective(resampled, p, nu);
    };
    const SimplexResult rfit =
        nelder_mead(boxed, fit.p_c, fit.nu, opt.p_c_step, opt.nu_step, 200);
    ps.push_back(rfit.p_c);
    nus.push_back(rfit.nu);
  }
  auto stddev = [](const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    return std::sqrt(var / (static_cast<double>(xs.size()) - 1.0));
  };
  fit.p_c_err = stddev(ps);
  fit.nu_err = stddev(nus);
  return fit;
}

LogFit log_fit(const std::vector<double>& x_values,
               const std::vector<double>& s_values,
               const std::vector<double>& s_errors, OffsetForm form) {
  const std::size_t n = x_values.size();
  if (n < 3) throw std::invalid_argument("log_fit: need at least 3 points");
  if (s_values.size() != n || s_errors.size() != n)
    throw std::invalid_argument("log_fit: mismatched lengths");

  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x_values[i] > 0.0))
      throw std::invalid_argument("log_fit: abscissae must be positive");
    const double x =
        form == OffsetForm::Ln2NOverPi ? 2.0 * x_values[i] / kPi : x_values[i];
    u[i] = std::log(x);
  }

  bool weighted = true;
  for (double e : s_errors)
    if (!(e > 0.0)) weighted = false;

  double sw = 0.0, su = 0.0, suu = 0.0, sy = 0.0, suy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weighted ? 1.0 / (s_errors[i] * s_errors[i]) : 1.0;
    sw += w;
    su += w * u[i];
    suu += w * u[i] * u[i];
    sy += w * s_values[i];
    suy += w * u[i] * s_values[i];
  }
  // delta = sw*suu - su^2 >= 0 by Cauchy-Schwarz; compare against its
  // natural scale so coincident abscissae are rejected despite roundoff
  const double delta = sw * suu - su * su;
  if (!(delta > 1e-12 * sw * suu))
    throw std::invalid_argument("log_fit: degenerate abscissae");

  LogFit fit;
  fit.slope = (sw * suy - su * sy) / delta;
  fit.intercept = (suu * sy - su * suy) / delta;

  if (weighted) {
    fit.slope_err = std::sqrt(sw / delta);
    fit.intercept_err = std::sqrt(suu / delta);
  } else {
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = s_values[i] - (fit.slope * u[i] + fit.intercept);
      ssr += r * r;
    }
    const double s2 = n > 2 ? ssr / (static_cast<double>(n) - 2.0) : 0.0;
    fit.slope_err = std::sqrt(s2 * sw / delta);
    fit.intercept_err = std::sqrt(s2 * suu / delta);
  }
  return fit;
}

std::vector<std::pair<double, double>> mse_scan(const EntropyDataset& data,
                                                const std::vector<double>& p_grid,
                                                Parity parity) {
  const EntropyDataset filtered = data.filter_parity(parity);
  std::vector<std::pair<double, double>> out;
  for (double p : p_grid) {
    std::vector<double> ns, ss;
    for (const EntropyPoint& pt : filtered.points) {
      if (std::abs(pt.p - p) < 1e-9) {
        ns.push_back(static_cast<double>(pt.n));
        ss.push_back(pt.mean_s);
      }
    }
    if (ns.size() < 3)
      throw std::invalid_argument("mse_scan: need >= 3 sizes per parity at each p");
    // unweighted fit; R(p) is the plain mean squared residual
    const LogFit fit = log_fit(ns, ss, std::vector<double>(ns.size(), 0.0),
                               OffsetForm::LnN);
    double r = 0.0;
    for (std::size_t i = 0; i < ns.size(); ++i) {
      const double res = ss[i] - (fit.slope * std::log(ns[i]) + fit.intercept);
      r += res * res;
    }
    out.emplace_back(p, r / static_cast<double>(ns.size()));
  }
  return out;
}

std::pair<double, double> dynamical_exponent(const LogFit& time_fit,
                                             const LogFit& space_fit) {
  if (!(space_fit.slope > 0.0))
    throw std::invalid_argument("dynamical_exponent: spatial slope must be positive");
  if (!(time_fit.slope > 0.0))
    throw std::invalid_argument("dynamical_exponent: time slope must be positive");
  const double z = time_fit.slope / space_fit.slope;
  const double rel_t = time_fit.slope_err / time_fit.slope;
  const double rel_x = space_fit.slope_err / space_fit.slope;
  return {z, std::abs(z) * std::sqrt(rel_t * rel_t + rel_x * rel_x)};
}

PostselectionCost postselection_runs(double n, double p, double t) {
  if (n < 0.0 || t < 0.0 || p < 0.0 || p > 1.0)
    throw std::invalid_argument("postselection_runs: invalid arguments");
  PostselectionCost cost;
  cost.log2_runs = 2.0 * p * n * t;
  cost.runs = std::exp2(cost.log2_runs);
  return cost;
}

double crosstalk_emission_estimate(double relative_intensity,
                                   double linewidth_rad_s,
                                   double detect_time_s) {
  if (relative_intensity < 0.0)
    throw std::invalid_argument("emission estimate: intensity must be >= 0");
  if (!(linewidth_rad_s > 0.0) || !(detect_time_s > 0.0))
    throw std::invalid_argument("emission estimate: linewidth and time must be > 0");
  return relative_intensity * (linewidth_rad_s / 6.0) * detect_time_s;
}

AbsorptionEstimate crosstalk_absorption_estimate(double wavelength_m,
                                                 double ion_distance_m,
                                                 double scatter_rate_hz,
                                                 double detect_time_s) {
  if (!(wavelength_m > 0.0) || !(ion_distance_m > 0.0) ||
      !(scatter_rate_hz > 0.0) || !(detect_time_s > 0.0))
    throw std::invalid_argument("absorption estimate: inputs must be > 0");
  AbsorptionEstimate est;
  est.sigma_m2 = wavelength_m * wavelength_m / (2.0 * kPi);
  est.radius_m = std::sqrt(est.sigma_m2 / kPi);
  const double theta = std::atan(est.radius_m / ion_distance_m);
  est.fraction = (1.0 - std::cos(theta)) / 2.0;
  est.p_d = scatter_rate_hz * detect_time_s * est.fraction;
  return est;
}

}  // namespace ionmpt
