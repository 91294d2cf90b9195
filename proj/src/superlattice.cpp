#include "dws/superlattice.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/tools/roots.hpp>

#include "dws/error.hpp"

namespace dws {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kScan = 1024;

double spin_phase(const LatticeParams& p, Spin spin) {
  return spin == Spin::one ? p.theta + p.dtheta_spin : p.theta;
}

double wrap_into(double x, double x0, double period) {
  double u = std::fmod(x - x0, period);
  if (u < 0) u += period;
  return x0 + u;
}

// Root of V' inside [a, b] where V' changes sign.
double refine_critical(const LatticeParams& p, Spin spin, double a, double b) {
  auto f = [&](double x) { return potential_slope(p, spin, x); };
  double fa = f(a), fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa < 0) == (fb < 0)) {
    // no bracket: plain Newton from the midpoint
    double x = 0.5 * (a + b);
    for (int it = 0; it < 50; ++it) {
      const double d2 = potential_curvature(p, spin, x);
      if (d2 == 0.0) break;
      x -= f(x) / d2;
      if (std::abs(f(x)) < 1e-12) return x;
    }
    if (std::abs(f(x)) < 1e-10) return x;
    throw GeometryError("well_geometry: critical point refinement failed");
  }
  boost::uintmax_t iters = 200;
  auto tol = boost::math::tools::eps_tolerance<double>(52);
  auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, iters);
  double x = 0.5 * (r.first + r.second);
  // one Newton polish
  const double d2 = potential_curvature(p, spin, x);
  if (d2 != 0.0) {
    const double xn = x - f(x) / d2;
    if (std::abs(f(xn)) < std::abs(f(x))) x = xn;
  }
  if (std::abs(f(x)) >= 1e-10) throw GeometryError("well_geometry: |V'| above tolerance after refinement");
  return x;
}

std::vector<double> locate_minima(const LatticeParams& p, Spin spin, double x0) {
  std::vector<double> v(kScan);
  const double h = kPi / kScan;
  for (int i = 0; i < kScan; ++i) v[i] = potential_value(p, spin, x0 + i * h);
  std::vector<double> out;
  for (int i = 0; i < kScan; ++i) {
    const double vl = v[(i + kScan - 1) % kScan], vr = v[(i + 1) % kScan];
    if (v[i] < vl && v[i] <= vr) {
      const double xm = refine_critical(p, spin, x0 + (i - 1) * h, x0 + (i + 1) * h);
      out.push_back(wrap_into(xm, x0, kPi));
    }
  }
  std::sort(out.begin(), out.end());
  std::vector<double> uniq;
  for (double x : out)
    if (uniq.empty() || x - uniq.back() > 1e-7) uniq.push_back(x);
  if (uniq.size() > 1 && uniq.front() + kPi - uniq.back() < 1e-7) uniq.pop_back();
  return uniq;
}

// Highest point between a and b (b > a), refined.
double locate_maximum(const LatticeParams& p, Spin spin, double a, double b) {
  const int n = 512;
  const double h = (b - a) / n;
  int best = 1;
  double vbest = -INFINITY;
  for (int i = 1; i < n; ++i) {
    const double val = potential_value(p, spin, a + i * h);
    if (val > vbest) { vbest = val; best = i; }
  }
  return refine_critical(p, spin, a + (best - 1) * h, a + (best + 1) * h);
}

}  // namespace

void LatticeParams::validate() const {
  if (!(v_long >= 0) || !(v_short >= 0)) throw DomainError("lattice depths must be non-negative");
  if (!std::isfinite(theta) || !std::isfinite(dtheta_spin)) throw DomainError("lattice phases must be finite");
  if (!(f_y > 0) || !(f_z > 0)) throw DomainError("transverse frequencies must be positive");
}

double potential_value(const LatticeParams& p, Spin spin, double x) {
  const double a = std::cos(2.0 * x);
  const double b = std::cos(x + spin_phase(p, spin));
  return -p.v_short * a * a - p.v_long * b * b;
}

double potential_slope(const LatticeParams& p, Spin spin, double x) {
  return 2.0 * p.v_short * std::sin(4.0 * x) + p.v_long * std::sin(2.0 * (x + spin_phase(p, spin)));
}

double potential_curvature(const LatticeParams& p, Spin spin, double x) {
  return 8.0 * p.v_short * std::cos(4.0 * x) + 2.0 * p.v_long * std::cos(2.0 * (x + spin_phase(p, spin)));
}

double cell_center(const LatticeParams& p) { return wrap_into(-p.theta, 0.0, kPi); }

WellGeometry well_geometry(const LatticeParams& p, Spin spin, const Constants& c) {
  p.validate();
  if (p.v_long == 0.0 && p.v_short == 0.0) throw GeometryError("well_geometry: flat potential");
  WellGeometry g;
  g.center = cell_center(p);
  const double x0 = g.center - 0.5 * kPi;
  g.minima = locate_minima(p, spin, x0);
  if (g.minima.empty()) throw GeometryError("well_geometry: no minimum found");

  const std::size_t m = g.minima.size();
  double lowest = INFINITY;
  for (std::size_t i = 0; i < m; ++i) {
    const double a = g.minima[i];
    const double b = (i + 1 < m) ? g.minima[i + 1] : g.minima[0] + kPi;
    const double xm = locate_maximum(p, spin, a, b);
    const double vmax = potential_value(p, spin, xm);
    const double vhi = std::max(potential_value(p, spin, a), potential_value(p, spin, b));
    if (vmax - vhi < lowest) {
      lowest = vmax - vhi;
      g.barrier_x = wrap_into(xm, x0, kPi);
    }
  }
  g.barrier_height = lowest;

  if (m >= 2) {
    const double xl = g.minima[0], xr = g.minima[1];
    g.tilt_LR = potential_value(p, spin, xl) - potential_value(p, spin, xr);
    auto dv = [&](double x) { return potential_value(p, Spin::one, x) - potential_value(p, Spin::zero, x); };
    g.dnu_rf = (dv(xl) - dv(xr)) * c.recoil_hz();
  }
  return g;
}

double differential_shift(const LatticeParams& p, Site site, const Constants& c) {
  const WellGeometry g = well_geometry(p, Spin::zero, c);
  if (!g.double_well()) throw PreconditionError("differential_shift: requires a double-well configuration");
  const double x = site == Site::L ? g.minima[0] : g.minima[1];
  return (potential_value(p, Spin::one, x) - potential_value(p, Spin::zero, x)) * c.recoil_hz();
}

double calibrate_dtheta_spin(LatticeParams p, double target_hz, const Constants& c) {
  if (!(target_hz > 0)) throw DomainError("calibrate_dtheta_spin: target must be positive");
  double offset = std::remainder(p.theta + 0.25 * kPi, 0.5 * kPi);
  const double sign = offset < 0 ? -1.0 : 1.0;
  auto f = [&](double d) {
    p.dtheta_spin = sign * d;
    return std::abs(well_geometry(p, Spin::zero, c).dnu_rf) - target_hz;
  };
  const int n = 64;
  const double dmax = 0.25 * kPi;
  double a = 0.0, fa = f(0.0);
  for (int i = 1; i <= n; ++i) {
    const double b = dmax * i / n;
    const double fb = f(b);
    if ((fa < 0) != (fb < 0)) {
      boost::uintmax_t iters = 200;
      auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, boost::math::tools::eps_tolerance<double>(50), iters);
      return sign * 0.5 * (r.first + r.second);
    }
    a = b;
    fa = fb;
  }
  throw DomainError("calibrate_dtheta_spin: target shift not reachable");
}

double max_vibrational_quantum(const LatticeParams& p) {
  if (p.v_long == 0.0 && p.v_short == 0.0) return 0.0;
  double w = 0.0;
  for (Spin s : {Spin::zero, Spin::one}) {
    for (double x : well_geometry(p, s).minima) {
      const double d2 = potential_curvature(p, s, x);
      if (d2 > 0) w = std::max(w, std::sqrt(2.0 * d2));
    }
  }
  return w;
}

}  // namespace dws
