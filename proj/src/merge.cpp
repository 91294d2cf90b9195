#include "dws/merge.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dws/error.hpp"
#include "dws/exchange.hpp"

namespace dws {

namespace {

double overlap4(const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& c,
                const std::vector<double>& d, double dx) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i] * c[i] * d[i];
  return s * dx;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double left_weight(const std::vector<double>& v, const Grid& g, double center) {
  double l = 0.0, t = 0.0;
  for (int j = 0; j < g.n; ++j) {
    const double w = v[j] * v[j];
    t += w;
    if (std::remainder(g.x(j) - center, std::numbers::pi) < 0) l += w;
  }
  return l / t;
}

double interp(const std::vector<double>& y, double u) {
  if (y.size() == 1) return y[0];
  // Catmull-Rom cubic through the four nearest uniform samples.
  const int n = static_cast<int>(y.size());
  u = std::clamp(u, 0.0, double(n - 1));
  int i = std::min(static_cast<int>(u), n - 2);
  const double f = u - i;
  const double y0 = y[std::max(i - 1, 0)], y1 = y[i], y2 = y[i + 1], y3 = y[std::min(i + 2, n - 1)];
  const double a = -0.5 * y0 + 1.5 * y1 - 1.5 * y2 + 0.5 * y3;
  const double b = y0 - 2.5 * y1 + 2.0 * y2 - 0.5 * y3;
  const double c = -0.5 * y0 + 0.5 * y2;
  return ((a * f + b) * f + c) * f + y1;
}

}  // namespace

ModeRampEngine::ModeRampEngine(const RampSchedule& ramp, const Grid& grid, double g1d, int samples,
                               const Constants& c)
    : ramp_(ramp), units_(c) {
  if (ramp.empty()) throw DomainError("ModeRampEngine: empty ramp");
  if (samples < 2) throw DomainError("ModeRampEngine: need at least two samples");
  if (!(g1d >= 0)) throw DomainError("ModeRampEngine: g1d must be non-negative");

  final_spectrum_ = solve_stationary(ramp.last(), Spin::zero, grid, 4);
  final_ = dressed_mode_model(final_spectrum_, g1d);
  kappa_ = final_.u_eg_first_order > 0 ? final_.u_eg / final_.u_eg_first_order : 1.0;

  t_begin_ = ramp.start();
  const int ns = ramp.duration() > 0 ? samples : 1;
  h_ = ns > 1 ? ramp.duration() / (ns - 1) : 0.0;
  for (auto& v : samples_) v.resize(ns);

  const double gk = g1d * kappa_;
  const double dx = grid.dx();
  std::array<std::vector<double>, 2> prev_a, prev_b;
  for (int k = 0; k < ns; ++k) {
    const LatticeParams p = ramp.sample(t_begin_ + k * h_);
    std::array<SingleParticleSpectrum, 2> sp{solve_stationary(p, Spin::zero, grid, 2),
                                             solve_stationary(p, Spin::one, grid, 2)};
    std::array<std::vector<double>, 2> a{sp[0].states[1], sp[1].states[1]};
    std::array<std::vector<double>, 2> b{sp[0].states[0], sp[1].states[0]};
    if (k == 0 && well_geometry(p, Spin::zero, c).double_well()) {
      const double center = cell_center(p);
      for (int s = 0; s < 2; ++s)
        if (left_weight(a[s], grid, center) < 0.5)
          throw PreconditionError("ModeRampEngine: the left well must hold the upper state for both spins");
    }
    // Keep signs continuous in time and aligned between spins.
    for (int s = 0; s < 2; ++s) {
      const std::vector<double>& ra = k > 0 ? prev_a[s] : a[0];
      const std::vector<double>& rb = k > 0 ? prev_b[s] : b[0];
      if (dot(a[s], ra) < 0)
        for (double& v : a[s]) v = -v;
      if (dot(b[s], rb) < 0)
        for (double& v : b[s]) v = -v;
    }
    const double ea0 = sp[0].energies[1], eb0 = sp[0].energies[0];
    const double ea1 = sp[1].energies[1], eb1 = sp[1].energies[0];
    samples_[0][k] = ea0 + eb0 + 2.0 * gk * overlap4(a[0], a[0], b[0], b[0], dx);
    samples_[1][k] = ea0 + eb1 + gk * overlap4(a[0], a[0], b[1], b[1], dx);
    samples_[2][k] = ea1 + eb0 + gk * overlap4(a[1], a[1], b[0], b[0], dx);
    samples_[3][k] = ea1 + eb1 + 2.0 * gk * overlap4(a[1], a[1], b[1], b[1], dx);
    samples_[4][k] = gk * overlap4(a[0], b[1], b[0], a[1], dx);
    samples_[5][k] = eb0;
    samples_[6][k] = eb1;
    samples_[7][k] = ea0;
    samples_[8][k] = ea1;
    prev_a = a;
    prev_b = b;
  }
}

ModeRampEngine::Terms ModeRampEngine::terms(double t) const {
  const double u = h_ > 0 ? (t - t_begin_) / h_ : 0.0;
  Terms out;
  for (int i = 0; i < 4; ++i) out.diag[i] = interp(samples_[i], u);
  out.coupling = interp(samples_[4], u);
  for (int m = 0; m < 2; ++m)
    for (int sp = 0; sp < 2; ++sp) out.single[m][sp] = interp(samples_[5 + 2 * m + sp], u);
  return out;
}

namespace {

// Steps over [t0, t0 + duration]; a window entirely outside the ramp sees a
// constant Hamiltonian and takes one exact step.
template <class F>
void step_window(const RampSchedule& ramp, double t0, double duration, double dt, F&& f) {
  if (!(duration >= 0) || !(dt > 0)) throw DomainError("ModeRampEngine: invalid duration or step");
  if (duration == 0) return;
  const bool frozen = t0 >= ramp.end() || t0 + duration <= ramp.start() || ramp.duration() == 0;
  const int steps = frozen ? 1 : std::max(1, static_cast<int>(std::ceil(duration / dt - 1e-9)));
  const double h = duration / steps;
  for (int k = 0; k < steps; ++k) f(t0 + (k + 0.5) * h, h);
}

}  // namespace

Eigen::Matrix4cd ModeRampEngine::propagator(double t0, double duration, double dt) const {
  Eigen::Matrix4cd u;
  for (int j = 0; j < 4; ++j) {
    ModeState e{};
    e[j] = 1.0;
    const ModeState r = propagate(e, t0, duration, 0.0, dt);
    for (int i = 0; i < 4; ++i) u(i, j) = r[i];
  }
  return u;
}

std::array<cplx, 2> ModeRampEngine::propagate_single(const std::array<cplx, 2>& spin, int mode, double t0,
                                                     double duration, double zeeman, double dt) const {
  if (mode != 0 && mode != 1) throw DomainError("propagate_single: mode must be 0 (b) or 1 (a)");
  double phase0 = 0.0, phase1 = 0.0;
  step_window(ramp_, t0, duration, dt, [&](double t, double h) {
    const Terms tm = terms(t);
    const double tau = units_.internal_time(h);
    phase0 += tm.single[mode][0] * tau;
    phase1 += (tm.single[mode][1] + zeeman) * tau;
  });
  return {spin[0] * std::polar(1.0, -phase0), spin[1] * std::polar(1.0, -phase1)};
}

ModeState ModeRampEngine::propagate(const ModeState& psi, double t0, double duration, double zeeman,
                                    double dt) const {
  ModeState out = psi;
  step_window(ramp_, t0, duration, dt, [&](double t, double h) {
    const Terms tm = terms(t);
    const double tau = units_.internal_time(h);
    out[0] *= std::polar(1.0, -tm.diag[0] * tau);
    out[3] *= std::polar(1.0, -(tm.diag[3] + 2.0 * zeeman) * tau);
    const double mean = 0.5 * (tm.diag[1] + tm.diag[2]) + zeeman;
    const double delta = 0.5 * (tm.diag[1] - tm.diag[2]);
    const double x = tm.coupling;
    const double w = std::hypot(delta, x);
    const double cw = std::cos(w * tau);
    const double sw = w > 0 ? std::sin(w * tau) / w : tau;
    const cplx ph = std::polar(1.0, -mean * tau);
    const cplx i(0.0, 1.0);
    const cplx c01 = out[1], c10 = out[2];
    out[1] = ph * ((cw - i * sw * delta) * c01 - i * sw * x * c10);
    out[2] = ph * (-i * sw * x * c01 + (cw + i * sw * delta) * c10);
  });
  return out;
}

AdiabaticityMetrics adiabaticity_metrics(const RampSchedule& ramp, double dt, double g1d, int n, Spin q_L,
                                         Spin p_R, Exec exec, const Constants& c) {
  if (ramp.empty()) throw DomainError("adiabaticity_metrics: empty ramp");
  const Grid grid = cell_grid(ramp.first(), n);
  TwoParticleGridState st = init_grid_state(grid, prep_orbitals(ramp.first(), grid), q_L, p_R);
  PairPropagator prop(grid, g1d, c);
  PropagationSettings set;
  set.dt = std::min(dt, std::max(ramp.duration(), 1e-12));
  set.exec = exec;
  AdiabaticityMetrics m;
  m.report = prop.propagate(st, ramp, ramp.start(), ramp.duration(), set);
  const SingleParticleSpectrum s0 = solve_stationary(ramp.last(), Spin::zero, grid, 4);
  const SingleParticleSpectrum s1 = solve_stationary(ramp.last(), Spin::one, grid, 4);
  m.decomposition = singlet_triplet_decompose(st, s0, s1, exec);
  m.populations = one_body_populations(st, s0, s1, exec);
  const double pe = m.populations.p[1][0] + m.populations.p[1][1];
  const double pg = m.populations.p[0][0] + m.populations.p[0][1];
  m.vibrational_fidelity = std::min(2.0 * pe, 2.0 * pg);
  m.exchange_amplitude = m.decomposition.exchange_amplitude();
  return m;
}

TransferFractions transfer_fractions(const RampSchedule& ramp, double dt, int n, const Constants& c) {
  if (ramp.empty()) throw DomainError("transfer_fractions: empty ramp");
  const Grid grid = cell_grid(ramp.first(), n);
  const SpinOrbitals orb = prep_orbitals(ramp.first(), grid);
  SinglePropagator prop(grid, c);
  PropagationSettings set;
  set.dt = std::min(dt, std::max(ramp.duration(), 1e-12));
  TransferFractions out;
  for (Spin s : {Spin::zero, Spin::one}) {
    const int si = index(s);
    const SingleParticleSpectrum fin = solve_stationary(ramp.last(), s, grid, 4);
    for (int site = 0; site < 2; ++site) {
      SingleGridState st(grid);
      const std::vector<double>& o = site == 0 ? orb.left[si] : orb.right[si];
      for (int j = 0; j < n; ++j) st.psi[si][j] = o[j];
      prop.propagate(st, ramp, ramp.start(), ramp.duration(), set);
      const BandPopulations bp = band_projection(std::span<const cplx>(st.psi[si].data(), st.psi[si].size()), fin);
      if (site == 0)
        out.left_to_e[si] = bp.populations.at(1);
      else
        out.right_to_g[si] = bp.populations.at(0);
    }
  }
  return out;
}

}  // namespace dws
