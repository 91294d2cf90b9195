#include "dws/mode_model.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include "dws/error.hpp"

namespace dws {

namespace {

const double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

double norm2(const ModeState& s) {
  double n = 0.0;
  for (const cplx& c : s) n += std::norm(c);
  return n;
}

cplx product_overlap(const cvec& psi, const std::vector<double>& a, const std::vector<double>& b, int n) {
  cplx acc = 0.0;
  for (int i = 0; i < n; ++i) {
    cplx row = 0.0;
    const cplx* r = psi.data() + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) row += r[j] * b[j];
    acc += a[i] * row;
  }
  return acc;
}

}  // namespace

ModeState basis_state(int q_e, int p_g) {
  if (q_e < 0 || q_e > 1 || p_g < 0 || p_g > 1) throw DomainError("basis_state: spins must be 0 or 1");
  ModeState s{};
  s[2 * q_e + p_g] = 1.0;
  return s;
}

ModeModel build_mode_model(const SingleParticleSpectrum& s, double g1d) {
  if (s.size() < 2) throw PreconditionError("build_mode_model: spectrum needs at least two states");
  ModeModel m;
  m.eps_g = s.energies[0];
  m.eps_e = s.energies[1];
  const Orbital g = s.orbital(0), e = s.orbital(1);
  m.u_eg_first_order = 2.0 * g1d * contact_overlap(e, g);
  m.u_eg = m.u_eg_first_order;
  m.u_gg = g1d * contact_overlap(g, g);
  m.u_ee = g1d * contact_overlap(e, e);
  return m;
}

ModeModel build_mode_model(const SingleParticleSpectrum& s, const TransverseConfinement& t, double a_s,
                           const Constants& c) {
  return build_mode_model(s, contact_strength_1d(a_s, t, c));
}

ModeState evolve_mode_model(const ModeModel& m, const ModeState& psi, double t, double zeeman) {
  if (std::abs(norm2(psi) - 1.0) > 1e-10) throw DomainError("evolve_mode_model: input state is not normalized");
  const double e0 = m.eps_g + m.eps_e;
  const double u = m.u_eg;
  auto ph = [t](double e) { return std::polar(1.0, -e * t); };
  ModeState out;
  out[0] = ph(e0 + u) * psi[0];
  out[3] = ph(e0 + u + 2.0 * zeeman) * psi[3];
  const cplx as = (psi[2] - psi[1]) * kInvSqrt2 * ph(e0 + zeeman);
  const cplx at = (psi[2] + psi[1]) * kInvSqrt2 * ph(e0 + u + zeeman);
  out[1] = (at - as) * kInvSqrt2;
  out[2] = (at + as) * kInvSqrt2;
  return out;
}

double swap_time(const ModeModel& m) {
  if (!(m.u_eg > 0)) throw DomainError("swap_time: U_eg must be positive");
  return std::numbers::pi / m.u_eg;
}

double ExchangeDecomposition::exchange_amplitude() const {
  const double d = block_population();
  if (d <= 1e-300) return 0.0;
  return 2.0 * std::abs(s) * std::abs(t0) / d;
}

ExchangeDecomposition singlet_triplet_decompose(const ModeState& psi) {
  ExchangeDecomposition d;
  d.s = (psi[2] - psi[1]) * kInvSqrt2;
  d.t0 = (psi[2] + psi[1]) * kInvSqrt2;
  d.tm = psi[0];
  d.tp = psi[3];
  const double tot = norm2(psi);
  d.residual = tot - (std::norm(d.s) + std::norm(d.t0) + std::norm(d.tm) + std::norm(d.tp));
  if (std::abs(d.residual) < 1e-15) d.residual = 0.0;
  return d;
}

ModeState mode_amplitudes(const TwoParticleGridState& st, const SingleParticleSpectrum& s0,
                          const SingleParticleSpectrum& s1, Exec exec) {
  const int n = st.grid.n;
  if (s0.grid.n != n || s1.grid.n != n || s0.size() < 2 || s1.size() < 2)
    throw DomainError("mode_amplitudes: spectra must have two states on the state grid");
  const double dx2 = st.grid.dx() * st.grid.dx();
  const SingleParticleSpectrum* sp[2] = {&s0, &s1};
  ModeState out{};
  auto one = [&](int q, int p) {
    const auto& e = sp[q]->states[1];
    const auto& g = sp[p]->states[0];
    const cplx a = product_overlap(st.psi[2 * q + p], e, g, n);
    const cplx b = product_overlap(st.psi[2 * p + q], g, e, n);
    return (a + b) * kInvSqrt2 * dx2;
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (int k = 0; k < 4; ++k) out[k] = one(k / 2, k % 2);
  } else {
    for (int k = 0; k < 4; ++k) out[k] = one(k / 2, k % 2);
  }
  return out;
}

ExchangeDecomposition singlet_triplet_decompose(const TwoParticleGridState& st, const SingleParticleSpectrum& s0,
                                                const SingleParticleSpectrum& s1, Exec exec) {
  ExchangeDecomposition d = singlet_triplet_decompose(mode_amplitudes(st, s0, s1, exec));
  d.residual = st.norm() - (std::norm(d.s) + std::norm(d.t0) + std::norm(d.tm) + std::norm(d.tp));
  return d;
}

double BandSpinPopulations::total() const {
  double s = 0.0;
  for (const auto& b : p) s += b[0] + b[1];
  return s;
}

BandSpinPopulations one_body_populations(const TwoParticleGridState& st, const SingleParticleSpectrum& s0,
                                         const SingleParticleSpectrum& s1, Exec exec) {
  const int n = st.grid.n;
  const double dx = st.grid.dx();
  const SingleParticleSpectrum* sp[2] = {&s0, &s1};
  BandSpinPopulations out;
  std::array<double, 2> spin_norm{0.0, 0.0};
  for (int c = 0; c < 4; ++c) {
    if (!st.active(c)) continue;
    const int a = c / 2, b = c % 2;
    double w = 0.0;
    for (const cplx& v : st.psi[c]) w += std::norm(v);
    w *= dx * dx;
    spin_norm[a] += w;
    spin_norm[b] += w;
    for (int band = 0; band < 2; ++band) {
      out.p[band][a] += mode_weight(st.psi[c].data(), sp[a]->states[band].data(), n, dx, exec).first;
      out.p[band][b] += mode_weight(st.psi[c].data(), sp[b]->states[band].data(), n, dx, exec).second;
    }
  }
  for (int s = 0; s < 2; ++s) {
    for (int band = 0; band < 2; ++band) out.p[band][s] *= 0.5;
    out.p[2][s] = std::max(0.0, 0.5 * spin_norm[s] - out.p[0][s] - out.p[1][s]);
  }
  return out;
}

BandSpinPopulations one_body_populations(const SingleGridState& st, const SingleParticleSpectrum& s0,
                                         const SingleParticleSpectrum& s1) {
  const SingleParticleSpectrum* sp[2] = {&s0, &s1};
  BandSpinPopulations out;
  for (int s = 0; s < 2; ++s) {
    const BandPopulations bp = band_projection(std::span<const cplx>(st.psi[s].data(), st.psi[s].size()), *sp[s]);
    out.p[0][s] = bp.populations.at(0);
    out.p[1][s] = bp.populations.at(1);
    double rest = bp.higher;
    for (std::size_t k = 2; k < bp.populations.size(); ++k) rest += bp.populations[k];
    out.p[2][s] = rest;
  }
  return out;
}

BandSpinPopulations one_body_populations(const ModeState& psi) {
  BandSpinPopulations out;
  for (int q = 0; q < 2; ++q)
    for (int p = 0; p < 2; ++p) {
      const double w = 0.5 * std::norm(psi[2 * q + p]);
      out.p[1][q] += w;
      out.p[0][p] += w;
    }
  return out;
}

void write_trajectory_csv(std::ostream& os, const std::vector<TrajectoryPoint>& pts) {
  os << "t_us,p_e_spin0,p_e_spin1,p_g_spin0,p_g_spin1,a_S_re,a_S_im,a_T0_re,a_T0_im,norm\n";
  char buf[512];
  for (const auto& p : pts) {
    std::snprintf(buf, sizeof buf, "%.6f,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.14g\n", p.t * 1e6,
                  p.pops.p[1][0], p.pops.p[1][1], p.pops.p[0][0], p.pops.p[0][1], p.dec.s.real(), p.dec.s.imag(),
                  p.dec.t0.real(), p.dec.t0.imag(), p.norm);
    os << buf;
  }
}

}  // namespace dws
