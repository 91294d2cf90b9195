#include "dws/pair_grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dws/error.hpp"

namespace dws {

TwoParticleGridState::TwoParticleGridState(const Grid& g) : grid(g) {
  for (auto& c : psi) c.assign(static_cast<std::size_t>(g.n) * g.n, cplx(0.0));
}

double TwoParticleGridState::norm() const {
  double s = 0.0;
  for (const auto& c : psi)
    for (const cplx& v : c) s += std::norm(v);
  return s * grid.dx() * grid.dx();
}

double TwoParticleGridState::symmetry_violation() const {
  const int n = grid.n;
  double worst = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const cvec& p = psi[2 * a + b];
      const cvec& q = psi[2 * b + a];
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          worst = std::max(worst, std::abs(p[static_cast<std::size_t>(i) * n + j] - q[static_cast<std::size_t>(j) * n + i]));
    }
  return worst;
}

bool TwoParticleGridState::active(int c) const {
  for (const cplx& v : psi[c])
    if (v != cplx(0.0)) return true;
  return false;
}

SingleGridState::SingleGridState(const Grid& g) : grid(g) {
  for (auto& c : psi) c.assign(g.n, cplx(0.0));
}

double SingleGridState::norm() const {
  double s = 0.0;
  for (const auto& c : psi)
    for (const cplx& v : c) s += std::norm(v);
  return s * grid.dx();
}

SpinOrbitals prep_orbitals(const LatticeParams& p, const Grid& g) {
  SpinOrbitals o;
  for (Spin s : {Spin::zero, Spin::one}) {
    const LocalizedPair lp = localized_pair(solve_stationary(p, s, g, 4));
    o.left[index(s)] = lp.left;
    o.right[index(s)] = lp.right;
  }
  return o;
}

TwoParticleGridState symmetrized_product(const Grid& g, const std::vector<double>& a, Spin sa,
                                         const std::vector<double>& b, Spin sb) {
  const int n = g.n;
  if (static_cast<int>(a.size()) != n || static_cast<int>(b.size()) != n)
    throw DomainError("symmetrized_product: orbital size does not match grid");
  TwoParticleGridState st(g);
  cvec& c1 = st.psi[2 * index(sa) + index(sb)];
  cvec& c2 = st.psi[2 * index(sb) + index(sa)];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      c1[static_cast<std::size_t>(i) * n + j] += a[i] * b[j];
      c2[static_cast<std::size_t>(i) * n + j] += b[i] * a[j];
    }
  const double nn = st.norm();
  if (!(nn > 0)) throw DomainError("symmetrized_product: state vanishes under symmetrization");
  const double s = 1.0 / std::sqrt(nn);
  for (auto& c : st.psi)
    for (cplx& v : c) v *= s;
  return st;
}

TwoParticleGridState init_grid_state(const Grid& g, const SpinOrbitals& orb, Spin q_L, Spin p_R) {
  return symmetrized_product(g, orb.left[index(q_L)], q_L, orb.right[index(p_R)], p_R);
}

std::vector<double> composition_weights(int order) {
  if (order == 2) return {1.0};
  if (order == 4) {
    const double c = std::cbrt(2.0);
    const double w1 = 1.0 / (2.0 - c), w0 = -c / (2.0 - c);
    return {w1, w0, w1};
  }
  throw DomainError("composition order must be 2 or 4");
}

void check_time_step(const RampSchedule& ramp, double t0, double duration, double dt, const InternalUnits& u) {
  double w = 0.0;
  const int n = 32;
  for (int i = 0; i <= n; ++i) w = std::max(w, max_vibrational_quantum(ramp.sample(t0 + duration * i / n)));
  for (const RampKnot& k : ramp.knots())
    if (k.t >= t0 && k.t <= t0 + duration) w = std::max(w, max_vibrational_quantum(k.params));
  const double x = u.internal_time(dt) * w;
  if (x * x >= 0.1) {
    std::ostringstream msg;
    msg << "time step " << dt * 1e6 << " us too large: (dt*omega_max)^2 = " << x * x << " >= 0.1";
    throw StabilityError(msg.str());
  }
}

PairPropagator::PairPropagator(const Grid& grid, double g1d, const Constants& c)
    : grid_(grid), g1d_(g1d), units_(c), blocks_(grid, g1d), fft_(grid.n) {}

const ContactKineticBlocks::Phases& PairPropagator::phases_for(double tau) {
  auto it = phase_cache_.find(tau);
  if (it != phase_cache_.end()) return it->second;
  if (phase_cache_.size() >= 8) phase_cache_.clear();
  return phase_cache_.emplace(tau, blocks_.phases(tau)).first->second;
}

PropagationReport PairPropagator::propagate(TwoParticleGridState& st, const RampSchedule& ramp, double t0,
                                            double duration, const PropagationSettings& s, const PairObserver& obs) {
  if (!(st.grid == grid_)) throw DomainError("propagate: state grid does not match propagator grid");
  if (!(s.dt > 0)) throw DomainError("propagate: dt must be positive");
  if (!(duration >= 0)) throw DomainError("propagate: negative duration");
  if (st.symmetry_violation() > 1e-10) throw DomainError("propagate: initial state is not exchange symmetric");

  PropagationReport rep;
  const int steps = duration == 0.0 ? 0 : static_cast<int>(std::ceil(duration / s.dt - 1e-9));
  rep.steps = steps;
  rep.dt = steps > 0 ? duration / steps : 0.0;
  if (steps > 0 && s.check_stability) check_time_step(ramp, t0, duration, rep.dt, units_);

  const int n = grid_.n;
  const double tau = units_.internal_time(rep.dt);
  const double zeeman = units_.hz_to_energy(s.zeeman_hz);
  const double inv = 1.0 / (double(n) * n);
  const std::vector<double> weights = composition_weights(s.order);

  std::vector<int> act;
  for (int c = 0; c < 4; ++c)
    if (st.active(c)) act.push_back(c);
  std::vector<cplx*> ptr;
  for (int c : act) ptr.push_back(st.psi[c].data());

  const double norm0 = st.norm();
  if (obs) obs(t0, st);

  std::array<std::vector<double>, 2> v;
  std::array<cvec, 2> half, half_scaled;
  for (int sp = 0; sp < 2; ++sp) {
    v[sp].resize(n);
    half[sp].resize(n);
    half_scaled[sp].resize(n);
  }
  const int nact = static_cast<int>(act.size());

  for (int step = 0; step < steps; ++step) {
    double cum = 0.0;
    for (double w : weights) {
      const double tm = t0 + (step + cum + 0.5 * w) * rep.dt;
      const LatticeParams p = ramp.sample(tm);
      for (int sp = 0; sp < 2; ++sp) {
        const Spin spin = sp == 0 ? Spin::zero : Spin::one;
        for (int j = 0; j < n; ++j) {
          const double vj = potential_value(p, spin, grid_.x(j)) + (sp == 1 ? zeeman : 0.0);
          half[sp][j] = std::polar(1.0, -0.5 * w * tau * vj);
          half_scaled[sp][j] = half[sp][j] * inv;
        }
      }
      const auto& ph = phases_for(w * tau);
      auto potential = [&](bool scaled) {
        for (int a = 0; a < nact; ++a) {
          const int c = act[a];
          const auto& h1 = scaled ? half_scaled[c / 2] : half[c / 2];
          apply_separable_phase(ptr[a], h1.data(), half[c % 2].data(), n, s.exec);
        }
      };
      potential(false);
      if (s.exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (int a = 0; a < nact; ++a) fft_.forward(ptr[a]);
      } else {
        for (int a = 0; a < nact; ++a) fft_.forward(ptr[a]);
      }
      blocks_.apply(ptr, ph, s.exec);
      if (s.exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (int a = 0; a < nact; ++a) fft_.backward(ptr[a]);
      } else {
        for (int a = 0; a < nact; ++a) fft_.backward(ptr[a]);
      }
      potential(true);
      cum += w;
    }
    if (obs && s.observe_every > 0 && (step + 1) % s.observe_every == 0 && step + 1 < steps)
      obs(t0 + (step + 1) * rep.dt, st);
  }
  if (obs && steps > 0) obs(t0 + duration, st);

  rep.norm_drift = std::abs(st.norm() - norm0);
  rep.symmetry_violation = st.symmetry_violation();
  if (rep.norm_drift > 1e-8) {
    std::ostringstream msg;
    msg << "propagate: norm drift " << rep.norm_drift << " exceeds 1e-8";
    throw NumericError(msg.str());
  }
  if (rep.symmetry_violation > 1e-10) {
    std::ostringstream msg;
    msg << "propagate: exchange symmetry violated by " << rep.symmetry_violation;
    throw NumericError(msg.str());
  }
  return rep;
}

SinglePropagator::SinglePropagator(const Grid& grid, const Constants& c) : grid_(grid), units_(c), fft_(grid.n) {
  if (grid.boundary != Boundary::periodic) throw DomainError("SinglePropagator: periodic grid required");
  for (double k : fft_wavenumbers(grid)) k2_.push_back(k * k);
}

PropagationReport SinglePropagator::propagate(SingleGridState& st, const RampSchedule& ramp, double t0,
                                              double duration, const PropagationSettings& s,
                                              const SingleObserver& obs) {
  if (!(st.grid == grid_)) throw DomainError("propagate: state grid does not match propagator grid");
  if (!(s.dt > 0)) throw DomainError("propagate: dt must be positive");
  PropagationReport rep;
  const int steps = duration == 0.0 ? 0 : static_cast<int>(std::ceil(duration / s.dt - 1e-9));
  rep.steps = steps;
  rep.dt = steps > 0 ? duration / steps : 0.0;
  if (steps > 0 && s.check_stability) check_time_step(ramp, t0, duration, rep.dt, units_);
  const int n = grid_.n;
  const double tau = units_.internal_time(rep.dt);
  const double zeeman = units_.hz_to_energy(s.zeeman_hz);
  const std::vector<double> weights = composition_weights(s.order);
  const double norm0 = st.norm();
  if (obs) obs(t0, st);
  std::vector<cplx> half(n), kin(n);
  for (int step = 0; step < steps; ++step) {
    double cum = 0.0;
    for (double w : weights) {
      const LatticeParams p = ramp.sample(t0 + (step + cum + 0.5 * w) * rep.dt);
      for (int k = 0; k < n; ++k) kin[k] = std::polar(1.0 / n, -w * tau * k2_[k]);
      for (int sp = 0; sp < 2; ++sp) {
        const Spin spin = sp == 0 ? Spin::zero : Spin::one;
        for (int j = 0; j < n; ++j)
          half[j] = std::polar(1.0, -0.5 * w * tau * (potential_value(p, spin, grid_.x(j)) + (sp ? zeeman : 0.0)));
        cplx* psi = st.psi[sp].data();
        for (int j = 0; j < n; ++j) psi[j] *= half[j];
        fft_.forward(psi);
        for (int k = 0; k < n; ++k) psi[k] *= kin[k];
        fft_.backward(psi);
        for (int j = 0; j < n; ++j) psi[j] *= half[j];
      }
      cum += w;
    }
    if (obs && s.observe_every > 0 && (step + 1) % s.observe_every == 0 && step + 1 < steps)
      obs(t0 + (step + 1) * rep.dt, st);
  }
  if (obs && steps > 0) obs(t0 + duration, st);
  rep.norm_drift = std::abs(st.norm() - norm0);
  if (rep.norm_drift > 1e-8) throw NumericError("single-particle propagation lost unitarity");
  return rep;
}

PropagationReport propagate_grid(TwoParticleGridState& state, const RampSchedule& ramp, double dt, double g1d,
                                 const PairObserver& obs, const Constants& c) {
  PairPropagator prop(state.grid, g1d, c);
  PropagationSettings s;
  s.dt = dt;
  return prop.propagate(state, ramp, ramp.start(), ramp.duration(), s, obs);
}

}  // namespace dws
