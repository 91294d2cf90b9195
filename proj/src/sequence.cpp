#include "dws/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <numeric>
#include <sstream>

#include "dws/error.hpp"

namespace dws {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int cell_side(double x, double center) { return std::remainder(x - center, std::numbers::pi) < 0 ? 1 : 0; }

RfPulse resolved(const RfPulse& p, const Addressing& a) {
  RfPulse r = p;
  if (p.resonant) r.detuning_hz = a.resonance(p.target);
  return r;
}

std::string step_label(std::size_t i, const Step& s) {
  std::ostringstream os;
  os << "step " << i + 1 << " (" << step_name(s) << ")";
  return os.str();
}

}  // namespace

const char* target_name(PulseTarget t) {
  switch (t) {
    case PulseTarget::L: return "L";
    case PulseTarget::R: return "R";
    case PulseTarget::both: return "both";
    case PulseTarget::e: return "e";
    case PulseTarget::g: return "g";
  }
  return "?";
}

double RfPulse::area() const { return kTwoPi * rabi_hz * duration; }

void RfPulse::validate() const {
  if (!(rabi_hz >= 0) || !std::isfinite(rabi_hz)) throw DomainError("pulse: rabi frequency must be finite and >= 0");
  if (!(duration >= 0) || !std::isfinite(duration)) throw DomainError("pulse: duration must be finite and >= 0");
  if (!std::isfinite(phase) || !std::isfinite(detuning_hz)) throw DomainError("pulse: phase and detuning must be finite");
}

RfPulse RfPulse::with_area(PulseTarget target, double rabi_hz, double area, double phase, bool resonant) {
  if (!(rabi_hz > 0)) throw DomainError("pulse: an area needs a positive rabi frequency");
  if (!(area >= 0)) throw DomainError("pulse: area must be >= 0");
  RfPulse p;
  p.target = target;
  p.rabi_hz = rabi_hz;
  p.duration = area / (kTwoPi * rabi_hz);
  p.phase = phase;
  p.resonant = resonant;
  return p;
}

Eigen::Matrix2cd rf_unitary(const RfPulse& p, double local_shift_hz) {
  p.validate();
  const double hx = 0.5 * kTwoPi * p.rabi_hz * std::cos(p.phase);
  const double hy = 0.5 * kTwoPi * p.rabi_hz * std::sin(p.phase);
  const double hz = -0.5 * kTwoPi * (p.detuning_hz - local_shift_hz);
  const double h = std::sqrt(hx * hx + hy * hy + hz * hz);
  Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
  if (h == 0.0 || p.duration == 0.0) return u;
  const double c = std::cos(h * p.duration), s = std::sin(h * p.duration) / h;
  const cplx i(0.0, 1.0);
  u(0, 0) = c - i * s * hz;
  u(1, 1) = c + i * s * hz;
  u(0, 1) = -i * s * cplx(hx, -hy);
  u(1, 0) = -i * s * cplx(hx, hy);
  return u;
}

SpinAmplitudes rf_rotation(const SpinAmplitudes& s, const RfPulse& p, double local_shift_hz) {
  const Eigen::Matrix2cd u = rf_unitary(p, local_shift_hz);
  return {u(0, 0) * s[0] + u(0, 1) * s[1], u(1, 0) * s[0] + u(1, 1) * s[1]};
}

double Addressing::shift(int mode) const {
  if (double_well) return mode == 1 ? shift_L : shift_R;
  return mode == 1 ? shift_e : shift_g;
}

double Addressing::resonance(PulseTarget t) const {
  switch (t) {
    case PulseTarget::L: return shift_L;
    case PulseTarget::R: return shift_R;
    case PulseTarget::e: return shift_e;
    case PulseTarget::g: return shift_g;
    case PulseTarget::both: return 0.5 * (shift(0) + shift(1));
  }
  return 0.0;
}

bool Addressing::acts_on(PulseTarget t, int mode) const {
  switch (t) {
    case PulseTarget::both: return true;
    case PulseTarget::L:
    case PulseTarget::R:
      if (!double_well) throw DomainError(std::string("pulse target ") + target_name(t) + " needs a double well");
      return (t == PulseTarget::L) == (mode == 1);
    case PulseTarget::e:
    case PulseTarget::g:
      if (double_well) throw DomainError(std::string("pulse target ") + target_name(t) + " needs a merged well");
      return (t == PulseTarget::e) == (mode == 1);
  }
  return false;
}

Addressing addressing(const LatticeParams& p, const Grid& grid, const Constants& c) {
  Addressing a;
  a.center = cell_center(p);
  a.double_well = well_geometry(p, Spin::zero, c).double_well() && well_geometry(p, Spin::one, c).double_well();
  if (a.double_well) {
    a.shift_L = differential_shift(p, Site::L, c);
    a.shift_R = differential_shift(p, Site::R, c);
  } else {
    const SingleParticleSpectrum s = solve_stationary(p, Spin::zero, grid, 2);
    const std::vector<double> v0 = sample_potential(p, Spin::zero, grid);
    const std::vector<double> v1 = sample_potential(p, Spin::one, grid);
    for (int m = 0; m < 2; ++m) {
      double acc = 0.0;
      for (int j = 0; j < grid.n; ++j) acc += s.states[m][j] * s.states[m][j] * (v1[j] - v0[j]);
      (m == 1 ? a.shift_e : a.shift_g) = acc * grid.dx() * c.recoil_hz();
    }
  }
  return a;
}

ModeState apply_pulse_to_pair(const ModeState& psi, const RfPulse& pulse, const Addressing& a) {
  const RfPulse p = resolved(pulse, a);
  const Eigen::Matrix2cd ua = a.acts_on(p.target, 1) ? rf_unitary(p, a.shift(1)) : Eigen::Matrix2cd::Identity();
  const Eigen::Matrix2cd ub = a.acts_on(p.target, 0) ? rf_unitary(p, a.shift(0)) : Eigen::Matrix2cd::Identity();
  ModeState out{};
  for (int q2 = 0; q2 < 2; ++q2)
    for (int p2 = 0; p2 < 2; ++p2)
      for (int q = 0; q < 2; ++q)
        for (int pp = 0; pp < 2; ++pp) out[2 * q2 + p2] += ua(q2, q) * ub(p2, pp) * psi[2 * q + pp];
  return out;
}

namespace {

// Per-point rotation for grid states: site-resolved in a double well,
// uniform in a merged well.
std::array<Eigen::Matrix2cd, 2> grid_rotations(const RfPulse& pulse, const Addressing& a) {
  if (pulse.target == PulseTarget::e || pulse.target == PulseTarget::g)
    throw PreconditionError("grid engine pulses address sites or both atoms, not band modes");
  const RfPulse p = resolved(pulse, a);
  std::array<Eigen::Matrix2cd, 2> u;
  for (int m = 0; m < 2; ++m) {
    if (!a.acts_on(p.target, m))
      u[m] = Eigen::Matrix2cd::Identity();
    else
      u[m] = rf_unitary(p, a.double_well ? a.shift(m) : a.resonance(PulseTarget::both));
  }
  return u;
}

}  // namespace

void apply_pulse_to_pair(TwoParticleGridState& st, const RfPulse& pulse, const Addressing& a) {
  const auto u = grid_rotations(pulse, a);
  const int n = st.grid.n;
  std::vector<int> side(n);
  for (int j = 0; j < n; ++j) side[j] = cell_side(st.grid.x(j), a.center);
  for (int i = 0; i < n; ++i) {
    const Eigen::Matrix2cd& u1 = u[side[i]];
    for (int j = 0; j < n; ++j) {
      const Eigen::Matrix2cd& u2 = u[side[j]];
      const std::size_t k = static_cast<std::size_t>(i) * n + j;
      cplx in[4], outv[4] = {0.0, 0.0, 0.0, 0.0};
      for (int c = 0; c < 4; ++c) in[c] = st.psi[c][k];
      for (int s1 = 0; s1 < 2; ++s1)
        for (int s2 = 0; s2 < 2; ++s2)
          for (int r1 = 0; r1 < 2; ++r1)
            for (int r2 = 0; r2 < 2; ++r2) outv[2 * s1 + s2] += u1(s1, r1) * u2(s2, r2) * in[2 * r1 + r2];
      for (int c = 0; c < 4; ++c) st.psi[c][k] = outv[c];
    }
  }
}

void apply_pulse(SingleGridState& st, const RfPulse& pulse, const Addressing& a) {
  const auto u = grid_rotations(pulse, a);
  for (int j = 0; j < st.grid.n; ++j) {
    const Eigen::Matrix2cd& m = u[cell_side(st.grid.x(j), a.center)];
    const cplx a0 = st.psi[0][j], a1 = st.psi[1][j];
    st.psi[0][j] = m(0, 0) * a0 + m(0, 1) * a1;
    st.psi[1][j] = m(1, 0) * a0 + m(1, 1) * a1;
  }
}

const char* step_name(const Step& s) {
  struct V {
    const char* operator()(const PrepareStep&) const { return "prepare"; }
    const char* operator()(const RampStep&) const { return "ramp"; }
    const char* operator()(const HoldStep&) const { return "hold"; }
    const char* operator()(const PulseStep&) const { return "pulse"; }
    const char* operator()(const MeasureStep&) const { return "measure"; }
  };
  return std::visit(V{}, s);
}

const char* engine_name(Engine e) { return e == Engine::mode ? "mode" : "grid"; }

void Sequence::validate() const {
  if (steps.empty()) throw ValidationError("sequence has no steps");
  if (!std::holds_alternative<PrepareStep>(steps.front()))
    throw ValidationError(step_label(0, steps.front()) + ": the first step must be prepare");
  int sweeps = 0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const Step& s = steps[i];
    const std::string where = step_label(i, s);
    if (i > 0 && std::holds_alternative<PrepareStep>(s)) throw ValidationError(where + ": only one prepare step allowed");
    if (std::holds_alternative<MeasureStep>(s) && i + 1 != steps.size())
      throw ValidationError(where + ": measure must be the final step");
    if (const auto* h = std::get_if<HoldStep>(&s)) {
      if (!h->sweep && (!(h->t >= 0) || !std::isfinite(h->t))) throw ValidationError(where + ": hold time must be >= 0");
      if (h->sweep && ++sweeps > 1) throw ValidationError(where + ": at most one swept hold");
    }
    if (const auto* p = std::get_if<PulseStep>(&s)) {
      try {
        p->pulse.validate();
      } catch (const DomainError& e) {
        throw ValidationError(where + ": " + e.what());
      }
    }
    if (const auto* r = std::get_if<RampStep>(&s))
      if (r->ramp.empty()) throw ValidationError(where + ": ramp '" + r->name + "' has no knots");
  }
  if (!std::holds_alternative<MeasureStep>(steps.back()))
    throw ValidationError(step_label(steps.size() - 1, steps.back()) + ": sequence must end with measure");
  (void)initial_lattice();
}

LatticeParams Sequence::initial_lattice() const {
  if (initial) return *initial;
  for (const Step& s : steps)
    if (const auto* r = std::get_if<RampStep>(&s)) return r->ramp.first();
  throw ValidationError("prepare: no lattice given and no ramp to take it from");
}

int Sequence::pulse_count() const {
  return static_cast<int>(std::count_if(steps.begin(), steps.end(),
                                        [](const Step& s) { return std::holds_alternative<PulseStep>(s); }));
}

struct SequenceRunner::State {
  int atoms = 0;
  bool pair = false;
  // mode engine
  ModeState mode_pair{};
  int single_mode = 0;  // 1: a (L / e), 0: b (R / g)
  SpinAmplitudes single{};
  // grid engine
  std::optional<TwoParticleGridState> grid_pair;
  std::optional<SingleGridState> grid_single;
  int single_spin = 0;
  double clock = 0.0;
};

struct SequenceRunner::Compiled {
  InternalUnits units;
  std::vector<std::shared_ptr<const ModeRampEngine>> engine;  // in effect at each step
  std::vector<double> engine_time;
  std::vector<Eigen::Matrix4cd> ramp_u;
  std::vector<std::array<SpinAmplitudes, 2>> ramp_single;  // [mode][spin] phase factors
  std::vector<double> ramp_tau;
  std::vector<Addressing> addr;
  std::vector<LatticeParams> lattice;  // in effect after each step
  std::unique_ptr<PairPropagator> pair;
  std::unique_ptr<SinglePropagator> single;
  SpinOrbitals orbitals;
  std::array<SingleParticleSpectrum, 2> final_spectra;

  explicit Compiled(const Constants& c) : units(c) {}
};

SequenceRunner::~SequenceRunner() = default;
SequenceRunner::SequenceRunner(SequenceRunner&&) noexcept = default;

SequenceRunner::SequenceRunner(Sequence seq, RunSettings s) : seq_(std::move(seq)), set_(s) {
  seq_.validate();
  if (!(set_.g1d >= 0)) throw DomainError("run settings: g1d must be >= 0");
  if (!(set_.dt > 0)) throw DomainError("run settings: dt must be positive");
  const LatticeParams init = seq_.initial_lattice();
  grid_ = cell_grid(init, set_.n);
  c_ = std::make_unique<Compiled>(set_.constants);
  Compiled& c = *c_;
  const std::size_t ns = seq_.steps.size();
  c.engine.resize(ns);
  c.engine_time.assign(ns, 0.0);
  c.ramp_u.resize(ns);
  c.ramp_single.resize(ns);
  c.ramp_tau.assign(ns, 0.0);
  c.addr.resize(ns);
  c.lattice.resize(ns);

  std::shared_ptr<const ModeRampEngine> current;
  double current_time = 0.0;
  LatticeParams lattice = init;
  for (std::size_t i = 0; i < ns; ++i) {
    const Step& st = seq_.steps[i];
    if (const auto* r = std::get_if<RampStep>(&st)) {
      lattice = r->ramp.last();
      if (set_.engine == Engine::mode) {
        current = std::make_shared<ModeRampEngine>(r->ramp, grid_, set_.g1d, 101, set_.constants);
        current_time = r->ramp.end();
        c.ramp_u[i] = current->propagator(r->ramp.start(), r->ramp.duration(), set_.dt);
        for (int m = 0; m < 2; ++m)
          c.ramp_single[i][m] = current->propagate_single({1.0, 1.0}, m, r->ramp.start(), r->ramp.duration(), 0.0, set_.dt);
        c.ramp_tau[i] = c.units.internal_time(r->ramp.duration());
      }
    } else if (std::holds_alternative<HoldStep>(st) && set_.engine == Engine::mode && !current) {
      current = std::make_shared<ModeRampEngine>(RampSchedule::constant(lattice), grid_, set_.g1d, 2, set_.constants);
      current_time = 0.0;
    } else if (std::holds_alternative<PulseStep>(st)) {
      c.addr[i] = addressing(lattice, grid_, set_.constants);
    }
    c.engine[i] = current;
    c.engine_time[i] = current_time;
    c.lattice[i] = lattice;
  }

  if (set_.engine == Engine::grid) {
    c.pair = std::make_unique<PairPropagator>(grid_, set_.g1d, set_.constants);
    c.single = std::make_unique<SinglePropagator>(grid_, set_.constants);
    c.orbitals = prep_orbitals(init, grid_);
    c.final_spectra = {solve_stationary(lattice, Spin::zero, grid_, 4), solve_stationary(lattice, Spin::one, grid_, 4)};
  }
}

SequenceRunner::State SequenceRunner::prepare(SiteOccupancy occ) const {
  const auto& prep = std::get<PrepareStep>(seq_.steps.front());
  std::optional<Spin> q = prep.q_L, p = prep.p_R;
  if (occ == SiteOccupancy::single_left || occ == SiteOccupancy::empty) p.reset();
  if (occ == SiteOccupancy::single_right || occ == SiteOccupancy::empty) q.reset();
  State st;
  st.atoms = (q ? 1 : 0) + (p ? 1 : 0);
  st.pair = st.atoms == 2;
  if (st.atoms == 0) return st;
  if (set_.engine == Engine::mode) {
    if (st.pair) {
      st.mode_pair = basis_state(index(*q), index(*p));
    } else {
      st.single_mode = q ? 1 : 0;
      st.single = {0.0, 0.0};
      st.single[index(q ? *q : *p)] = 1.0;
    }
  } else {
    const Compiled& c = *c_;
    if (st.pair) {
      st.grid_pair = init_grid_state(grid_, c.orbitals, *q, *p);
    } else {
      const Spin s = q ? *q : *p;
      const std::vector<double>& o = q ? c.orbitals.left[index(s)] : c.orbitals.right[index(s)];
      SingleGridState g(grid_);
      for (int j = 0; j < grid_.n; ++j) g.psi[index(s)][j] = o[j];
      st.grid_single = std::move(g);
    }
  }
  return st;
}

void SequenceRunner::execute(State& st, std::size_t from, std::size_t to, double zeeman_hz, double hold) const {
  const Compiled& c = *c_;
  const double z = c.units.hz_to_energy(zeeman_hz);
  PropagationSettings ps;
  ps.dt = set_.dt;
  ps.order = set_.order;
  ps.exec = set_.exec;
  ps.zeeman_hz = zeeman_hz;
  for (std::size_t i = from; i < to; ++i) {
    const Step& step = seq_.steps[i];
    if (const auto* r = std::get_if<RampStep>(&step)) {
      st.clock += r->ramp.duration();
      if (st.atoms == 0) continue;
      if (set_.engine == Engine::mode) {
        const double tau = c.ramp_tau[i];
        if (st.pair) {
          Eigen::Vector4cd v(st.mode_pair[0], st.mode_pair[1], st.mode_pair[2], st.mode_pair[3]);
          v = c.ramp_u[i] * v;
          for (int k = 0; k < 4; ++k) st.mode_pair[k] = v(k) * std::polar(1.0, -z * (k / 2 + k % 2) * tau);
        } else {
          st.single[0] *= c.ramp_single[i][st.single_mode][0];
          st.single[1] *= c.ramp_single[i][st.single_mode][1] * std::polar(1.0, -z * tau);
        }
      } else if (st.pair) {
        c.pair->propagate(*st.grid_pair, r->ramp, r->ramp.start(), r->ramp.duration(), ps);
      } else {
        c.single->propagate(*st.grid_single, r->ramp, r->ramp.start(), r->ramp.duration(), ps);
      }
    } else if (const auto* h = std::get_if<HoldStep>(&step)) {
      const double t = h->sweep ? hold : h->t;
      if (!(t >= 0)) throw DomainError("hold time must be >= 0");
      st.clock += t;
      if (st.atoms == 0 || t == 0) continue;
      if (set_.engine == Engine::mode) {
        const ModeRampEngine& e = *c.engine[i];
        if (st.pair)
          st.mode_pair = e.propagate(st.mode_pair, c.engine_time[i], t, z, set_.dt);
        else
          st.single = e.propagate_single(st.single, st.single_mode, c.engine_time[i], t, z, set_.dt);
      } else {
        const RampSchedule still = RampSchedule::constant(c.lattice[i]);
        if (st.pair)
          c.pair->propagate(*st.grid_pair, still, 0.0, t, ps);
        else
          c.single->propagate(*st.grid_single, still, 0.0, t, ps);
      }
    } else if (const auto* p = std::get_if<PulseStep>(&step)) {
      if (st.atoms == 0) continue;
      const Addressing& a = c.addr[i];
      if (set_.engine == Engine::mode) {
        if (st.pair) {
          st.mode_pair = apply_pulse_to_pair(st.mode_pair, p->pulse, a);
        } else {
          const int m = st.single_mode;
          if (a.acts_on(p->pulse.target, m)) st.single = rf_rotation(st.single, resolved(p->pulse, a), a.shift(m));
        }
      } else if (st.pair) {
        apply_pulse_to_pair(*st.grid_pair, p->pulse, a);
      } else {
        apply_pulse(*st.grid_single, p->pulse, a);
      }
    }
  }
}

MeasurementRecord SequenceRunner::measure(const State& st) const {
  MeasurementRecord r;
  if (st.atoms == 0) {
    r.occupancy = "empty";
  } else if (set_.engine == Engine::mode) {
    r = st.pair ? measure_populations(st.mode_pair) : measure_populations(SingleModeState{st.single_mode, st.single});
  } else {
    const auto& sp = c_->final_spectra;
    r = st.pair ? measure_populations(*st.grid_pair, sp[0], sp[1]) : measure_populations(*st.grid_single, sp[0], sp[1]);
  }
  r.t = st.clock;
  return r;
}

MeasurementRecord SequenceRunner::run(double zeeman_hz, double hold, SiteOccupancy occupancy) const {
  State st = prepare(occupancy);
  execute(st, 1, seq_.steps.size(), zeeman_hz, hold);
  MeasurementRecord r = measure(st);
  r.hold = hold;
  r.zeeman_hz = zeeman_hz;
  r.occupancy = occupancy_name(occupancy);
  return r;
}

std::vector<MeasurementRecord> SequenceRunner::sweep(const std::vector<double>& holds, double zeeman_hz,
                                                     SiteOccupancy occupancy) const {
  for (double h : holds)
    if (!(h >= 0) || !std::isfinite(h)) throw DomainError("sweep: hold values must be finite and >= 0");
  std::size_t k = seq_.steps.size();
  for (std::size_t i = 0; i < seq_.steps.size(); ++i)
    if (const auto* h = std::get_if<HoldStep>(&seq_.steps[i]); h && h->sweep) k = i;
  std::vector<MeasurementRecord> out(holds.size());
  if (k == seq_.steps.size()) {
    for (std::size_t j = 0; j < holds.size(); ++j) out[j] = run(zeeman_hz, holds[j], occupancy);
    return out;
  }
  std::vector<std::size_t> order(holds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return holds[a] < holds[b]; });

  State st = prepare(occupancy);
  execute(st, 1, k, zeeman_hz, 0.0);
  double done = 0.0;
  for (std::size_t j : order) {
    execute(st, k, k + 1, zeeman_hz, holds[j] - done);
    done = holds[j];
    State tail = st;
    execute(tail, k + 1, seq_.steps.size(), zeeman_hz, holds[j]);
    MeasurementRecord r = measure(tail);
    r.hold = holds[j];
    r.zeeman_hz = zeeman_hz;
    r.occupancy = occupancy_name(occupancy);
    out[j] = std::move(r);
  }
  return out;
}

EnsembleResult run_ensemble(const SequenceRunner& r, const EnsembleSettings& e, const std::vector<double>& holds,
                            std::uint64_t seed, int jobs) {
  e.occupancy.validate();
  e.noise.validate();
  if (e.n_sites < 0 || e.n_shots < 1) throw DomainError("ensemble: need n_sites >= 0 and n_shots >= 1");
  EnsembleResult out;
  Rng occ_rng = make_rng(seed, 1);
  out.sites = sample_occupancy(e.occupancy, e.n_sites, occ_rng);
  FieldNoiseModel site_only = e.noise;
  site_only.shot_sigma_hz = 0.0;
  Rng site_rng = make_rng(seed, 2);
  out.site_hz = sample_field_noise(site_only, e.n_sites, site_rng).site_hz;
  out.points.resize(holds.size());

  const bool noiseless = e.noise.shot_sigma_hz == 0.0 && e.noise.gradient_sigma_hz == 0.0;
  if (noiseless) {
    // Identical members: one sweep per occupancy kind, weighted by its count.
    std::vector<std::vector<MeasurementRecord>> parts(holds.size());
    for (SiteOccupancy kind : {SiteOccupancy::paired, SiteOccupancy::single_left, SiteOccupancy::single_right}) {
      const auto count = std::count(out.sites.begin(), out.sites.end(), kind);
      if (count == 0) continue;
      std::vector<MeasurementRecord> recs = r.sweep(holds, 0.0, kind);
      for (std::size_t k = 0; k < holds.size(); ++k) {
        recs[k].atoms *= double(count);
        parts[k].push_back(recs[k]);
      }
    }
    for (std::size_t k = 0; k < holds.size(); ++k) {
      out.points[k] = combine(parts[k]);
      out.points[k].hold = holds[k];
    }
    return out;
  }

  const int threads = r.settings().engine == Engine::grid ? 1 : std::max(1, jobs);
  std::exception_ptr err;
  const long np = static_cast<long>(holds.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (long k = 0; k < np; ++k) {
    try {
      std::vector<MeasurementRecord> recs;
      for (int j = 0; j < e.n_shots; ++j) {
        Rng rng = make_rng(seed, 3, static_cast<std::uint64_t>(k) * e.n_shots + j);
        const double shot = sample_field_noise(FieldNoiseModel{e.noise.b0, e.noise.shot_sigma_hz, 0.0}, 0, rng).shot_hz;
        for (std::size_t i = 0; i < out.sites.size(); ++i) {
          if (out.sites[i] == SiteOccupancy::empty) continue;
          recs.push_back(r.run(shot + out.site_hz[i], holds[k], out.sites[i]));
        }
      }
      MeasurementRecord m = combine(recs);
      m.hold = holds[k];
      out.points[k] = std::move(m);
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return out;
}

}  // namespace dws
