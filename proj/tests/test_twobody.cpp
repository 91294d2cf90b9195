#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "dws/error.hpp"
#include "dws/exchange.hpp"
#include "dws/kernels.hpp"
#include "dws/levels.hpp"
#include "dws/merge.hpp"
#include "dws/mode_model.hpp"
#include "dws/pair_grid.hpp"
#include "support.hpp"

using namespace dws;
using std::numbers::pi;

namespace {

const cplx I(0.0, 1.0);

double amp_error(const ModeState& a, const ModeState& b) {
  double w = 0.0;
  for (int k = 0; k < 4; ++k) w = std::max(w, std::abs(a[k] - b[k]));
  return w;
}

ModeModel toy_model() {
  ModeModel m;
  m.eps_g = -30.0;
  m.eps_e = -20.0;
  m.u_eg = 1.0177;
  return m;
}

// exp(-i H t) of the 4x4 pair Hamiltonian, diagonalized independently.
ModeState oracle_evolve(const ModeModel& m, const ModeState& psi, double t, double z) {
  const double e0 = m.eps_g + m.eps_e, u = m.u_eg;
  Eigen::Matrix4d h = Eigen::Matrix4d::Zero();
  h(0, 0) = e0 + u;
  h(3, 3) = e0 + u + 2 * z;
  h(1, 1) = h(2, 2) = e0 + z + 0.5 * u;
  h(1, 2) = h(2, 1) = 0.5 * u;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(h);
  Eigen::Vector4cd v;
  for (int k = 0; k < 4; ++k) v(k) = psi[k];
  Eigen::Vector4cd ph;
  for (int k = 0; k < 4; ++k) ph(k) = std::polar(1.0, -es.eigenvalues()(k) * t);
  const Eigen::Vector4cd out = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().transpose() * v;
  return {out(0), out(1), out(2), out(3)};
}

cvec random_comp(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  cvec v(static_cast<std::size_t>(n) * n);
  for (auto& x : v) x = cplx(d(rng), d(rng));
  return v;
}

}  // namespace

TEST_SUITE("twobody") {

TEST_CASE("truth table at half and full swap time") {
  const ModeModel m = toy_model();
  const double tsw = swap_time(m);
  CHECK(tsw == doctest::Approx(pi / m.u_eg));
  for (int k = 0; k < 4; ++k) {
    const ModeState in = basis_state(k / 2, k % 2);
    for (double frac : {0.5, 1.0}) {
      const double t = frac * tsw;
      const double a = m.u_eg * t / 2.0;
      ModeState want{};
      if (k == 0 || k == 3) want[k] = std::polar(1.0, -a);
      if (k == 1) {
        want[1] = std::cos(a);
        want[2] = -I * std::sin(a);
      }
      if (k == 2) {
        want[1] = -I * std::sin(a);
        want[2] = std::cos(a);
      }
      // global factor exp(-i U t / 2) and the single-particle energies
      const cplx g = std::polar(1.0, -(m.eps_g + m.eps_e + 0.5 * m.u_eg) * t);
      for (auto& w : want) w *= g;
      CHECK(amp_error(evolve_mode_model(m, in, t), want) < 1e-9);
    }
  }
}

TEST_CASE("mode evolution matches the diagonalized Hamiltonian") {
  const ModeModel m = toy_model();
  std::mt19937_64 rng(7);
  std::normal_distribution<double> d;
  for (int trial = 0; trial < 5; ++trial) {
    ModeState psi;
    double nn = 0.0;
    for (auto& x : psi) {
      x = cplx(d(rng), d(rng));
      nn += std::norm(x);
    }
    for (auto& x : psi) x /= std::sqrt(nn);
    const double t = 0.7 + trial, z = 0.3 * trial;
    CHECK(amp_error(evolve_mode_model(m, psi, t, z), oracle_evolve(m, psi, t, z)) < 1e-12);
  }
}

TEST_CASE("stationary and invalid inputs") {
  const ModeModel m = toy_model();
  for (double t : {0.1, 3.0, 17.0}) {
    const ModeState s = evolve_mode_model(m, basis_state(1, 1), t);
    CHECK(std::norm(s[3]) == doctest::Approx(1.0).epsilon(1e-14));
    ModeState singlet{};
    singlet[1] = -1.0 / std::sqrt(2.0);
    singlet[2] = 1.0 / std::sqrt(2.0);
    const auto pops = one_body_populations(evolve_mode_model(m, singlet, t));
    CHECK(pops.p[1][0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(pops.p[0][1] == doctest::Approx(0.25).epsilon(1e-12));
  }
  ModeState bad{};
  bad[0] = 2.0;
  CHECK_THROWS_AS(evolve_mode_model(m, bad, 1.0), DomainError);
  CHECK_THROWS_AS(basis_state(2, 0), DomainError);
  ModeModel zero = m;
  zero.u_eg = 0.0;
  CHECK_THROWS_AS(swap_time(zero), DomainError);
}

TEST_CASE("singlet and triplet decomposition") {
  const auto d = singlet_triplet_decompose(basis_state(0, 1));
  CHECK(d.s.real() == doctest::Approx(-1.0 / std::sqrt(2.0)));
  CHECK(d.t0.real() == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(std::abs(d.tm) == 0.0);
  CHECK(std::abs(d.tp) == 0.0);
  CHECK(d.exchange_amplitude() == doctest::Approx(1.0));
  CHECK(singlet_triplet_decompose(basis_state(0, 0)).tm == cplx(1.0));
  CHECK(singlet_triplet_decompose(basis_state(1, 1)).tp == cplx(1.0));
  const ModeState psi{cplx(0.1, 0.2), cplx(0.3, -0.4), cplx(-0.5, 0.1), cplx(0.2, 0.3)};
  const auto e = singlet_triplet_decompose(psi);
  double n = 0.0;
  for (auto x : psi) n += std::norm(x);
  CHECK(std::norm(e.s) + std::norm(e.t0) + std::norm(e.tm) + std::norm(e.tp) == doctest::Approx(n));
}

TEST_CASE("zero scattering length means no exchange") {
  const auto& cal = testing::calibrated();
  const ModeModel m = build_mode_model(cal.spectrum, TransverseConfinement{}, 0.0);
  CHECK(m.u_eg == 0.0);
  const ModeState out = evolve_mode_model(m, basis_state(0, 1), 50.0);
  CHECK(std::norm(out[1]) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("first-order model coupling") {
  const auto& cal = testing::calibrated();
  const ModeModel m = build_mode_model(cal.spectrum, 0.8);
  CHECK(m.u_eg_first_order == doctest::Approx(2 * 0.8 * contact_overlap(cal.spectrum.orbital(0), cal.spectrum.orbital(1))));
  CHECK(m.eps_g == doctest::Approx(cal.spectrum.energies[0]));
  CHECK(m.eps_e == doctest::Approx(cal.spectrum.energies[1]));
}

TEST_CASE("dressed exchange limits") {
  const auto& cal = testing::calibrated();
  ExchangeSolver solver(cal.spectrum);
  CHECK(std::abs(solver.solve(0.0).u) < 1e-10);
  const DressedExchange weak = solver.solve(1e-3);
  CHECK(weak.u == doctest::Approx(weak.u_first_order).epsilon(1e-3));
  const DressedExchange strong = solver.solve(cal.g1d);
  CHECK(strong.u < strong.u_first_order);
  CHECK(strong.u == doctest::Approx(cal.u_target).epsilon(1e-8));
  CHECK_THROWS_AS(calibrate_g1d(cal.spectrum, -1.0), DomainError);
}

TEST_CASE("symmetrized products") {
  const auto& cal = testing::calibrated();
  const Grid& g = cal.grid;
  const auto& s = cal.spectrum;
  const auto a = symmetrized_product(g, s.states[0], Spin::zero, s.states[1], Spin::one);
  const auto b = symmetrized_product(g, s.states[1], Spin::one, s.states[0], Spin::zero);
  CHECK(a.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a.symmetry_violation() < 1e-12);
  double diff = 0.0;
  for (int c = 0; c < 4; ++c)
    for (std::size_t k = 0; k < a.psi[c].size(); ++k) diff = std::max(diff, std::abs(a.psi[c][k] - b.psi[c][k]));
  CHECK(diff < 1e-14);
  CHECK_FALSE(a.active(0));
  CHECK(a.active(1));
  // both atoms in the same mode and spin
  const auto same = symmetrized_product(g, s.states[0], Spin::zero, s.states[0], Spin::zero);
  CHECK(same.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(symmetrized_product(g, std::vector<double>(3), Spin::zero, s.states[0], Spin::zero), DomainError);
}

TEST_CASE("prepared grid state is localized and symmetric") {
  const LatticeParams p = defaults::prep_params(defaults::dtheta_spin());
  const Grid g = cell_grid(p, 128);
  const auto orb = prep_orbitals(p, g);
  const auto st = init_grid_state(g, orb, Spin::zero, Spin::one);
  CHECK(st.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(st.symmetry_violation() < 1e-12);
  CHECK(st.active(1));
  CHECK(st.active(2));
  CHECK_FALSE(st.active(0));
}

TEST_CASE("asymmetric state and oversized step are rejected") {
  const auto& cal = testing::calibrated();
  TwoParticleGridState st(cal.grid);
  st.psi[1][5] = 1.0;
  PairPropagator prop(cal.grid, cal.g1d);
  PropagationSettings s;
  CHECK_THROWS_AS(prop.propagate(st, RampSchedule::constant(defaults::final_params()), 0.0, 1e-6, s), DomainError);
  CHECK_THROWS_AS(check_time_step(defaults::merge_ramp(500e-6), 0.0, 500e-6, 20e-6, InternalUnits{}), StabilityError);
  CHECK_NOTHROW(check_time_step(defaults::merge_ramp(500e-6), 0.0, 500e-6, 0.5e-6, InternalUnits{}));
  CHECK_THROWS_AS(composition_weights(3), DomainError);
}

TEST_CASE("composition weights") {
  const auto w2 = composition_weights(2);
  REQUIRE(w2.size() == 1);
  CHECK(w2[0] == 1.0);
  const auto w4 = composition_weights(4);
  REQUIRE(w4.size() == 3);
  CHECK(w4[0] + w4[1] + w4[2] == doctest::Approx(1.0));
  CHECK(std::pow(w4[0], 3) + std::pow(w4[1], 3) + std::pow(w4[2], 3) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("without interaction the pair evolves as a product") {
  const RampSchedule ramp = defaults::merge_ramp(500e-6);
  const Grid g = cell_grid(ramp.first(), 64);
  const auto orb = prep_orbitals(ramp.first(), g);
  auto pair = init_grid_state(g, orb, Spin::zero, Spin::one);
  PairPropagator pp(g, 0.0);
  PropagationSettings s;
  pp.propagate(pair, ramp, 0.0, 150e-6, s);

  SingleGridState a(g), b(g);
  for (int j = 0; j < g.n; ++j) {
    a.psi[0][j] = orb.left[0][j];
    b.psi[1][j] = orb.right[1][j];
  }
  SinglePropagator sp(g);
  sp.propagate(a, ramp, 0.0, 150e-6, s);
  sp.propagate(b, ramp, 0.0, 150e-6, s);
  double worst = 0.0;
  const double r = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j) {
      const std::size_t k = static_cast<std::size_t>(i) * g.n + j;
      worst = std::max(worst, std::abs(pair.psi[1][k] - r * a.psi[0][i] * b.psi[1][j]));
      worst = std::max(worst, std::abs(pair.psi[2][k] - r * b.psi[1][i] * a.psi[0][j]));
    }
  CHECK(worst < 1e-9);
}

TEST_CASE("grid propagation conserves norm and exchange symmetry") {
  const auto& cal = testing::calibrated();
  const RampSchedule ramp = defaults::merge_ramp(500e-6);
  const auto orb = prep_orbitals(ramp.first(), cal.grid);
  auto st = init_grid_state(cal.grid, orb, Spin::zero, Spin::one);
  PairPropagator pp(cal.grid, cal.g1d);
  PropagationSettings s;
  s.zeeman_hz = 1234.0;
  const auto rep = pp.propagate(st, ramp, 250e-6, 60e-6, s);
  CHECK(rep.steps == 120);
  CHECK(rep.norm_drift < 1e-10);
  CHECK(rep.symmetry_violation < 1e-10);
  CHECK(std::abs(st.norm() - 1.0) < 1e-10);
}

TEST_CASE("singlet and polarized pairs are stationary in the merged well") {
  const RampSchedule hold = RampSchedule::constant(defaults::final_params());
  const Grid g = cell_grid(defaults::prep_params(0.0), 64);
  const auto s = solve_stationary(defaults::final_params(), Spin::zero, g, 2);
  const double gc = calibrate_g1d(s, testing::calibrated().u_target);
  PairPropagator pp(g, gc);
  PropagationSettings set;
  set.observe_every = 57;

  auto a = symmetrized_product(g, s.states[1], Spin::one, s.states[0], Spin::zero);
  auto b = symmetrized_product(g, s.states[1], Spin::zero, s.states[0], Spin::one);
  TwoParticleGridState singlet(g);
  for (int c = 0; c < 4; ++c) {
    singlet.psi[c].resize(a.psi[c].size());
    for (std::size_t k = 0; k < a.psi[c].size(); ++k) singlet.psi[c][k] = (a.psi[c][k] - b.psi[c][k]) / std::sqrt(2.0);
  }
  const auto p0 = one_body_populations(singlet, s, s);
  double worst = 0.0;
  pp.propagate(singlet, hold, 0.0, 285e-6, set, [&](double, const TwoParticleGridState& st) {
    const auto p = one_body_populations(st, s, s);
    for (int band = 0; band < 3; ++band)
      for (int sp = 0; sp < 2; ++sp) worst = std::max(worst, std::abs(p.p[band][sp] - p0.p[band][sp]));
  });
  CHECK(worst < 1e-6);

  auto up = symmetrized_product(g, s.states[1], Spin::zero, s.states[0], Spin::zero);
  double drift = 0.0;
  pp.propagate(up, hold, 0.0, 285e-6, set, [&](double, const TwoParticleGridState& st) {
    const auto p = one_body_populations(st, s, s);
    drift = std::max(drift, std::abs(p.p[0][1] + p.p[1][1] + p.p[2][1]));
  });
  CHECK(drift < 1e-12);
}

TEST_CASE("contact-kinetic kernels agree with the reference") {
  const Grid g{0.0, pi, 64, Boundary::periodic};
  std::mt19937_64 rng(11);
  const ContactKineticBlocks blocks(g, 1.3);
  const ContactKineticReference ref(g, 1.3);
  const auto ph = blocks.phases(0.01);
  cvec a = random_comp(64, rng), b = a, c = a;
  cplx* pa[] = {a.data()};
  cplx* pb[] = {b.data()};
  blocks.apply(pa, ph, Exec::parallel);
  blocks.apply(pb, ph, Exec::serial);
  ref.apply(c.data(), 0.01);
  double d1 = 0.0, d2 = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    d1 = std::max(d1, std::abs(a[k] - b[k]));
    d2 = std::max(d2, std::abs(a[k] - c[k]));
  }
  CHECK(d1 < 1e-13);
  CHECK(d2 < 1e-11);

  // no contact: plain kinetic phases
  const ContactKineticBlocks free(g, 0.0);
  const auto k = fft_wavenumbers(g);
  cvec f = random_comp(64, rng), f0 = f;
  cplx* pf[] = {f.data()};
  free.apply(pf, free.phases(0.02), Exec::parallel);
  double d3 = 0.0;
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j) {
      const std::size_t q = static_cast<std::size_t>(i) * 64 + j;
      d3 = std::max(d3, std::abs(f[q] - f0[q] * std::polar(1.0, -0.02 * (k[i] * k[i] + k[j] * k[j]))));
    }
  CHECK(d3 < 1e-12);
}

TEST_CASE("separable phase and mode weight kernels") {
  std::mt19937_64 rng(3);
  const int n = 64;
  cvec psi = random_comp(n, rng), psi2 = psi;
  std::vector<cplx> a(n), b(n);
  std::vector<double> phi(n);
  std::uniform_real_distribution<double> u(0, 2 * pi);
  for (int i = 0; i < n; ++i) {
    a[i] = std::polar(1.0, u(rng));
    b[i] = std::polar(1.0, u(rng));
    phi[i] = std::sin(0.1 * i);
  }
  apply_separable_phase(psi.data(), a.data(), b.data(), n, Exec::parallel);
  apply_separable_phase(psi2.data(), a.data(), b.data(), n, Exec::serial);
  double d = 0.0;
  for (std::size_t k = 0; k < psi.size(); ++k) d = std::max(d, std::abs(psi[k] - psi2[k]));
  CHECK(d == 0.0);
  const auto wp = mode_weight(psi.data(), phi.data(), n, 0.05, Exec::parallel);
  const auto ws = mode_weight(psi.data(), phi.data(), n, 0.05, Exec::serial);
  CHECK(wp.first == doctest::Approx(ws.first).epsilon(1e-13));
  CHECK(wp.second == doctest::Approx(ws.second).epsilon(1e-13));
}

TEST_CASE("ramp engine end point and unitarity") {
  const auto& cal = testing::calibrated();
  const RampSchedule ramp = defaults::merge_ramp(500e-6);
  const ModeRampEngine eng(ramp, cal.grid, cal.g1d);
  CHECK(eng.final_model().u_eg == doctest::Approx(cal.u_target).epsilon(1e-8));
  const Eigen::Matrix4cd u = eng.propagator(0.0, 500e-6);
  CHECK((u.adjoint() * u - Eigen::Matrix4cd::Identity()).norm() < 1e-10);
  // common-mode shifts only add phases per |1> atom
  const ModeState in = basis_state(0, 1);
  const ModeState z0 = eng.propagate(in, 0.0, 500e-6, 0.0);
  const ModeState z1 = eng.propagate(in, 0.0, 500e-6, 0.4);
  const double t = InternalUnits{}.internal_time(500e-6);
  for (int k = 1; k <= 2; ++k) CHECK(std::abs(z1[k] - z0[k] * std::polar(1.0, -0.4 * t)) < 1e-9);
  CHECK_THROWS_AS(ModeRampEngine(RampSchedule{}, cal.grid, cal.g1d), DomainError);
}

TEST_CASE("pair levels along a spin-independent ramp") {
  const auto& cal = testing::calibrated();
  const RampSchedule ramp = defaults::merge_ramp(500e-6, 0.0);
  std::vector<double> times;
  for (int k = 0; k <= 20; ++k) times.push_back(25e-6 * k);
  LevelSettings s;
  s.g1d = cal.g1d;
  s.with_interaction = false;
  const LevelTable free = eigenenergies_along_ramp(ramp, times, s);
  REQUIRE(free.labels.size() == 4);
  for (const auto& row : free.energy) CHECK(std::abs(row[1] - row[2]) < 1e-9);
  s.with_interaction = true;
  const LevelTable lv = eigenenergies_along_ramp(ramp, times, s);
  std::vector<double> last = lv.energy.back();
  std::sort(last.begin(), last.end());
  const double u = dressed_exchange(cal.spectrum, cal.g1d).u;
  CHECK(std::abs(last[0] - last[1]) > 0.9 * u);
  CHECK(last[3] - last[0] == doctest::Approx(u).epsilon(1e-3));
  CHECK_THROWS_AS(eigenenergies_along_ramp(ramp, {1.0}, s), DomainError);
}

TEST_CASE("a sudden merge is not adiabatic") {
  const auto& cal = testing::calibrated();
  const auto m = adiabaticity_metrics(defaults::merge_ramp(2e-6), 0.05e-6, cal.g1d, 64);
  CHECK(m.vibrational_fidelity < 0.8);
  CHECK(m.report.norm_drift < 1e-8);
}

}  // TEST_SUITE
