#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "dws/pair_grid.hpp"
#include "dws/spectral.hpp"

namespace dws {

// Amplitudes over |q_e, p_g>: index 2*q + p, i.e. |0e0g>, |0e1g>, |1e0g>, |1e1g>.
using ModeState = std::array<cplx, 4>;

ModeState basis_state(int q_e, int p_g);

struct ModeModel {
  double eps_g = 0.0;
  double eps_e = 0.0;
  double u_eg = 0.0;              // exchange splitting used for evolution
  double u_eg_first_order = 0.0;  // 2 g int |phi_e|^2 |phi_g|^2
  double u_gg = 0.0;
  double u_ee = 0.0;
};

// First-order model with the physical contact strength from (a_s, f_y, f_z).
ModeModel build_mode_model(const SingleParticleSpectrum& s, const TransverseConfinement& t, double a_s,
                           const Constants& c = Constants{});
// First-order model for a given 1D contact strength.
ModeModel build_mode_model(const SingleParticleSpectrum& s, double g1d);

// Exact evolution for internal time t (hbar/E_R). `zeeman` adds a common-mode
// energy per atom in |1> (E_R).
ModeState evolve_mode_model(const ModeModel& m, const ModeState& psi, double t, double zeeman = 0.0);

// pi hbar / U_eg in internal time.
double swap_time(const ModeModel& m);

struct ExchangeDecomposition {
  cplx s, t0, tm, tp;  // singlet, T0, T- = |0e0g>, T+ = |1e1g>
  double residual = 0.0;

  double block_population() const { return std::norm(s) + std::norm(t0); }
  // Normalized oscillation amplitude 2|a_S||a_T0| / (|a_S|^2 + |a_T0|^2).
  double exchange_amplitude() const;
};

ExchangeDecomposition singlet_triplet_decompose(const ModeState& psi);

// Projections onto the symmetrized |q_e, p_g> states built from the lowest
// two modes of the spin-resolved spectra.
ModeState mode_amplitudes(const TwoParticleGridState& st, const SingleParticleSpectrum& s0,
                          const SingleParticleSpectrum& s1, Exec exec = Exec::parallel);
ExchangeDecomposition singlet_triplet_decompose(const TwoParticleGridState& st, const SingleParticleSpectrum& s0,
                                                const SingleParticleSpectrum& s1, Exec exec = Exec::parallel);

// Per-atom populations by (band, spin); band 0 = g, 1 = e, 2 = everything else.
struct BandSpinPopulations {
  std::array<std::array<double, 2>, 3> p{};
  double total() const;
};

BandSpinPopulations one_body_populations(const TwoParticleGridState& st, const SingleParticleSpectrum& s0,
                                         const SingleParticleSpectrum& s1, Exec exec = Exec::parallel);
BandSpinPopulations one_body_populations(const SingleGridState& st, const SingleParticleSpectrum& s0,
                                         const SingleParticleSpectrum& s1);
BandSpinPopulations one_body_populations(const ModeState& psi);

struct TrajectoryPoint {
  double t = 0.0;  // s
  BandSpinPopulations pops;
  ExchangeDecomposition dec;
  double norm = 1.0;
};

void write_trajectory_csv(std::ostream& os, const std::vector<TrajectoryPoint>& pts);

}  // namespace dws
