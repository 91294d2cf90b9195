#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dws/grid.hpp"
#include "dws/superlattice.hpp"
#include "dws/units.hpp"

namespace dws {

struct Orbital {
  Grid grid;
  std::vector<double> amp;
};

struct SingleParticleSpectrum {
  Grid grid;
  std::vector<double> potential;
  std::vector<double> energies;
  std::vector<std::vector<double>> states;  // sum |phi|^2 dx = 1
  std::vector<std::string> labels;

  std::size_t size() const { return energies.size(); }
  Orbital orbital(std::size_t i) const { return Orbital{grid, states.at(i)}; }
};

// Dense one-particle Hamiltonian on the grid (interior points for a hard wall).
Eigen::MatrixXd single_particle_hamiltonian(const std::vector<double>& potential, const Grid& grid);

SingleParticleSpectrum solve_stationary(const LatticeParams& p, Spin spin, const Grid& grid, int n_states);
SingleParticleSpectrum solve_stationary(const std::vector<double>& potential, const Grid& grid, int n_states);

// Localized lower-pair orbitals of a double well: eigenstates when already
// localized, otherwise the eigenvectors of x within span{phi_0, phi_1}.
struct LocalizedPair {
  std::vector<double> left, right;
};
LocalizedPair localized_pair(const SingleParticleSpectrum& s);

struct BlochBands {
  std::vector<double> q;                    // k_R units, [-1, 1)
  std::vector<std::vector<double>> energy;  // [band][iq], E_R
};

BlochBands bloch_bands(const LatticeParams& p, Spin spin, int n_bands, int n_q);

struct VibrationalFrequencies {
  double f_x = 0.0, f_y = 0.0, f_z = 0.0;
};

VibrationalFrequencies vibrational_frequencies(const LatticeParams& p, Spin spin,
                                               const Constants& c = Constants{}, int n = 256);

struct TransverseConfinement {
  double f_y = 50e3, f_z = 60e3;
};

// eta_y * eta_z in k_R^2.
double transverse_overlap(const TransverseConfinement& t, const Constants& c = Constants{});
// 1D contact strength (4 pi hbar^2 a_s / m) eta_y eta_z in E_R / k_R.
double contact_strength_1d(double a_s, const TransverseConfinement& t, const Constants& c = Constants{});
// Integral of |a|^2 |b|^2 dx, k_R units.
double contact_overlap(const Orbital& a, const Orbital& b);

// (8 pi hbar^2 a_s/m) * int |a|^2|b|^2 * eta_y eta_z, in E_R.
double interaction_integral(const Orbital& a, const Orbital& b, const TransverseConfinement& t, double a_s,
                            const Constants& c = Constants{});
// Same-mode diagnostic with prefactor 4 pi.
double same_mode_interaction(const Orbital& a, const TransverseConfinement& t, double a_s,
                             const Constants& c = Constants{});

struct BandPopulations {
  std::vector<double> populations;
  double higher = 0.0;
};

BandPopulations band_projection(std::span<const cplx> psi, const SingleParticleSpectrum& s);
BandPopulations band_projection(std::span<const double> psi, const SingleParticleSpectrum& s);

}  // namespace dws
