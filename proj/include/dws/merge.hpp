#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "dws/mode_model.hpp"
#include "dws/pair_grid.hpp"
#include "dws/ramp.hpp"

namespace dws {

// Four-level model along a ramp. Each atom occupies an instantaneous
// eigenmode of its own spin's potential: mode a continues the left well
// (upper state, ending as e) and mode b the right well (ending as g).
// Amplitudes are over |q_a, p_b>, index 2q + p, which at the ramp end is the
// |q_e, p_g> basis of ModeState. Vibrational transitions are neglected;
// contact terms are scaled so the end point reproduces the dressed U_eg.
class ModeRampEngine {
 public:
  ModeRampEngine(const RampSchedule& ramp, const Grid& grid, double g1d, int samples = 101,
                 const Constants& c = Constants{});

  // Evolves over [t0, t0 + duration] (s). `zeeman` is the common-mode |1>
  // shift in E_R.
  ModeState propagate(const ModeState& psi, double t0, double duration, double zeeman = 0.0,
                      double dt = 0.5e-6) const;

  // Diagonal of the |00>, |01>, |10>, |11> energies and the exchange coupling at t (E_R).
  struct Terms {
    std::array<double, 4> diag{};
    double coupling = 0.0;
    std::array<std::array<double, 2>, 2> single{};  // [mode b=0, a=1][spin]
  };
  Terms terms(double t) const;

  // Zeeman-free propagator on the pair basis; common-mode shifts commute with
  // it and enter as exp(-i z n_1 t).
  Eigen::Matrix4cd propagator(double t0, double duration, double dt = 0.5e-6) const;

  // One atom in mode b (0) or a (1), spin amplitudes (|0>, |1>).
  std::array<cplx, 2> propagate_single(const std::array<cplx, 2>& spin, int mode, double t0, double duration,
                                       double zeeman = 0.0, double dt = 0.5e-6) const;

  const ModeModel& final_model() const { return final_; }
  const SingleParticleSpectrum& final_spectrum() const { return final_spectrum_; }
  double kappa() const { return kappa_; }
  const RampSchedule& ramp() const { return ramp_; }

 private:
  RampSchedule ramp_;
  InternalUnits units_;
  double t_begin_ = 0.0, h_ = 0.0;
  std::array<std::vector<double>, 9> samples_;  // four diagonals, coupling, single-mode energies
  ModeModel final_;
  SingleParticleSpectrum final_spectrum_;
  double kappa_ = 1.0;
};

struct AdiabaticityMetrics {
  double vibrational_fidelity = 0.0;
  double exchange_amplitude = 0.0;
  ExchangeDecomposition decomposition;
  BandSpinPopulations populations;
  PropagationReport report;
};

// Grid propagation of |q_L, p_R> through the ramp, analysed in the final
// well's g/e modes. vibrational_fidelity = min(2 p_e, 2 p_g) with p the
// per-atom band populations summed over spin.
AdiabaticityMetrics adiabaticity_metrics(const RampSchedule& ramp, double dt, double g1d, int n = 128,
                                         Spin q_L = Spin::zero, Spin p_R = Spin::one,
                                         Exec exec = Exec::parallel, const Constants& c = Constants{});

// Single-atom band transfer through the ramp: fraction of a left-well atom
// ending in e and of a right-well atom ending in g, per spin.
struct TransferFractions {
  std::array<double, 2> left_to_e{};
  std::array<double, 2> right_to_g{};
};
TransferFractions transfer_fractions(const RampSchedule& ramp, double dt = 0.5e-6, int n = 128,
                                     const Constants& c = Constants{});

}  // namespace dws
