#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>

#include "dws/kernels.hpp"
#include "dws/ramp.hpp"
#include "dws/spectral.hpp"
#include "dws/units.hpp"

namespace dws {

// psi(x1, s1; x2, s2) stored per spin pair, component 2*s1 + s2, row-major in
// (x1, x2); normalization sum |psi|^2 dx^2 = 1.
struct TwoParticleGridState {
  Grid grid;
  std::array<cvec, 4> psi;

  explicit TwoParticleGridState(const Grid& g = Grid{});
  double norm() const;
  // max |psi_{ab}(i, j) - psi_{ba}(j, i)|, scaled to continuum amplitude
  double symmetry_violation() const;
  bool active(int c) const;
};

// Single atom with a two-level spin: psi[s](x).
struct SingleGridState {
  Grid grid;
  std::array<cvec, 2> psi;

  explicit SingleGridState(const Grid& g = Grid{});
  double norm() const;
};

// L and R orbitals of the preparation configuration, per spin.
struct SpinOrbitals {
  std::array<std::vector<double>, 2> left, right;
};
SpinOrbitals prep_orbitals(const LatticeParams& p, const Grid& g);

// Symmetrized product of (a, sa) and (b, sb), normalized.
TwoParticleGridState symmetrized_product(const Grid& g, const std::vector<double>& a, Spin sa,
                                         const std::vector<double>& b, Spin sb);
TwoParticleGridState init_grid_state(const Grid& g, const SpinOrbitals& orb, Spin q_L, Spin p_R);

struct PropagationSettings {
  double dt = 0.5e-6;       // s
  int order = 4;            // 2: Strang, 4: triple-jump composition of Strang steps
  Exec exec = Exec::parallel;
  double zeeman_hz = 0.0;   // common-mode |1> energy shift
  int observe_every = 0;    // steps between observer calls, 0 = start and end only
  bool check_stability = true;
};

struct PropagationReport {
  int steps = 0;
  double dt = 0.0;          // s, after rounding to an integer step count
  double norm_drift = 0.0;
  double symmetry_violation = 0.0;
};

using PairObserver = std::function<void(double t, const TwoParticleGridState&)>;
using SingleObserver = std::function<void(double t, const SingleGridState&)>;

// Throws StabilityError when (dt * hbar omega_max)^2 >= 0.1 on the ramp window.
void check_time_step(const RampSchedule& ramp, double t0, double duration, double dt, const InternalUnits& u);

class PairPropagator {
 public:
  PairPropagator(const Grid& grid, double g1d, const Constants& c = Constants{});

  // Evolves `state` over [t0, t0 + duration] (s) under the ramp; the ramp is
  // clamped outside its knot range. Norm is never renormalized.
  PropagationReport propagate(TwoParticleGridState& state, const RampSchedule& ramp, double t0, double duration,
                              const PropagationSettings& s, const PairObserver& obs = {});

  const Grid& grid() const { return grid_; }
  double g1d() const { return g1d_; }

 private:
  const ContactKineticBlocks::Phases& phases_for(double tau);

  Grid grid_;
  double g1d_;
  InternalUnits units_;
  ContactKineticBlocks blocks_;
  Fft2 fft_;
  std::map<double, ContactKineticBlocks::Phases> phase_cache_;
};

class SinglePropagator {
 public:
  explicit SinglePropagator(const Grid& grid, const Constants& c = Constants{});
  PropagationReport propagate(SingleGridState& state, const RampSchedule& ramp, double t0, double duration,
                              const PropagationSettings& s, const SingleObserver& obs = {});

 private:
  Grid grid_;
  InternalUnits units_;
  Fft1 fft_;
  std::vector<double> k2_;
};

// Convenience wrapper over PairPropagator.
PropagationReport propagate_grid(TwoParticleGridState& state, const RampSchedule& ramp, double dt, double g1d,
                                 const PairObserver& obs = {}, const Constants& c = Constants{});

// Yoshida triple-jump weights (order 4) or a single Strang step (order 2).
std::vector<double> composition_weights(int order);

}  // namespace dws
