#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "dws/ensemble.hpp"
#include "dws/merge.hpp"

namespace dws {

enum class PulseTarget { L, R, both, e, g };
const char* target_name(PulseTarget t);

struct RfPulse {
  double rabi_hz = 4e3;
  double detuning_hz = 0.0;  // from the uniform-field resonance
  bool resonant = false;     // detuning taken from the target's local shift
  double duration = 0.0;     // s
  double phase = 0.0;        // rad
  PulseTarget target = PulseTarget::both;

  double area() const;  // 2 pi rabi duration
  void validate() const;
  static RfPulse with_area(PulseTarget target, double rabi_hz, double area, double phase = 0.0,
                           bool resonant = true);
};

using SpinAmplitudes = std::array<cplx, 2>;  // (|0>, |1>)

// exp(-i [area/2 (cos phi sx + sin phi sy) - 2 pi delta duration/2 sz]) with
// delta = detuning - local_shift. Basis (|0>, |1>).
Eigen::Matrix2cd rf_unitary(const RfPulse& p, double local_shift_hz);
SpinAmplitudes rf_rotation(const SpinAmplitudes& s, const RfPulse& p, double local_shift_hz);

// Spin-resonance offsets of a lattice configuration (Hz). Sites when the
// lattice is a double well, band modes otherwise.
struct Addressing {
  bool double_well = true;
  double center = 0.0;
  double shift_L = 0.0, shift_R = 0.0;
  double shift_e = 0.0, shift_g = 0.0;
  // Offset seen by the atom in mode a (L / e) or b (R / g).
  double shift(int mode) const;
  // Detuning used for `resonant` pulses.
  double resonance(PulseTarget t) const;
  // Whether a target acts on mode a (1) or b (0); throws on a regime mismatch.
  bool acts_on(PulseTarget t, int mode) const;
};

Addressing addressing(const LatticeParams& p, const Grid& grid, const Constants& c = Constants{});

// Pair in the |q_a, p_b> basis.
ModeState apply_pulse_to_pair(const ModeState& psi, const RfPulse& p, const Addressing& a);
// Each particle is rotated according to the half of the cell it sits in.
void apply_pulse_to_pair(TwoParticleGridState& st, const RfPulse& p, const Addressing& a);
void apply_pulse(SingleGridState& st, const RfPulse& p, const Addressing& a);

struct PrepareStep {
  std::optional<Spin> q_L, p_R;  // empty = no atom in that well
};
struct RampStep {
  std::string name;
  RampSchedule ramp;
};
struct HoldStep {
  double t = 0.0;  // s
  bool sweep = false;
};
struct PulseStep {
  RfPulse pulse;
};
struct MeasureStep {};

using Step = std::variant<PrepareStep, RampStep, HoldStep, PulseStep, MeasureStep>;
const char* step_name(const Step& s);

struct Sequence {
  std::vector<Step> steps;
  // Lattice at preparation; defaults to the first knot of the first ramp.
  std::optional<LatticeParams> initial;

  // Throws ValidationError naming the offending step.
  void validate() const;
  LatticeParams initial_lattice() const;
  int pulse_count() const;
};

enum class Engine { mode, grid };
const char* engine_name(Engine e);

struct RunSettings {
  Engine engine = Engine::mode;
  int n = 128;
  double dt = 0.5e-6;
  int order = 4;
  double g1d = 0.0;
  Exec exec = Exec::parallel;
  Constants constants;
};

// Compiles a sequence once (mode engines, propagators, addressing) and runs
// it for given common-mode field offsets and hold values.
class SequenceRunner {
 public:
  SequenceRunner(Sequence seq, RunSettings s);
  ~SequenceRunner();
  SequenceRunner(SequenceRunner&&) noexcept;

  // `occupancy` overrides the prepared atoms: paired keeps the prepare step,
  // single_left / single_right keep only that atom, empty yields no atoms.
  MeasurementRecord run(double zeeman_hz = 0.0, double hold = 0.0,
                        SiteOccupancy occupancy = SiteOccupancy::paired) const;
  // One record per hold value; state before the swept hold is computed once.
  std::vector<MeasurementRecord> sweep(const std::vector<double>& holds, double zeeman_hz = 0.0,
                                       SiteOccupancy occupancy = SiteOccupancy::paired) const;

  const Sequence& sequence() const { return seq_; }
  const RunSettings& settings() const { return set_; }
  const Grid& grid() const { return grid_; }

 private:
  struct State;
  struct Compiled;
  State prepare(SiteOccupancy occ) const;
  void execute(State& st, std::size_t from, std::size_t to, double zeeman_hz, double hold) const;
  MeasurementRecord measure(const State& st) const;

  Sequence seq_;
  RunSettings set_;
  Grid grid_;
  std::unique_ptr<Compiled> c_;
};

struct EnsembleSettings {
  OccupancyModel occupancy;
  FieldNoiseModel noise;
  int n_sites = 1;
  int n_shots = 1;
};

struct EnsembleResult {
  std::vector<MeasurementRecord> points;  // one per hold, ensemble mean
  std::vector<SiteOccupancy> sites;
  std::vector<double> site_hz;
};

// Occupancy and per-site offsets are drawn once; each (hold, shot) gets its
// own shot offset. Deterministic for a seed regardless of `jobs`.
EnsembleResult run_ensemble(const SequenceRunner& r, const EnsembleSettings& e, const std::vector<double>& holds,
                            std::uint64_t seed, int jobs = 1);

}  // namespace dws
