#pragma once

namespace dws {

// SI constants for 87Rb in an 816 nm lattice. k_R and E_R are derived.
struct Constants {
  double hbar = 1.054571817e-34;
  double h = 6.62607015e-34;
  double mass = 86.909180527 * 1.66053906660e-27;
  double a_s = 5.31e-9;
  double lambda = 816e-9;

  double k_R() const;
  double E_R() const;
  // E_R/h in Hz
  double recoil_hz() const;

  void validate() const;
};

double recoil_energy(double lambda, double mass);

enum class Kind { energy, length, time };

// hbar = 1, energy in E_R, length in 1/k_R, time in hbar/E_R.
class InternalUnits {
 public:
  explicit InternalUnits(const Constants& c = Constants{});

  double to_internal(double si, Kind kind) const;
  double to_si(double value, Kind kind) const;

  double energy_unit() const { return energy_; }
  double length_unit() const { return length_; }
  double time_unit() const { return time_; }

  double hz_to_energy(double f) const { return f / recoil_hz_; }
  double energy_to_hz(double e) const { return e * recoil_hz_; }
  double seconds(double t_internal) const { return t_internal * time_; }
  double internal_time(double t_s) const { return t_s / time_; }

 private:
  double energy_, length_, time_, recoil_hz_;
};

}  // namespace dws
