#pragma once

#include <vector>

#include "dws/units.hpp"

namespace dws {

enum class Spin : int { zero = 0, one = 1 };
enum class Site { L, R };

inline int index(Spin s) { return static_cast<int>(s); }

// Depths in E_R, phases in rad, transverse trap frequencies in Hz.
struct LatticeParams {
  double v_long = 0.0;
  double v_short = 0.0;
  double theta = 0.0;
  double dtheta_spin = 0.0;
  double f_y = 50e3;
  double f_z = 60e3;

  void validate() const;
  bool operator==(const LatticeParams&) const = default;
};

// x in 1/k_R. V = -v_short cos^2(2x) - v_long cos^2(x + theta + s dtheta_spin).
double potential_value(const LatticeParams& p, Spin spin, double x);
double potential_slope(const LatticeParams& p, Spin spin, double x);
double potential_curvature(const LatticeParams& p, Spin spin, double x);

// The cos^2(x) term sets the double-well cell: one cell is [c - pi/2, c + pi/2)
// with c the depth maximum of that term.
double cell_center(const LatticeParams& p);

struct WellGeometry {
  std::vector<double> minima;  // ascending inside the cell; L first
  double barrier_height = 0.0;
  double barrier_x = 0.0;      // between L and R, or the cell edge when merged
  double tilt_LR = 0.0;
  double dnu_rf = 0.0;         // Hz
  double center = 0.0;

  bool double_well() const { return minima.size() == 2; }
};

WellGeometry well_geometry(const LatticeParams& p, Spin spin, const Constants& c = Constants{});

// Spin-resonance offset at a site relative to the uniform-field resonance, Hz.
double differential_shift(const LatticeParams& p, Site site, const Constants& c = Constants{});

// dtheta_spin giving |dnu_rf| = target_hz, with the sign that deepens the
// existing tilt (sign of theta + pi/4 when the cell is not symmetric).
double calibrate_dtheta_spin(LatticeParams p, double target_hz, const Constants& c = Constants{});

// Largest local harmonic quantum sqrt(2 V'') over the minima of both spins.
double max_vibrational_quantum(const LatticeParams& p);

}  // namespace dws
