#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "dws/exchange.hpp"
#include "dws/ramp.hpp"
#include "dws/spectral.hpp"

namespace testing {

// Final merged well on the preparation cell grid with g1d calibrated to the
// 285 us period, computed once per process.
struct Calibrated {
  dws::Grid grid;
  dws::SingleParticleSpectrum spectrum;
  double g1d = 0.0;
  double u_target = 0.0;  // E_R
};

inline const Calibrated& calibrated(int n = 128) {
  static const Calibrated c128 = [] {
    Calibrated c;
    const dws::Constants k;
    c.grid = dws::cell_grid(dws::defaults::prep_params(dws::defaults::dtheta_spin(k)), 128);
    c.spectrum = dws::solve_stationary(dws::defaults::final_params(), dws::Spin::zero, c.grid, 4);
    c.u_target = dws::InternalUnits(k).hz_to_energy(1e6 / 285.0);
    c.g1d = dws::calibrate_g1d(c.spectrum, c.u_target);
    return c;
  }();
  if (n == 128) return c128;
  static const Calibrated c256 = [] {
    Calibrated c;
    const dws::Constants k;
    c.grid = dws::cell_grid(dws::defaults::prep_params(dws::defaults::dtheta_spin(k)), 256);
    c.spectrum = dws::solve_stationary(dws::defaults::final_params(), dws::Spin::zero, c.grid, 4);
    c.u_target = dws::InternalUnits(k).hz_to_energy(1e6 / 285.0);
    c.g1d = dws::calibrate_g1d(c.spectrum, c.u_target);
    return c;
  }();
  return c256;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("dws_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing
