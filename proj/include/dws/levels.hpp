#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dws/ramp.hpp"
#include "dws/spectral.hpp"

namespace dws {

struct LevelSettings {
  int n = 128;        // grid points per cell
  int n_modes = 8;    // one-particle modes per spin
  double g1d = 0.0;
  bool with_interaction = true;
  // Rescale the truncated-basis coupling so the final g/e triplet gap equals
  // the dressed grid value; the truncated contact otherwise overshoots.
  bool match_dressed = true;
};

// Four tracked pair levels, labelled by their content at the first time:
// |0_L,0_R>, |0_L,1_R>, |1_L,0_R>, |1_L,1_R>.
struct LevelTable {
  std::vector<double> times;               // s
  std::vector<std::string> labels;
  std::vector<std::vector<double>> energy; // [time][level], E_R relative to non-interacting |1_L,1_R>
  std::vector<double> leakage;             // per time, worst weight on the highest mode
  std::vector<std::string> warnings;
  double g_effective = 0.0;                // coupling used in the truncated basis
};

// Frozen two-particle spectra along the ramp in a truncated mode basis,
// sector by sector: (0,0) and (1,1) symmetric, (0,1) as a product basis.
// Levels are followed by maximal overlap with the previous eigenvectors,
// transported through the one-particle mode overlaps.
LevelTable eigenenergies_along_ramp(const RampSchedule& ramp, const std::vector<double>& times,
                                    const LevelSettings& s);

void write_levels_csv(std::ostream& os, const LevelTable& t);

}  // namespace dws
