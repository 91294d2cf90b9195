#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dws/analysis.hpp"
#include "dws/levels.hpp"
#include "dws/sequence.hpp"

namespace dws {

// Parse or validation failure tied to a config line (0 when not line-specific).
struct ConfigError : ValidationError {
  ConfigError(const std::string& source, int line, const std::string& msg);
  int line = 0;
};

// Unknown preset name and similar command-line mistakes.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class Experiment { oscillation, levels, basis };
const char* experiment_name(Experiment e);

struct LevelsSpec {
  std::string ramp;
  std::vector<double> times;  // s
  int n_modes = 8;
  bool interaction = true;
};

struct Scenario {
  std::string source = "<config>";
  Experiment experiment = Experiment::oscillation;
  Engine engine = Engine::mode;
  std::uint64_t seed = 1;
  int jobs = 1;
  int grid_points = 128;
  double dt = 0.5e-6;
  std::optional<double> g1d;  // empty: calibrate to u_target_hz
  double u_target_hz = 1e6 / 285.0;
  Constants constants;

  std::vector<std::pair<std::string, RampSchedule>> ramps;
  Sequence sequence;
  std::vector<double> holds;  // s
  EnsembleSettings ensemble;
  std::optional<double> ramsey_te;  // s; sets the shot sigma when given
  LevelsSpec levels;
  std::vector<std::string> basis_states;  // "0_L", "1_R", ...
  std::vector<double> image_holds;        // s
  int image_displacement = 8;

  const RampSchedule& ramp(const std::string& name) const;
};

Scenario parse_scenario(std::istream& is, const std::string& source = "<config>");
Scenario load_scenario(const std::filesystem::path& path);

const std::vector<std::string>& preset_names();
// Complete config text; throws UsageError for unknown names.
std::string emit_preset(const std::string& name, const Constants& c = Constants{});

// g1d from the scenario, or calibrated on the final lattice of the last ramp.
double resolve_g1d(const Scenario& s);

struct RunOptions {
  std::filesystem::path out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<Engine> engine;
  std::optional<int> jobs;
  bool plots = true;
  std::ostream* log = nullptr;
};

struct RunOutcome {
  double g1d = 0.0;
  std::vector<std::filesystem::path> files;
  std::vector<MeasurementRecord> points;                     // oscillation
  std::array<std::optional<FitResult>, 4> fits;              // p0_e, p1_e, p0_g, p1_g
  std::optional<LevelTable> levels;                          // levels
  std::vector<std::pair<std::string, MeasurementRecord>> basis;  // basis
};

inline constexpr std::array<const char*, 4> kOscillationSeries{"p0_e", "p1_e", "p0_g", "p1_g"};

RunOutcome run_scenario(const Scenario& s, const RunOptions& o = {});

// Renders oscillation.csv or levels.csv (kind "oscillation" / "levels", or
// "auto" to decide from the header) as an 800x500 SVG.
void plot_svg(const std::filesystem::path& csv, const std::string& kind, const std::filesystem::path& svg);
std::string render_svg(std::istream& csv, const std::string& kind, const std::string& source = "<csv>");

}  // namespace dws
