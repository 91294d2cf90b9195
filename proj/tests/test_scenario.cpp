#include <doctest.h>

#include <fstream>
#include <numbers>
#include <sstream>

#include "dws/error.hpp"
#include "dws/scenario.hpp"
#include "support.hpp"

using namespace dws;
using std::numbers::pi;
namespace fs = std::filesystem;

namespace {

Scenario parse(const std::string& text) {
  std::istringstream is(text);
  return parse_scenario(is, "test.ini");
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto at = s.find(from);
  REQUIRE(at != std::string::npos);
  return s.replace(at, from.size(), to);
}

int error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.line;
  }
  return -1;
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

// fig3 with a short sweep and a small ensemble
std::string small_fig3() {
  std::string t = emit_preset("fig3");
  t = replace(t, "hold_us = 200:3000:20", "hold_us = 200:800:10");
  t = replace(t, "n_sites = 400", "n_sites = 30");
  return t;
}

const char* kMinimal = R"(# two knots, one hold
[scenario]
experiment = oscillation
g1d = 1.2

[ramp r]
interp = linear
knot = t_us=0 v_long_ER=15 v_short_ER=40 theta_rad=-0.98539816339744831 dtheta_spin_rad=-0.24
knot = t_us=500 v_long_ER=40 v_short_ER=0 theta_rad=-pi/4

[step prepare]
q_L = 0
p_R = 1

[step ramp]
ramp = r

[step hold]
sweep = true

[step measure]

[sweep]
hold_us = 0, 50, 100
)";

}  // namespace

TEST_SUITE("scenario") {

TEST_CASE("all presets parse and validate") {
  for (const auto& name : preset_names()) {
    const Scenario s = parse(emit_preset(name));
    CHECK(s.source == "test.ini");
    if (name == "fig1b") CHECK(s.experiment == Experiment::levels);
    if (name == "fig2") {
      CHECK(s.experiment == Experiment::basis);
      CHECK(s.basis_states.size() == 4);
    }
    if (name == "fig3" || name == "fig4") {
      CHECK(s.experiment == Experiment::oscillation);
      CHECK(s.holds.size() == 141);
      CHECK(s.holds.front() == doctest::Approx(200e-6));
      CHECK(s.holds.back() == doctest::Approx(3000e-6));
      CHECK(s.ensemble.occupancy.p_paired_site == 0.5);
      REQUIRE(s.ramsey_te);
      CHECK(*s.ramsey_te == doctest::Approx(150e-6));
    }
  }
}

TEST_CASE("fig3 prepares |0_L,1_R> and fig4 adds a three-pulse echo") {
  const Scenario f3 = parse(emit_preset("fig3"));
  const auto& prep = std::get<PrepareStep>(f3.sequence.steps.front());
  CHECK(prep.q_L == Spin::zero);
  CHECK(prep.p_R == Spin::one);
  CHECK(f3.sequence.pulse_count() == 0);

  const Scenario f4 = parse(emit_preset("fig4"));
  REQUIRE(f4.sequence.pulse_count() == 3);
  std::vector<double> areas;
  double held = 0.0;
  for (const Step& st : f4.sequence.steps) {
    if (const auto* p = std::get_if<PulseStep>(&st)) areas.push_back(p->pulse.area());
    if (const auto* h = std::get_if<HoldStep>(&st)) held += h->t;
  }
  CHECK(areas[0] == doctest::Approx(pi / 2));
  CHECK(areas[1] == doctest::Approx(pi));
  CHECK(areas[2] == doctest::Approx(pi / 2));
  CHECK(held == doctest::Approx(165e-6));
}

TEST_CASE("preset ramp round-trips the default merge") {
  const Scenario s = parse(emit_preset("fig3"));
  const RampSchedule& r = s.ramp("merge");
  const RampSchedule d = defaults::merge_ramp(500e-6);
  REQUIRE(r.knots().size() == d.knots().size());
  for (std::size_t k = 0; k < r.knots().size(); ++k) {
    CHECK(r.knots()[k].t == doctest::Approx(d.knots()[k].t).epsilon(1e-12));
    CHECK(r.knots()[k].params.theta == d.knots()[k].params.theta);
    CHECK(r.knots()[k].params.dtheta_spin == d.knots()[k].params.dtheta_spin);
    CHECK(r.knots()[k].params.v_long == d.knots()[k].params.v_long);
  }
  CHECK(r.interpolation() == Interpolation::smoothstep);
}

TEST_CASE("unknown preset lists the valid names") {
  try {
    emit_preset("fig9");
    FAIL("no exception");
  } catch (const UsageError& e) {
    const std::string m = e.what();
    for (const auto& n : preset_names()) CHECK(m.find(n) != std::string::npos);
  }
}

TEST_CASE("minimal config") {
  const Scenario s = parse(kMinimal);
  CHECK(s.g1d == 1.2);
  CHECK(s.holds.size() == 3);
  CHECK(s.holds[2] == doctest::Approx(100e-6));
  const RampSchedule& r = s.ramp("r");
  CHECK(r.first().theta == doctest::Approx(-pi / 4 - 0.2));
  CHECK(r.last().theta == doctest::Approx(-pi / 4));
  CHECK(r.interpolation() == Interpolation::linear);
  CHECK(s.sequence.steps.size() == 4);
}

TEST_CASE("config errors point at the offending line") {
  // knot on line 9 overlaps the one before it
  CHECK(error_line(replace(kMinimal, "t_us=500", "t_us=0")) == 9);
  CHECK(error_line(replace(kMinimal, "g1d = 1.2", "g1d = 1.2\nbogus = 3")) == 5);
  CHECK(error_line(replace(kMinimal, "g1d = 1.2", "g1d = 1.2\ng1d = 2")) == 5);
  CHECK(error_line(replace(kMinimal, "q_L = 0", "q_L = 2")) == 12);
  CHECK(error_line(replace(kMinimal, "interp = linear", "interp = cubic")) == 7);
  CHECK(error_line(replace(kMinimal, "hold_us = 0, 50, 100", "hold_us = 0, x")) == 24);
  CHECK(error_line(std::string(kMinimal) + "\n[nonsense]\n") == 26);
  // measure must be last: reported at the measure step
  const std::string late = replace(kMinimal, "[step measure]\n", "[step measure]\n\n[step hold]\nt_us = 5\n");
  CHECK(error_line(late) == 21);
  CHECK_THROWS_AS(parse(replace(kMinimal, "g1d = 1.2", "grid_points = 100")), ConfigError);
}

TEST_CASE("angles accept pi expressions") {
  const Scenario s = parse(replace(kMinimal, "theta_rad=-pi/4\n", "theta_rad=-3*pi/4\n"));
  CHECK(s.ramp("r").last().theta == doctest::Approx(-3 * pi / 4));
  CHECK_THROWS_AS(parse(replace(kMinimal, "theta_rad=-pi/4\n", "theta_rad=pi/0\n")), ConfigError);
}

TEST_CASE("oscillation run writes outputs and is reproducible") {
  const fs::path a = testing::scratch_dir("run_a"), b = testing::scratch_dir("run_b");
  const Scenario s = parse(small_fig3());
  RunOptions o;
  o.out = a;
  const RunOutcome ra = run_scenario(s, o);
  o.out = b;
  o.jobs = 3;
  run_scenario(s, o);
  for (const char* f : {"oscillation.csv", "fit_report.csv", "oscillation.svg", "image_200us.pgm", "image_340us.csv"})
    CHECK(fs::exists(a / f));
  CHECK(read_file(a / "oscillation.csv") == read_file(b / "oscillation.csv"));
  REQUIRE(ra.fits[0]);
  CHECK(ra.fits[0]->period == doctest::Approx(285e-6).epsilon(0.02));
  const std::string report = read_file(a / "fit_report.csv");
  CHECK(report.find("p0_e:period_s,") != std::string::npos);
  CHECK(report.find("p0_e:converged,1") != std::string::npos);
  CHECK(report.find("fidelity,") != std::string::npos);
  CHECK(read_file(a / "oscillation.csv").rfind("t_us,p0_e,p1_e,p0_g,p1_g\n", 0) == 0);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("stationary input gives flat populations and no fit") {
  const fs::path d = testing::scratch_dir("flat");
  const Scenario s = parse(replace(small_fig3(), "q_L = 0", "q_L = 1"));
  RunOptions o;
  o.out = d;
  o.plots = false;
  const RunOutcome r = run_scenario(s, o);
  for (int k = 0; k < 4; ++k) CHECK_FALSE(r.fits[k]);
  CHECK(read_file(d / "fit_report.csv").find("p0_e:converged,0") != std::string::npos);
  fs::remove_all(d);
}

TEST_CASE("plots") {
  std::istringstream osc("t_us,p0_e,p1_e,p0_g,p1_g\n0,0.1,0.2,0.3,0.4\n1,0.2,0.1,0.4,0.3\n");
  const std::string svg = render_svg(osc, "auto");
  CHECK(svg.find("width=\"800\" height=\"500\"") != std::string::npos);
  std::size_t lines = 0;
  for (auto at = svg.find("<polyline"); at != std::string::npos; at = svg.find("<polyline", at + 1)) ++lines;
  CHECK(lines == 4);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);

  std::istringstream lv("t_us,label,energy_ER\n0,\"|0_L,1_R>\",0.5\n5,\"|0_L,1_R>\",0.4\n");
  CHECK(render_svg(lv, "levels").find("|0_L,1_R&gt;") != std::string::npos);

  std::istringstream empty("");
  CHECK_THROWS_AS(render_svg(empty, "oscillation"), ValidationError);
  std::istringstream missing("t_us,p0_e\n0,1\n");
  try {
    render_svg(missing, "oscillation");
    FAIL("no exception");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("p1_e") != std::string::npos);
  }

  const fs::path d = testing::scratch_dir("plot");
  std::ofstream(d / "empty.csv").close();
  CHECK_THROWS_AS(plot_svg(d / "empty.csv", "oscillation", d / "empty.svg"), ValidationError);
  CHECK_FALSE(fs::exists(d / "empty.svg"));
  fs::remove_all(d);
}

TEST_CASE("levels preset on a coarse time grid") {
  const fs::path d = testing::scratch_dir("levels");
  const Scenario s = parse(replace(emit_preset("fig1b"), "times_us = 0:500:5", "times_us = 0:500:50"));
  RunOptions o;
  o.out = d;
  const RunOutcome r = run_scenario(s, o);
  REQUIRE(r.levels);
  CHECK(r.levels->times.size() == 11);
  CHECK(fs::exists(d / "levels.csv"));
  CHECK(fs::exists(d / "levels.svg"));
  const auto& last = r.levels->energy.back();
  // the prepared |0_L,1_R> ends as the singlet at zero; the others sit one U_eg above
  CHECK(std::abs(last[1]) < 1e-6);
  CHECK(last[0] * InternalUnits{}.energy_to_hz(1.0) == doctest::Approx(1e6 / 285.0).epsilon(1e-4));
  fs::remove_all(d);
}

}  // TEST_SUITE
