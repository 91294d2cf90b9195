#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "dws/scenario.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericError = 3;

int fail(int code, const std::string& msg) {
  std::cerr << "dws: " << msg << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Double-well exchange simulator: scenarios, presets and plots"};
  app.require_subcommand(1);

  std::string config, out = "out", engine, preset, csv, kind = "auto", svg;
  std::uint64_t seed = 0;
  int jobs = 0;

  auto* run = app.add_subcommand("run", "run a scenario config");
  run->add_option("--config", config, "scenario file")->required();
  run->add_option("--out", out, "output directory");
  run->add_option("--seed", seed, "rng seed (overrides the config)");
  run->add_option("--engine", engine, "mode or grid (overrides the config)")
      ->check(CLI::IsMember({"mode", "grid"}));
  run->add_option("--jobs", jobs, "maximum worker threads")->check(CLI::PositiveNumber);
  bool no_plots = false;
  run->add_flag("--no-plots", no_plots, "skip SVG output");

  auto* pre = app.add_subcommand("preset", "print or write a preset config");
  pre->add_option("name", preset, "fig1b, fig2, fig3 or fig4")->required();
  std::string preset_out;
  pre->add_option("--out", preset_out, "write to this file instead of stdout");

  auto* plot = app.add_subcommand("plot", "render oscillation.csv or levels.csv as SVG");
  plot->add_option("csv", csv, "input CSV")->required();
  plot->add_option("--kind", kind, "oscillation, levels or auto");
  plot->add_option("--out", svg, "output SVG (default: CSV name with .svg)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*run) {
      dws::RunOptions o;
      o.out = out;
      if (run->count("--seed")) o.seed = seed;
      if (!engine.empty()) o.engine = engine == "grid" ? dws::Engine::grid : dws::Engine::mode;
      if (jobs > 0) o.jobs = jobs;
      o.plots = !no_plots;
      o.log = &std::cout;
      const dws::Scenario s = dws::load_scenario(config);
      const dws::RunOutcome r = dws::run_scenario(s, o);
      for (const auto& f : r.files) std::cout << "wrote " << f.string() << "\n";
    } else if (*pre) {
      const std::string text = dws::emit_preset(preset);
      if (preset_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream os(preset_out);
        if (!os) return fail(kConfigError, "cannot write " + preset_out);
        os << text;
      }
    } else if (*plot) {
      std::filesystem::path target = svg.empty() ? std::filesystem::path(csv).replace_extension(".svg") : std::filesystem::path(svg);
      dws::plot_svg(csv, kind, target);
      std::cout << "wrote " << target.string() << "\n";
    }
  } catch (const dws::NumericError& e) {
    return fail(kNumericError, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(kConfigError, e.what());
  } catch (const std::logic_error& e) {
    return fail(kConfigError, e.what());
  } catch (const std::exception& e) {
    return fail(kNumericError, e.what());
  }
  return 0;
}
