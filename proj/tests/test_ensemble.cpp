#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "dws/ensemble.hpp"
#include "dws/error.hpp"
#include "dws/sequence.hpp"
#include "support.hpp"

using namespace dws;
using std::numbers::pi;

namespace {

Sequence plain_exchange() {
  Sequence q;
  q.steps.push_back(PrepareStep{Spin::zero, Spin::one});
  q.steps.push_back(RampStep{"merge", defaults::merge_ramp(500e-6)});
  q.steps.push_back(HoldStep{0.0, true});
  q.steps.push_back(MeasureStep{});
  return q;
}

const SequenceRunner& runner() {
  static const SequenceRunner r = [] {
    RunSettings s;
    s.g1d = testing::calibrated().g1d;
    return SequenceRunner(plain_exchange(), s);
  }();
  return r;
}

double max_diff(const MeasurementRecord& a, const MeasurementRecord& b) {
  double w = 0.0;
  for (int band = 0; band < 3; ++band)
    for (int s = 0; s < 2; ++s) w = std::max(w, std::abs(a.populations.p[band][s] - b.populations.p[band][s]));
  return w;
}

}  // namespace

TEST_SUITE("ensemble") {

TEST_CASE("occupancy extremes and invalid probabilities") {
  Rng rng = make_rng(1, 0);
  OccupancyModel all;
  for (auto s : sample_occupancy(all, 100, rng)) CHECK(s == SiteOccupancy::paired);
  CHECK(all.unpaired_fraction() == 0.0);
  OccupancyModel none{0.0, 0.0};
  for (auto s : sample_occupancy(none, 100, rng)) CHECK(s == SiteOccupancy::empty);
  CHECK(unpaired_fraction(sample_occupancy(none, 10, rng)) == 0.0);
  CHECK_THROWS_AS(sample_occupancy(OccupancyModel{0.7, 0.5}, 10, rng), DomainError);
  CHECK_THROWS_AS(sample_occupancy(OccupancyModel{-0.1, 0.5}, 10, rng), DomainError);
  CHECK_THROWS_AS(sample_occupancy(all, -1, rng), DomainError);
}

TEST_CASE("half paired, half single sites leave a third of the atoms unpaired") {
  const OccupancyModel m{0.5, 0.5};
  CHECK(m.unpaired_fraction() == doctest::Approx(1.0 / 3.0));
  Rng rng = make_rng(2024, 0);
  const auto sites = sample_occupancy(m, 10000, rng);
  CHECK(std::abs(unpaired_fraction(sites) - 1.0 / 3.0) < 0.02);
  int paired = 0, left = 0;
  for (auto s : sites) {
    paired += s == SiteOccupancy::paired;
    left += s == SiteOccupancy::single_left;
  }
  // binomial counts within 4 sigma
  CHECK(std::abs(paired - 5000) < 4 * std::sqrt(10000 * 0.25));
  CHECK(std::abs(left - 2500) < 4 * std::sqrt(10000 * 0.25 * 0.75));
}

TEST_CASE("random streams are reproducible and distinct") {
  Rng a = make_rng(5, 1, 7), b = make_rng(5, 1, 7), c = make_rng(5, 1, 8), d = make_rng(5, 2, 7);
  const auto x = a();
  CHECK(x == b());
  CHECK(x != c());
  CHECK(x != d());
}

TEST_CASE("field noise statistics") {
  Rng rng = make_rng(3, 0);
  const FieldNoiseDraw zero = sample_field_noise(FieldNoiseModel{}, 50, rng);
  CHECK(zero.shot_hz == 0.0);
  for (double v : zero.site_hz) CHECK(v == 0.0);
  FieldNoiseModel m;
  m.gradient_sigma_hz = 300.0;
  const FieldNoiseDraw d = sample_field_noise(m, 20000, rng);
  double mean = 0.0, var = 0.0;
  for (double v : d.site_hz) mean += v;
  mean /= d.site_hz.size();
  for (double v : d.site_hz) var += (v - mean) * (v - mean);
  var /= d.site_hz.size() - 1;
  CHECK(std::abs(mean) < 4 * 300.0 / std::sqrt(20000.0));
  CHECK(std::sqrt(var) == doctest::Approx(300.0).epsilon(0.03));
  m.shot_sigma_hz = -1.0;
  CHECK_THROWS_AS(m.validate(), DomainError);
}

TEST_CASE("shot noise calibrated to a 150 us Ramsey time") {
  const double sigma = calibrate_shot_sigma(150e-6);
  CHECK(sigma == doctest::Approx(std::sqrt(2.0) / (2 * pi * 150e-6)).epsilon(1e-9));
  CHECK(ramsey_contrast(sigma, 150e-6) == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
  // Monte Carlo Ramsey fringe: pi/2, free precession at the drawn shift, pi/2
  FieldNoiseModel m;
  m.shot_sigma_hz = sigma;
  const int shots = 20000;
  cplx mean_phase = 0.0;
  double p0 = 0.0;
  for (int j = 0; j < shots; ++j) {
    Rng rng = make_rng(9, 3, j);
    const double shift = sample_field_noise(m, 0, rng).shot_hz;
    auto s = rf_rotation({1.0, 0.0}, RfPulse::with_area(PulseTarget::both, 50e3, pi / 2), 0.0);
    s[1] *= std::polar(1.0, -2 * pi * shift * 150e-6);
    s = rf_rotation(s, RfPulse::with_area(PulseTarget::both, 50e3, pi / 2, pi / 2), 0.0);
    p0 += std::norm(s[0]);
    mean_phase += std::polar(1.0, -2 * pi * shift * 150e-6);
  }
  CHECK(std::abs(mean_phase) / shots == doctest::Approx(std::exp(-1.0)).epsilon(0.05));
  // with a 90 degree phase on the second pulse the fringe sits at 1/2
  CHECK(p0 / shots == doctest::Approx(0.5).epsilon(0.02));
  CHECK_THROWS_AS(calibrate_shot_sigma(0.0), DomainError);
}

TEST_CASE("ideal measurements") {
  ModeState swapped{};
  swapped[2] = 1.0;
  const auto r = measure_populations(swapped);
  CHECK(r.atoms == 2.0);
  CHECK(r.populations.p[1][1] == doctest::Approx(0.5));
  CHECK(r.populations.p[0][0] == doctest::Approx(0.5));
  const auto s = measure_populations(basis_state(0, 1));
  CHECK(s.populations.p[1][0] == doctest::Approx(0.5));
  CHECK(s.populations.p[0][1] == doctest::Approx(0.5));
  const auto single = measure_populations(SingleModeState{1, {0.0, 1.0}});
  CHECK(single.populations.p[1][1] == 1.0);
  CHECK_THROWS_AS(measure_populations(SingleModeState{3, {1.0, 0.0}}), DomainError);

  // atom-weighted mixture
  const auto mix = combine({r, single});
  CHECK(mix.atoms == 3.0);
  CHECK(mix.populations.p[1][1] == doctest::Approx((2 * 0.5 + 1.0) / 3.0));
  CHECK(mix.total() == doctest::Approx(1.0));
  MeasurementRecord bad;
  bad.populations.p[0][0] = 1.5;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("band-mapped images put g in the first zone and e in the second") {
  MeasurementRecord g;
  g.populations.p[0][0] = 1.0;
  const auto ig = render_image(g, 8);
  CHECK(ig.total() == doctest::Approx(1.0).epsilon(1e-12));
  double inside = 0.0;
  for (int row = 0; row < ig.spot_rows; ++row)
    for (int c = 0; c < ig.width; ++c)
      if (std::abs(ig.k_left(c) + 0.5 / ig.bins_per_kr) < 1.0) inside += ig.at(row, c);
  CHECK(inside == doctest::Approx(1.0).epsilon(1e-12));

  MeasurementRecord e;
  e.populations.p[1][1] = 1.0;
  const auto ie = render_image(e, 8);
  double second = 0.0;
  for (int row = 8; row < 8 + ie.spot_rows; ++row)
    for (int c = 0; c < ie.width; ++c) {
      const double k = std::abs(ie.k_left(c) + 0.5 / ie.bins_per_kr);
      if (k > 1.0 && k < 2.0) second += ie.at(row, c);
    }
  CHECK(second == doctest::Approx(1.0).epsilon(1e-12));

  std::ostringstream pgm;
  write_pgm(pgm, ie);
  const std::string header = "P5\n" + std::to_string(ie.width) + " " + std::to_string(ie.height) + "\n255\n";
  CHECK(pgm.str().substr(0, header.size()) == header);
  CHECK(pgm.str().size() == header.size() + static_cast<std::size_t>(ie.width * ie.height));
  std::ostringstream csv;
  write_image_csv(csv, ie);
  CHECK(csv.str().rfind("row,col,k_min,k_max,intensity\n", 0) == 0);
  CHECK_THROWS_AS(render_image(e, -1), DomainError);
}

TEST_CASE("ensemble runs do not depend on the thread count") {
  EnsembleSettings e;
  e.occupancy = {0.5, 0.5};
  e.noise.shot_sigma_hz = calibrate_shot_sigma(150e-6);
  e.noise.gradient_sigma_hz = 500;
  e.n_sites = 60;
  e.n_shots = 2;
  const std::vector<double> holds{100e-6, 150e-6, 400e-6};
  const auto a = run_ensemble(runner(), e, holds, 42, 1);
  const auto b = run_ensemble(runner(), e, holds, 42, 3);
  REQUIRE(a.points.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) CHECK(max_diff(a.points[k], b.points[k]) == 0.0);
  CHECK(a.sites == b.sites);
  const auto c = run_ensemble(runner(), e, holds, 43, 1);
  CHECK(c.sites != a.sites);
}

TEST_CASE("noiseless ensemble is the occupancy-weighted mixture") {
  EnsembleSettings e;
  e.occupancy = {0.5, 0.5};
  e.n_sites = 200;
  const std::vector<double> holds{120e-6};
  const auto res = run_ensemble(runner(), e, holds, 7, 1);
  std::vector<MeasurementRecord> parts;
  for (auto s : res.sites)
    if (s != SiteOccupancy::empty) parts.push_back(runner().run(0.0, holds[0], s));
  CHECK(max_diff(res.points[0], combine(parts)) < 1e-12);
}

TEST_CASE("common-mode field noise leaves the exchange oscillation intact") {
  EnsembleSettings quiet, noisy;
  quiet.n_sites = noisy.n_sites = 20;
  noisy.n_shots = 4;
  noisy.noise.shot_sigma_hz = calibrate_shot_sigma(150e-6);
  noisy.noise.gradient_sigma_hz = 2000;
  const std::vector<double> holds{0.0, 70e-6, 140e-6, 1000e-6};
  const auto a = run_ensemble(runner(), quiet, holds, 1, 1);
  const auto b = run_ensemble(runner(), noisy, holds, 1, 1);
  for (std::size_t k = 0; k < holds.size(); ++k) CHECK(max_diff(a.points[k], b.points[k]) < 1e-9);
}

}  // TEST_SUITE
