#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "dws/mode_model.hpp"

namespace dws {

using Rng = std::mt19937_64;

// Independent stream for (seed, tag, index); stable across thread counts.
Rng make_rng(std::uint64_t seed, std::uint64_t tag, std::uint64_t index = 0);

enum class SiteOccupancy { empty, single_left, single_right, paired };
const char* occupancy_name(SiteOccupancy o);
int atom_count(SiteOccupancy o);

struct OccupancyModel {
  double p_paired_site = 1.0;
  double p_single = 0.0;

  double p_empty() const { return 1.0 - p_paired_site - p_single; }
  // Fraction of atoms without a partner.
  double unpaired_fraction() const;
  void validate() const;
};

// Single atoms sit in either well with equal probability.
std::vector<SiteOccupancy> sample_occupancy(const OccupancyModel& m, int n_sites, Rng& rng);
double unpaired_fraction(const std::vector<SiteOccupancy>& sites);

struct FieldNoiseModel {
  double b0 = 4.85e-3;           // T, quantization field
  double shot_sigma_hz = 0.0;    // shot-to-shot, common to all sites
  double gradient_sigma_hz = 0.0;// static per site
  void validate() const;
};

// Shift of the |1> level; both atoms of a site see the same value.
struct FieldNoiseDraw {
  double shot_hz = 0.0;
  std::vector<double> site_hz;
  double site_total(std::size_t i) const { return shot_hz + site_hz.at(i); }
};

FieldNoiseDraw sample_field_noise(const FieldNoiseModel& m, int n_sites, Rng& rng);

// Gaussian dephasing: Ramsey contrast exp(-(2 pi sigma t)^2 / 2) reaches 1/e at
// t = sqrt(2) / (2 pi sigma). Root-found so that the 1/e time equals t_e.
double calibrate_shot_sigma(double t_e_s);
double ramsey_contrast(double sigma_hz, double t_s);

// Per-atom band/spin populations of one realization or an ensemble.
struct MeasurementRecord {
  double t = 0.0;       // s, sequence clock at the measurement
  double hold = 0.0;    // s, value of the swept hold
  BandSpinPopulations populations;
  double atoms = 0.0;
  double zeeman_hz = 0.0;
  std::string occupancy;

  double total() const { return populations.total(); }
  void validate() const;
};

// One atom in a single band (0 = g, 1 = e) with spin amplitudes.
struct SingleModeState {
  int band = 0;
  std::array<cplx, 2> spin{};
};

MeasurementRecord measure_populations(const ModeState& pair);
MeasurementRecord measure_populations(const SingleModeState& atom);
MeasurementRecord measure_populations(const TwoParticleGridState& st, const SingleParticleSpectrum& s0,
                                      const SingleParticleSpectrum& s1);
MeasurementRecord measure_populations(const SingleGridState& st, const SingleParticleSpectrum& s0,
                                      const SingleParticleSpectrum& s1);

// Atom-weighted mean; records are reduced in the given order.
MeasurementRecord combine(const std::vector<MeasurementRecord>& records);

// Band-mapped, spin-separated image. Momentum axis covers [-3, 3) k_R with
// `bins_per_kr` bins per k_R; band n fills the nth Brillouin zone uniformly.
// Spin |0> occupies rows [0, spot_rows), spin |1> is shifted down by
// `displacement` rows.
struct SyntheticImage {
  int width = 0, height = 0;
  int bins_per_kr = 8;
  int spot_rows = 4;
  int displacement = 0;
  std::vector<double> intensity;  // row-major
  double k_min = -3.0;

  double at(int row, int col) const { return intensity.at(static_cast<std::size_t>(row) * width + col); }
  double total() const;
  double k_left(int col) const { return k_min + double(col) / bins_per_kr; }
};

SyntheticImage render_image(const MeasurementRecord& r, int displacement = 8, int bins_per_kr = 8, int spot_rows = 4);
void write_pgm(std::ostream& os, const SyntheticImage& img);
void write_image_csv(std::ostream& os, const SyntheticImage& img);

}  // namespace dws
