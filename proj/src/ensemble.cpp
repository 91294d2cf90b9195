#include "dws/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include <boost/math/tools/roots.hpp>

#include "dws/error.hpp"

namespace dws {

Rng make_rng(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

const char* occupancy_name(SiteOccupancy o) {
  switch (o) {
    case SiteOccupancy::empty: return "empty";
    case SiteOccupancy::single_left: return "single_L";
    case SiteOccupancy::single_right: return "single_R";
    case SiteOccupancy::paired: return "paired";
  }
  return "?";
}

int atom_count(SiteOccupancy o) {
  return o == SiteOccupancy::paired ? 2 : o == SiteOccupancy::empty ? 0 : 1;
}

void OccupancyModel::validate() const {
  const double tol = 1e-12;
  if (!(p_paired_site >= 0 && p_paired_site <= 1) || !(p_single >= 0 && p_single <= 1) ||
      p_paired_site + p_single > 1 + tol)
    throw DomainError("occupancy probabilities must lie in [0, 1] and sum to at most 1");
}

double OccupancyModel::unpaired_fraction() const {
  validate();
  const double atoms = 2.0 * p_paired_site + p_single;
  return atoms > 0 ? p_single / atoms : 0.0;
}

std::vector<SiteOccupancy> sample_occupancy(const OccupancyModel& m, int n_sites, Rng& rng) {
  m.validate();
  if (n_sites < 0) throw DomainError("sample_occupancy: negative site count");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<SiteOccupancy> out(n_sites);
  for (auto& s : out) {
    const double x = u(rng);
    if (x < m.p_paired_site)
      s = SiteOccupancy::paired;
    else if (x < m.p_paired_site + 0.5 * m.p_single)
      s = SiteOccupancy::single_left;
    else if (x < m.p_paired_site + m.p_single)
      s = SiteOccupancy::single_right;
    else
      s = SiteOccupancy::empty;
  }
  return out;
}

double unpaired_fraction(const std::vector<SiteOccupancy>& sites) {
  double single = 0.0, atoms = 0.0;
  for (SiteOccupancy s : sites) {
    atoms += atom_count(s);
    if (atom_count(s) == 1) single += 1.0;
  }
  return atoms > 0 ? single / atoms : 0.0;
}

void FieldNoiseModel::validate() const {
  if (!(shot_sigma_hz >= 0) || !(gradient_sigma_hz >= 0)) throw DomainError("noise sigmas must be non-negative");
  if (!std::isfinite(b0)) throw DomainError("field must be finite");
}

FieldNoiseDraw sample_field_noise(const FieldNoiseModel& m, int n_sites, Rng& rng) {
  m.validate();
  if (n_sites < 0) throw DomainError("sample_field_noise: negative site count");
  FieldNoiseDraw d;
  std::normal_distribution<double> g(0.0, 1.0);
  d.shot_hz = m.shot_sigma_hz > 0 ? m.shot_sigma_hz * g(rng) : 0.0;
  d.site_hz.resize(n_sites, 0.0);
  if (m.gradient_sigma_hz > 0)
    for (double& v : d.site_hz) v = m.gradient_sigma_hz * g(rng);
  return d;
}

double ramsey_contrast(double sigma_hz, double t_s) {
  const double a = 2.0 * std::numbers::pi * sigma_hz * t_s;
  return std::exp(-0.5 * a * a);
}

double calibrate_shot_sigma(double t_e_s) {
  if (!(t_e_s > 0)) throw DomainError("calibrate_shot_sigma: time must be positive");
  auto f = [&](double s) { return ramsey_contrast(s, t_e_s) - std::exp(-1.0); };
  double lo = 1e-3 / t_e_s, hi = 10.0 / t_e_s;
  boost::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
  return 0.5 * (r.first + r.second);
}

void MeasurementRecord::validate() const {
  double sum = 0.0;
  for (const auto& b : populations.p)
    for (double v : b) {
      if (!(v >= -1e-12 && v <= 1 + 1e-9)) throw ValidationError("measurement population outside [0, 1]");
      sum += v;
    }
  if (sum > 1 + 1e-9) throw ValidationError("measurement populations sum above 1");
}

MeasurementRecord measure_populations(const ModeState& pair) {
  MeasurementRecord r;
  r.populations = one_body_populations(pair);
  r.atoms = 2.0;
  r.occupancy = "paired";
  return r;
}

MeasurementRecord measure_populations(const SingleModeState& atom) {
  if (atom.band < 0 || atom.band > 2) throw DomainError("measure_populations: band must be 0, 1 or 2");
  MeasurementRecord r;
  for (int s = 0; s < 2; ++s) r.populations.p[atom.band][s] = std::norm(atom.spin[s]);
  r.atoms = 1.0;
  r.occupancy = "single";
  return r;
}

MeasurementRecord measure_populations(const TwoParticleGridState& st, const SingleParticleSpectrum& s0,
                                      const SingleParticleSpectrum& s1) {
  MeasurementRecord r;
  r.populations = one_body_populations(st, s0, s1);
  r.atoms = 2.0;
  r.occupancy = "paired";
  return r;
}

MeasurementRecord measure_populations(const SingleGridState& st, const SingleParticleSpectrum& s0,
                                      const SingleParticleSpectrum& s1) {
  MeasurementRecord r;
  r.populations = one_body_populations(st, s0, s1);
  r.atoms = 1.0;
  r.occupancy = "single";
  return r;
}

MeasurementRecord combine(const std::vector<MeasurementRecord>& records) {
  MeasurementRecord out;
  out.occupancy = "ensemble";
  if (records.empty()) return out;
  out.t = records.front().t;
  out.hold = records.front().hold;
  for (const auto& r : records) {
    out.atoms += r.atoms;
    for (int b = 0; b < 3; ++b)
      for (int s = 0; s < 2; ++s) out.populations.p[b][s] += r.atoms * r.populations.p[b][s];
  }
  if (out.atoms > 0)
    for (auto& b : out.populations.p)
      for (double& v : b) v /= out.atoms;
  return out;
}

double SyntheticImage::total() const {
  double s = 0.0;
  for (double v : intensity) s += v;
  return s;
}

SyntheticImage render_image(const MeasurementRecord& r, int displacement, int bins_per_kr, int spot_rows) {
  if (displacement < 0 || bins_per_kr < 1 || spot_rows < 1) throw DomainError("render_image: invalid layout");
  SyntheticImage img;
  img.bins_per_kr = bins_per_kr;
  img.spot_rows = spot_rows;
  img.displacement = displacement;
  img.width = 6 * bins_per_kr;
  img.height = spot_rows + displacement;
  img.intensity.assign(static_cast<std::size_t>(img.width) * img.height, 0.0);
  const int zero = 3 * bins_per_kr;  // column of k = 0
  for (int band = 0; band < 3; ++band) {
    // columns of the band's zone: [-(b+1), -b) and [b, b+1) in k_R, merged for b = 0
    std::vector<int> cols;
    for (int c = 0; c < bins_per_kr; ++c) {
      cols.push_back(zero + band * bins_per_kr + c);
      cols.push_back(zero - (band + 1) * bins_per_kr + c);
    }
    for (int s = 0; s < 2; ++s) {
      const double pop = r.populations.p[band][s];
      if (pop == 0.0) continue;
      const double each = pop / (double(cols.size()) * spot_rows);
      const int row0 = s == 1 ? displacement : 0;
      for (int row = row0; row < row0 + spot_rows; ++row)
        for (int c : cols) img.intensity[static_cast<std::size_t>(row) * img.width + c] += each;
    }
  }
  return img;
}

void write_pgm(std::ostream& os, const SyntheticImage& img) {
  os << "P5\n" << img.width << " " << img.height << "\n255\n";
  const double top = img.intensity.empty() ? 0.0 : *std::max_element(img.intensity.begin(), img.intensity.end());
  for (double v : img.intensity) {
    const int q = top > 0 ? static_cast<int>(std::lround(255.0 * v / top)) : 0;
    os.put(static_cast<char>(static_cast<unsigned char>(std::clamp(q, 0, 255))));
  }
}

void write_image_csv(std::ostream& os, const SyntheticImage& img) {
  os << "row,col,k_min,k_max,intensity\n";
  char buf[160];
  for (int row = 0; row < img.height; ++row)
    for (int c = 0; c < img.width; ++c) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.6f,%.6f,%.12g\n", row, c, img.k_left(c), img.k_left(c + 1),
                    img.at(row, c));
      os << buf;
    }
}

}  // namespace dws
