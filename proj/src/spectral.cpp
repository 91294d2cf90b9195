#include "dws/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "dws/error.hpp"

namespace dws {

namespace {

constexpr double kPi = std::numbers::pi;

// Fourier-DVR kinetic energy -d^2/dx^2 on a periodic grid, Nyquist mode included.
Eigen::MatrixXd periodic_kinetic(const Grid& g) {
  const int n = g.n;
  const std::vector<double> k = fft_wavenumbers(g);
  std::vector<double> row(n);
  for (int d = 0; d < n; ++d) {
    double s = 0.0;
    for (int m = 0; m < n; ++m) s += k[m] * k[m] * std::cos(2.0 * kPi * double(m) * d / n);
    row[d] = s / n;
  }
  Eigen::MatrixXd t(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) t(i, j) = row[(i - j + n) % n];
  return t;
}

// Sine-DVR kinetic energy on the n-1 interior points of a hard-wall box.
Eigen::MatrixXd hard_wall_kinetic(const Grid& g) {
  const int m = g.n - 1;
  Eigen::MatrixXd s(m, m);
  const double norm = std::sqrt(2.0 / g.n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) s(i, j) = norm * std::sin(kPi * double(i + 1) * (j + 1) / g.n);
  Eigen::VectorXd k2(m);
  for (int j = 0; j < m; ++j) {
    const double k = kPi * (j + 1) / g.length();
    k2(j) = k * k;
  }
  return s * k2.asDiagonal() * s;
}

void fix_phase(std::vector<double>& v) {
  std::size_t imax = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[imax])) imax = i;
  if (v[imax] < 0)
    for (double& x : v) x = -x;
}

std::vector<std::string> default_labels(int n) {
  std::vector<std::string> l;
  for (int i = 0; i < n; ++i) l.push_back(i == 0 ? "g" : i == 1 ? "e" : std::to_string(i));
  return l;
}

}  // namespace

Eigen::MatrixXd single_particle_hamiltonian(const std::vector<double>& potential, const Grid& grid) {
  grid.validate();
  if (static_cast<int>(potential.size()) != grid.n) throw DomainError("single_particle_hamiltonian: size mismatch");
  const bool wall = grid.boundary == Boundary::hard_wall;
  const int off = wall ? 1 : 0;
  Eigen::MatrixXd h = wall ? hard_wall_kinetic(grid) : periodic_kinetic(grid);
  for (int i = 0; i < h.rows(); ++i) h(i, i) += potential[i + off];
  return h;
}

SingleParticleSpectrum solve_stationary(const LatticeParams& p, Spin spin, const Grid& grid, int n_states) {
  p.validate();
  return solve_stationary(sample_potential(p, spin, grid), grid, n_states);
}

SingleParticleSpectrum solve_stationary(const std::vector<double>& potential, const Grid& grid, int n_states) {
  grid.validate();
  if (static_cast<int>(potential.size()) != grid.n) throw DomainError("solve_stationary: potential/grid size mismatch");
  if (n_states < 1 || n_states > grid.n / 4) throw PreconditionError("solve_stationary: need 1 <= n_states <= n/4");

  const int off = grid.boundary == Boundary::hard_wall ? 1 : 0;
  const Eigen::MatrixXd h = single_particle_hamiltonian(potential, grid);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  if (es.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "solve_stationary: eigensolver did not converge (n = " << grid.n << ")";
    throw NumericError(msg.str());
  }
  double worst = 0.0;
  for (int k = 0; k < n_states; ++k)
    worst = std::max(worst, (h * es.eigenvectors().col(k) - es.eigenvalues()(k) * es.eigenvectors().col(k)).norm());
  if (worst > 1e-8 * std::max(1.0, h.norm())) {
    std::ostringstream msg;
    msg << "solve_stationary: residual " << worst << " above tolerance";
    throw NumericError(msg.str());
  }

  SingleParticleSpectrum out;
  out.grid = grid;
  out.potential = potential;
  const double scale = 1.0 / std::sqrt(grid.dx());
  for (int k = 0; k < n_states; ++k) {
    out.energies.push_back(es.eigenvalues()(k));
    std::vector<double> v(grid.n, 0.0);
    for (int i = 0; i < h.rows(); ++i) v[i + off] = es.eigenvectors()(i, k) * scale;
    fix_phase(v);
    out.states.push_back(std::move(v));
  }
  out.labels = default_labels(n_states);
  return out;
}

LocalizedPair localized_pair(const SingleParticleSpectrum& s) {
  if (s.size() < 2) throw PreconditionError("localized_pair: need two states");
  const Grid& g = s.grid;
  const double c = 0.5 * (g.x_min + g.x_max);
  const std::vector<double>& a = s.states[0];
  const std::vector<double>& b = s.states[1];
  auto left_weight = [&](const std::vector<double>& v) {
    double w = 0.0;
    for (int j = 0; j < g.n; ++j)
      if (g.x(j) < c) w += v[j] * v[j];
    return w * g.dx();
  };
  const double wa = left_weight(a), wb = left_weight(b);
  const auto localized = [](double w) { return w > 0.99 || w < 0.01; };
  if (localized(wa) && localized(wb) && (wa > 0.5) != (wb > 0.5)) {
    return wa > 0.5 ? LocalizedPair{a, b} : LocalizedPair{b, a};
  }
  Eigen::Matrix2d x = Eigen::Matrix2d::Zero();
  for (int j = 0; j < g.n; ++j) {
    const double xj = (g.x(j) - c) * g.dx();
    x(0, 0) += a[j] * a[j] * xj;
    x(0, 1) += a[j] * b[j] * xj;
    x(1, 1) += b[j] * b[j] * xj;
  }
  x(1, 0) = x(0, 1);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(x);
  LocalizedPair out;
  out.left.resize(g.n);
  out.right.resize(g.n);
  const Eigen::Vector2d l = es.eigenvectors().col(0), r = es.eigenvectors().col(1);
  for (int j = 0; j < g.n; ++j) {
    out.left[j] = l(0) * a[j] + l(1) * b[j];
    out.right[j] = r(0) * a[j] + r(1) * b[j];
  }
  fix_phase(out.left);
  fix_phase(out.right);
  return out;
}

BlochBands bloch_bands(const LatticeParams& p, Spin spin, int n_bands, int n_q) {
  p.validate();
  if (n_bands < 1 || n_q < 1) throw DomainError("bloch_bands: n_bands and n_q must be positive");
  const int mmax = n_bands + 12;
  const int dim = 2 * mmax + 1;
  const double phase = spin == Spin::one ? p.theta + p.dtheta_spin : p.theta;
  const cplx v1 = -0.25 * p.v_long * std::polar(1.0, 2.0 * phase);
  const double v2 = -0.25 * p.v_short;
  const double v0 = -0.5 * (p.v_long + p.v_short);

  BlochBands out;
  out.energy.assign(n_bands, std::vector<double>(n_q));
  for (int iq = 0; iq < n_q; ++iq) {
    const double q = -1.0 + 2.0 * iq / n_q;
    out.q.push_back(q);
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
    for (int a = 0; a < dim; ++a) {
      const double k = q + 2.0 * (a - mmax);
      h(a, a) = k * k + v0;
      if (a + 1 < dim) {
        h(a + 1, a) = v1;
        h(a, a + 1) = std::conj(v1);
      }
      if (a + 2 < dim) {
        h(a + 2, a) = v2;
        h(a, a + 2) = v2;
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericError("bloch_bands: eigensolver did not converge");
    for (int n = 0; n < n_bands; ++n) out.energy[n][iq] = es.eigenvalues()(n);
  }
  return out;
}

VibrationalFrequencies vibrational_frequencies(const LatticeParams& p, Spin spin, const Constants& c, int n) {
  (void)well_geometry(p, spin, c);
  const SingleParticleSpectrum s = solve_stationary(p, spin, cell_grid(p, n), 2);
  return {(s.energies[1] - s.energies[0]) * c.recoil_hz(), p.f_y, p.f_z};
}

double transverse_overlap(const TransverseConfinement& t, const Constants& c) {
  if (!(t.f_y > 0) || !(t.f_z > 0)) throw DomainError("transverse frequencies must be positive");
  auto eta = [&](double f) {
    const double sigma = std::sqrt(2.0 * c.recoil_hz() / f);
    return 1.0 / (std::sqrt(2.0 * kPi) * sigma);
  };
  return eta(t.f_y) * eta(t.f_z);
}

double contact_strength_1d(double a_s, const TransverseConfinement& t, const Constants& c) {
  if (!(a_s >= 0)) throw DomainError("scattering length must be non-negative");
  return 8.0 * kPi * a_s * c.k_R() * transverse_overlap(t, c);
}

double contact_overlap(const Orbital& a, const Orbital& b) {
  if (!(a.grid == b.grid) || a.amp.size() != b.amp.size() || static_cast<int>(a.amp.size()) != a.grid.n)
    throw DomainError("contact_overlap: orbitals live on different grids");
  double s = 0.0;
  for (std::size_t j = 0; j < a.amp.size(); ++j) s += a.amp[j] * a.amp[j] * b.amp[j] * b.amp[j];
  return s * a.grid.dx();
}

double interaction_integral(const Orbital& a, const Orbital& b, const TransverseConfinement& t, double a_s,
                            const Constants& c) {
  return 2.0 * contact_strength_1d(a_s, t, c) * contact_overlap(a, b);
}

double same_mode_interaction(const Orbital& a, const TransverseConfinement& t, double a_s, const Constants& c) {
  return contact_strength_1d(a_s, t, c) * contact_overlap(a, a);
}

namespace {
template <class T>
BandPopulations project(std::span<const T> psi, const SingleParticleSpectrum& s) {
  if (static_cast<int>(psi.size()) != s.grid.n) throw DomainError("band_projection: size mismatch");
  BandPopulations out;
  const double dx = s.grid.dx();
  double norm = 0.0;
  for (const T& v : psi) norm += std::norm(v);
  norm *= dx;
  double sum = 0.0;
  for (const auto& phi : s.states) {
    T o{};
    for (std::size_t j = 0; j < psi.size(); ++j) o += phi[j] * psi[j];
    const double pop = std::norm(o) * dx * dx;
    out.populations.push_back(pop);
    sum += pop;
  }
  out.higher = std::max(0.0, norm - sum);
  return out;
}
}  // namespace

BandPopulations band_projection(std::span<const cplx> psi, const SingleParticleSpectrum& s) { return project(psi, s); }
BandPopulations band_projection(std::span<const double> psi, const SingleParticleSpectrum& s) {
  return project(psi, s);
}

}  // namespace dws
