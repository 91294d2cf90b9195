#include "dws/levels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <sstream>
#include <tuple>

#include <Eigen/Dense>

#include "dws/error.hpp"
#include "dws/exchange.hpp"

namespace dws {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Modes {
  MatrixXd phi;  // n x M, columns normalized with dx
  VectorXd eps;
};

Modes modes_at(const LatticeParams& p, Spin s, const Grid& g, int m) {
  const SingleParticleSpectrum sp = solve_stationary(p, s, g, m);
  Modes out{MatrixXd(g.n, m), VectorXd(m)};
  for (int k = 0; k < m; ++k) {
    out.eps(k) = sp.energies[k];
    for (int j = 0; j < g.n; ++j) out.phi(j, k) = sp.states[k][j];
  }
  return out;
}

// Sector Hamiltonian over the product basis (i, j) -> i + M j.
MatrixXd sector_hamiltonian(const Modes& a, const Modes& b, double g1d, double dx) {
  const int m = static_cast<int>(a.eps.size());
  const int d = m * m;
  MatrixXd h = MatrixXd::Zero(d, d);
  // pair densities rho_ij(x) = phi_i^a(x) phi_j^b(x)
  MatrixXd rho(a.phi.rows(), d);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) rho.col(i + m * j) = a.phi.col(i).cwiseProduct(b.phi.col(j));
  if (g1d != 0.0) h = g1d * dx * rho.transpose() * rho;
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) h(i + m * j, i + m * j) += a.eps(i) + b.eps(j);
  return h;
}

// Columns spanning the exchange-symmetric subspace of the product basis.
MatrixXd symmetric_basis(int m) {
  MatrixXd b = MatrixXd::Zero(m * m, m * (m + 1) / 2);
  int c = 0;
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j, ++c) {
      if (i == j) {
        b(i + m * i, c) = 1.0;
      } else {
        b(i + m * j, c) = b(j + m * i, c) = 1.0 / std::numbers::sqrt2;
      }
    }
  return b;
}

struct Sector {
  VectorXd energy;
  MatrixXd vec;  // product-basis eigenvectors
};

Sector solve_sector(const Modes& a, const Modes& b, bool same_spin, double g1d, double dx) {
  const MatrixXd h = sector_hamiltonian(a, b, g1d, dx);
  Sector s;
  if (same_spin) {
    const MatrixXd bs = symmetric_basis(static_cast<int>(a.eps.size()));
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(bs.transpose() * h * bs);
    s.energy = es.eigenvalues();
    s.vec = bs * es.eigenvectors();
  } else {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(h);
    s.energy = es.eigenvalues();
    s.vec = es.eigenvectors();
  }
  return s;
}

bool same_level(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)); }

// Follow `prev` into the new eigenbasis: best-overlap level, projected onto
// its degenerate cluster so that exact degeneracies keep their identity.
// A level already claimed by another label of the same sector is skipped,
// which splits a degenerate pair onto the two levels it turns into.
std::pair<double, VectorXd> follow(const Sector& s, const VectorXd& prev, const double* claimed = nullptr) {
  const VectorXd ov = s.vec.transpose() * prev;
  Eigen::Index best = -1;
  for (Eigen::Index k = 0; k < s.energy.size(); ++k) {
    if (claimed && same_level(*claimed, s.energy(k))) continue;
    if (best < 0 || std::norm(ov(k)) > std::norm(ov(best)) + 1e-12) best = k;
  }
  const double e = s.energy(best);
  VectorXd v = VectorXd::Zero(prev.size());
  for (Eigen::Index k = 0; k < s.energy.size(); ++k)
    if (same_level(s.energy(k), e)) v += ov(k) * s.vec.col(k);
  if (v.norm() < 1e-12) v = s.vec.col(best);
  return {e, v.normalized()};
}

// Coefficients of localized L/R orbitals in the lowest two modes.
std::array<VectorXd, 2> localized_coefficients(const Modes& md, const Grid& g, double center) {
  const int m = static_cast<int>(md.eps.size());
  MatrixXd x2(2, 2);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      double s = 0.0;
      for (int j = 0; j < g.n; ++j)
        s += md.phi(j, a) * md.phi(j, b) * std::remainder(g.x(j) - center, std::numbers::pi);
      x2(a, b) = s * g.dx();
    }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(x2);
  std::array<VectorXd, 2> out{VectorXd::Zero(m), VectorXd::Zero(m)};
  out[0].head(2) = es.eigenvectors().col(0);  // smaller <x>: left
  out[1].head(2) = es.eigenvectors().col(1);
  return out;
}

VectorXd kron(const VectorXd& a, const VectorXd& b) {
  const int m = static_cast<int>(a.size());
  VectorXd v(m * m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) v(i + m * j) = a(i) * b(j);
  return v;
}

// g/e triplet gap of the symmetric same-spin sector.
double truncated_gap(const Modes& md, double g1d, double dx) {
  const Sector s = solve_sector(md, md, true, g1d, dx);
  const int m = static_cast<int>(md.eps.size());
  VectorXd ref = VectorXd::Zero(m * m);
  ref(1) = ref(m) = 1.0 / std::numbers::sqrt2;
  Eigen::Index best = 0;
  (s.vec.transpose() * ref).cwiseAbs2().maxCoeff(&best);
  return s.energy(best) - md.eps(0) - md.eps(1);
}

double matched_coupling(const RampSchedule& ramp, double t, const Grid& grid, int m, double g1d) {
  const LatticeParams p = ramp.sample(t);
  const Modes md = modes_at(p, Spin::zero, grid, m);
  const double target = dressed_exchange(solve_stationary(p, Spin::zero, grid, 4), g1d).u;
  // secant on gap(g) = target starting from g1d and its first-order rescaling
  double a = g1d, fa = truncated_gap(md, a, grid.dx()) - target;
  double b = g1d * target / (fa + target), fb = truncated_gap(md, b, grid.dx()) - target;
  for (int it = 0; it < 50 && std::abs(fb) > 1e-13 * target; ++it) {
    const double c = b - fb * (b - a) / (fb - fa);
    a = b;
    fa = fb;
    b = c;
    fb = truncated_gap(md, b, grid.dx()) - target;
  }
  if (std::abs(fb) > 1e-9 * target) throw NumericError("eigenenergies_along_ramp: coupling match failed");
  return b;
}

}  // namespace

LevelTable eigenenergies_along_ramp(const RampSchedule& ramp, const std::vector<double>& times,
                                    const LevelSettings& s) {
  if (ramp.empty()) throw DomainError("eigenenergies_along_ramp: empty ramp");
  if (times.empty()) throw DomainError("eigenenergies_along_ramp: no times");
  const double tol = 1e-12 * std::max(1.0, std::abs(ramp.end()));
  for (double t : times)
    if (t < ramp.start() - tol || t > ramp.end() + tol)
      throw DomainError("eigenenergies_along_ramp: time outside the ramp span");
  if (s.n_modes < 2) throw DomainError("eigenenergies_along_ramp: need at least two modes");

  const LatticeParams p0 = ramp.sample(times.front());
  const Grid grid = cell_grid(p0, s.n);
  const double dx = grid.dx();
  const int m = s.n_modes;
  double g = s.with_interaction ? s.g1d : 0.0;
  if (g > 0 && s.match_dressed) g = matched_coupling(ramp, times.back(), grid, m, g);

  LevelTable out;
  out.g_effective = g;
  out.labels = {"|0_L,0_R>", "|0_L,1_R>", "|1_L,0_R>", "|1_L,1_R>"};
  // sector of each level: spins of particle 1 and 2
  const std::array<std::array<int, 2>, 4> sector_of{{{0, 0}, {0, 1}, {0, 1}, {1, 1}}};

  std::array<VectorXd, 4> tracked;
  std::array<Modes, 2> prev_modes;
  double worst_leak = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const LatticeParams p = ramp.sample(times[k]);
    const std::array<Modes, 2> md{modes_at(p, Spin::zero, grid, m), modes_at(p, Spin::one, grid, m)};
    const std::array<Sector, 3> sec{solve_sector(md[0], md[0], true, g, dx), solve_sector(md[0], md[1], false, g, dx),
                                    solve_sector(md[1], md[1], true, g, dx)};
    auto sector_index = [](const std::array<int, 2>& sp) { return sp[0] + sp[1]; };

    if (k == 0) {
      const double center = cell_center(p);
      const std::array<std::array<VectorXd, 2>, 2> lr{localized_coefficients(md[0], grid, center),
                                                      localized_coefficients(md[1], grid, center)};
      // particle 1 carries the first spin of the sector
      tracked[0] = (kron(lr[0][0], lr[0][1]) + kron(lr[0][1], lr[0][0])).normalized();
      tracked[1] = kron(lr[0][0], lr[1][1]);
      tracked[2] = kron(lr[0][1], lr[1][0]);
      tracked[3] = (kron(lr[1][0], lr[1][1]) + kron(lr[1][1], lr[1][0])).normalized();
    } else {
      std::array<MatrixXd, 2> ov;
      for (int sp = 0; sp < 2; ++sp) ov[sp] = dx * md[sp].phi.transpose() * prev_modes[sp].phi;
      for (int l = 0; l < 4; ++l) {
        const auto& sp = sector_of[l];
        const Eigen::Map<const MatrixXd> c(tracked[l].data(), m, m);
        const MatrixXd moved = ov[sp[0]] * c * ov[sp[1]].transpose();
        tracked[l] = Eigen::Map<const VectorXd>(moved.data(), m * m).normalized();
      }
    }

    const double ref = md[1].eps(0) + md[1].eps(1);
    std::vector<double> row(4);
    double leak = 0.0;
    double first_mixed = 0.0;
    for (int l = 0; l < 4; ++l) {
      const Sector& sc = sec[sector_index(sector_of[l])];
      auto [e, v] = follow(sc, tracked[l]);
      if (l == 1) first_mixed = e;
      // the two mixed-spin labels must end on different levels once they split
      if (l == 2 && same_level(e, first_mixed)) {
        const Eigen::Index cluster = std::count_if(sc.energy.begin(), sc.energy.end(),
                                                   [&](double x) { return same_level(x, e); });
        if (cluster < 2) std::tie(e, v) = follow(sc, tracked[l], &first_mixed);
      }
      tracked[l] = v;
      row[l] = e - ref;
      double w = 0.0;
      for (int i = 0; i < m; ++i) w += v(i + m * (m - 1)) * v(i + m * (m - 1)) + v(m - 1 + m * i) * v(m - 1 + m * i);
      leak = std::max(leak, w);
    }
    out.times.push_back(times[k]);
    out.energy.push_back(std::move(row));
    out.leakage.push_back(leak);
    worst_leak = std::max(worst_leak, leak);
    prev_modes = md;
  }
  if (worst_leak > 0.01) {
    std::ostringstream msg;
    msg << "truncation leakage " << worst_leak << " exceeds 1% with " << m << " modes";
    out.warnings.push_back(msg.str());
  }
  return out;
}

void write_levels_csv(std::ostream& os, const LevelTable& t) {
  os << "t_us,label,energy_ER\n";
  char buf[160];
  for (std::size_t k = 0; k < t.times.size(); ++k)
    for (std::size_t l = 0; l < t.labels.size(); ++l) {
      std::snprintf(buf, sizeof buf, "%.6f,\"%s\",%.12g\n", t.times[k] * 1e6, t.labels[l].c_str(), t.energy[k][l]);
      os << buf;
    }
}

}  // namespace dws
