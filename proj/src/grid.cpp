#include "dws/grid.hpp"

#include <cmath>
#include <numbers>

#include "dws/error.hpp"

namespace dws {

void Grid::validate() const {
  if (n < 64 || (n & (n - 1)) != 0) throw DomainError("grid: n must be a power of two >= 64");
  if (!(length() >= std::numbers::pi - 1e-12)) throw DomainError("grid: domain must span at least one lattice cell");
}

Grid cell_grid(const LatticeParams& p, int n, Boundary b) {
  const double c = cell_center(p);
  Grid g{c - 0.5 * std::numbers::pi, c + 0.5 * std::numbers::pi, n, b};
  g.validate();
  return g;
}

std::vector<double> fft_wavenumbers(const Grid& g) {
  std::vector<double> k(g.n);
  const double dk = 2.0 * std::numbers::pi / g.length();
  for (int m = 0; m < g.n; ++m) k[m] = dk * (m < g.n / 2 ? m : m - g.n);
  return k;
}

std::vector<double> sample_potential(const LatticeParams& p, Spin s, const Grid& g) {
  std::vector<double> v(g.n);
  for (int j = 0; j < g.n; ++j) v[j] = potential_value(p, s, g.x(j));
  return v;
}

}  // namespace dws
