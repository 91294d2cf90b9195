#pragma once

#include <complex>
#include <cstdlib>
#include <new>
#include <vector>

#include "dws/superlattice.hpp"

namespace dws {

using cplx = std::complex<double>;

template <class T, std::size_t Align = 64>
struct AlignedAllocator {
  using value_type = T;
  template <class U>
  struct rebind {
    using other = AlignedAllocator<U, Align>;
  };
  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U, Align>&) {}
  T* allocate(std::size_t n) {
    const std::size_t bytes = ((n * sizeof(T) + Align - 1) / Align) * Align;
    void* p = std::aligned_alloc(Align, bytes == 0 ? Align : bytes);
    if (!p) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) { std::free(p); }
  template <class U>
  bool operator==(const AlignedAllocator<U, Align>&) const { return true; }
};

using cvec = std::vector<cplx, AlignedAllocator<cplx>>;

enum class Boundary { periodic, hard_wall };

// Points x_j = x_min + j dx, j = 0..n-1, dx = (x_max - x_min)/n. For the
// hard wall, x_min and x_max are the walls and amplitude at j = 0 is zero.
struct Grid {
  double x_min = 0.0;
  double x_max = 0.0;
  int n = 0;
  Boundary boundary = Boundary::periodic;

  double length() const { return x_max - x_min; }
  double dx() const { return length() / n; }
  double x(int j) const { return x_min + j * dx(); }
  void validate() const;
  bool operator==(const Grid&) const = default;
};

// One double-well cell centred on the lattice's cell centre.
Grid cell_grid(const LatticeParams& p, int n, Boundary b = Boundary::periodic);

// Angular wavenumbers in FFT order for a periodic grid.
std::vector<double> fft_wavenumbers(const Grid& g);

std::vector<double> sample_potential(const LatticeParams& p, Spin s, const Grid& g);

}  // namespace dws
