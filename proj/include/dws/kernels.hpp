#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dws/grid.hpp"

namespace dws {

enum class Exec { parallel, serial };

// Unnormalized in-place complex FFTs (FFTW, ESTIMATE plans so results do
// not depend on timing). Arrays must be 64-byte aligned.
class Fft2 {
 public:
  explicit Fft2(int n);
  ~Fft2();
  Fft2(const Fft2&) = delete;
  Fft2& operator=(const Fft2&) = delete;
  void forward(cplx* data) const;
  void backward(cplx* data) const;
  int n() const { return n_; }

 private:
  int n_;
  void* fwd_;
  void* bwd_;
};

class Fft1 {
 public:
  explicit Fft1(int n);
  ~Fft1();
  Fft1(const Fft1&) = delete;
  Fft1& operator=(const Fft1&) = delete;
  void forward(cplx* data) const;
  void backward(cplx* data) const;

 private:
  int n_;
  void* fwd_;
  void* bwd_;
};

// exp(-i tau (k1^2 + k2^2 + g delta(x1 - x2))) for two particles on a periodic
// grid, acting on unnormalized 2D FFT data. The contact term only couples
// states of equal total momentum K = m1 + m2 (mod n); within a block the
// pairs (m, K-m) split into an antisymmetric part (diagonal) and a symmetric
// part carrying diag + rank-one, diagonalized once per (grid, g).
class ContactKineticBlocks {
 public:
  ContactKineticBlocks(const Grid& grid, double g1d);

  struct Phases {
    double tau = 0.0;
    std::vector<Eigen::VectorXcd> sym, anti;
  };
  Phases phases(double tau) const;

  // comps: 1..4 arrays of n*n amplitudes in Fourier space.
  void apply(std::span<cplx* const> comps, const Phases& ph, Exec exec) const;

  int n() const { return n_; }
  double g1d() const { return g_; }

 private:
  struct Block {
    std::vector<int> pair_m;  // first member of each (m, K-m) pair, m < K-m
    std::vector<int> self_m;  // m with 2m = K (mod n)
    Eigen::VectorXd d_anti;
    Eigen::MatrixXd w;        // eigenvectors of the symmetric part
    Eigen::VectorXd lambda;
  };
  void apply_block(int k, std::span<cplx* const> comps, const Phases& ph, Eigen::MatrixXd& s, Eigen::MatrixXd& y,
                   Eigen::MatrixXcd& a) const;

  int n_;
  double g_;
  std::vector<Block> blocks_;
};

// Unreduced per-block dense exponential applied with plain loops; reference
// for ContactKineticBlocks in tests and benchmarks.
class ContactKineticReference {
 public:
  ContactKineticReference(const Grid& grid, double g1d);
  void apply(cplx* comp, double tau) const;

 private:
  int n_;
  std::vector<Eigen::MatrixXd> w_;
  std::vector<Eigen::VectorXd> lambda_;
};

// psi(i, j) *= a[i] * b[j]
void apply_separable_phase(cplx* psi, const cplx* a, const cplx* b, int n, Exec exec);

// sum_j |<phi | psi(., j)>|^2 dx^2  (first argument) and the same for the
// second argument; returns {first, second}.
std::pair<double, double> mode_weight(const cplx* psi, const double* phi, int n, double dx, Exec exec);

}  // namespace dws
