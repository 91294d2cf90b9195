#pragma once

#include <Eigen/Dense>

#include "dws/mode_model.hpp"
#include "dws/spectral.hpp"

namespace dws {

// Exact (on the grid) two-particle triplet energy for the g/e pair under a
// contact interaction. The singlet has zero contact energy, so
// U = E_T - (eps_g + eps_e).
struct DressedExchange {
  double u = 0.0;
  double u_first_order = 0.0;
  double e_triplet = 0.0;
  double e_singlet = 0.0;
  int iterations = 0;
  double residual = 0.0;
};

// LOBPCG (block 3) in the spatially symmetric sector, working in the
// one-particle eigenbasis where the free part is diagonal. Warm-starts from
// the previous solve.
class ExchangeSolver {
 public:
  explicit ExchangeSolver(const SingleParticleSpectrum& s);
  DressedExchange solve(double g1d, double tol = 1e-10);

 private:
  Eigen::MatrixXd apply(const Eigen::MatrixXd& c, double g1d) const;

  Grid grid_;
  int m_ = 0;
  Eigen::MatrixXd phi_;     // columns: eigenvectors, unit Euclidean norm
  Eigen::VectorXd eps_;
  double overlap_eg_ = 0.0; // int |phi_e|^2 |phi_g|^2 dx
  Eigen::MatrixXd x_;       // warm start, columns are flattened m x m blocks
};

DressedExchange dressed_exchange(const SingleParticleSpectrum& s, double g1d);

// g1d such that the dressed U equals target (E_R).
double calibrate_g1d(const SingleParticleSpectrum& s, double target_u);

// First-order model with U_eg replaced by the dressed value.
ModeModel dressed_mode_model(const SingleParticleSpectrum& s, double g1d);

}  // namespace dws
