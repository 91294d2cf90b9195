#include "dws/kernels.hpp"

#include <cmath>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "dws/error.hpp"

namespace dws {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

Fft2::Fft2(int n) : n_(n) {
  std::lock_guard<std::mutex> lock(planner_mutex());
  cvec scratch(static_cast<std::size_t>(n) * n);
  fwd_ = fftw_plan_dft_2d(n, n, as_fftw(scratch.data()), as_fftw(scratch.data()), FFTW_FORWARD, FFTW_ESTIMATE);
  bwd_ = fftw_plan_dft_2d(n, n, as_fftw(scratch.data()), as_fftw(scratch.data()), FFTW_BACKWARD, FFTW_ESTIMATE);
  if (!fwd_ || !bwd_) throw NumericError("Fft2: planning failed");
}

Fft2::~Fft2() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
}

void Fft2::forward(cplx* data) const { fftw_execute_dft(static_cast<fftw_plan>(fwd_), as_fftw(data), as_fftw(data)); }
void Fft2::backward(cplx* data) const {
  fftw_execute_dft(static_cast<fftw_plan>(bwd_), as_fftw(data), as_fftw(data));
}

Fft1::Fft1(int n) : n_(n) {
  std::lock_guard<std::mutex> lock(planner_mutex());
  cvec scratch(n);
  fwd_ = fftw_plan_dft_1d(n, as_fftw(scratch.data()), as_fftw(scratch.data()), FFTW_FORWARD, FFTW_ESTIMATE);
  bwd_ = fftw_plan_dft_1d(n, as_fftw(scratch.data()), as_fftw(scratch.data()), FFTW_BACKWARD, FFTW_ESTIMATE);
  if (!fwd_ || !bwd_) throw NumericError("Fft1: planning failed");
}

Fft1::~Fft1() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
}

void Fft1::forward(cplx* data) const { fftw_execute_dft(static_cast<fftw_plan>(fwd_), as_fftw(data), as_fftw(data)); }
void Fft1::backward(cplx* data) const {
  fftw_execute_dft(static_cast<fftw_plan>(bwd_), as_fftw(data), as_fftw(data));
}

ContactKineticBlocks::ContactKineticBlocks(const Grid& grid, double g1d) : n_(grid.n), g_(g1d) {
  if (grid.boundary != Boundary::periodic) throw DomainError("ContactKineticBlocks: periodic grid required");
  const std::vector<double> k = fft_wavenumbers(grid);
  const double rho = g1d / grid.length();
  blocks_.resize(n_);
#pragma omp parallel for schedule(dynamic)
  for (int kk = 0; kk < n_; ++kk) {
    Block& b = blocks_[kk];
    for (int m = 0; m < n_; ++m) {
      const int mp = ((kk - m) % n_ + n_) % n_;
      if (m < mp) b.pair_m.push_back(m);
      else if (m == mp) b.self_m.push_back(m);
    }
    const int np = static_cast<int>(b.pair_m.size());
    const int ns = np + static_cast<int>(b.self_m.size());
    Eigen::VectorXd d(ns), u(ns);
    b.d_anti.resize(np);
    for (int p = 0; p < np; ++p) {
      const int m = b.pair_m[p], mp = ((kk - m) % n_ + n_) % n_;
      d(p) = k[m] * k[m] + k[mp] * k[mp];
      b.d_anti(p) = d(p);
      u(p) = std::numbers::sqrt2;
    }
    for (std::size_t q = 0; q < b.self_m.size(); ++q) {
      const int m = b.self_m[q];
      d(np + q) = 2.0 * k[m] * k[m];
      u(np + q) = 1.0;
    }
    Eigen::MatrixXd a = rho * u * u.transpose();
    a.diagonal() += d;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    if (es.info() != Eigen::Success) throw NumericError("ContactKineticBlocks: block diagonalization failed");
    b.w = es.eigenvectors();
    b.lambda = es.eigenvalues();
  }
}

ContactKineticBlocks::Phases ContactKineticBlocks::phases(double tau) const {
  Phases ph;
  ph.tau = tau;
  ph.sym.resize(n_);
  ph.anti.resize(n_);
  for (int kk = 0; kk < n_; ++kk) {
    const Block& b = blocks_[kk];
    ph.sym[kk].resize(b.lambda.size());
    for (int i = 0; i < b.lambda.size(); ++i) ph.sym[kk](i) = std::polar(1.0, -b.lambda(i) * tau);
    ph.anti[kk].resize(b.d_anti.size());
    for (int i = 0; i < b.d_anti.size(); ++i) ph.anti[kk](i) = std::polar(1.0, -b.d_anti(i) * tau);
  }
  return ph;
}

void ContactKineticBlocks::apply_block(int kk, std::span<cplx* const> comps, const Phases& ph, Eigen::MatrixXd& s,
                                       Eigen::MatrixXd& y, Eigen::MatrixXcd& a) const {
  const Block& b = blocks_[kk];
  const int np = static_cast<int>(b.pair_m.size());
  const int ns = static_cast<int>(b.lambda.size());
  const int nc = static_cast<int>(comps.size());
  const double r2 = std::numbers::sqrt2 * 0.5;
  s.resize(ns, 2 * nc);
  a.resize(np, nc);
  for (int c = 0; c < nc; ++c) {
    const cplx* psi = comps[c];
    for (int p = 0; p < np; ++p) {
      const int m = b.pair_m[p], mp = ((kk - m) % n_ + n_) % n_;
      const cplx x = psi[static_cast<std::size_t>(m) * n_ + mp];
      const cplx z = psi[static_cast<std::size_t>(mp) * n_ + m];
      const cplx sv = (x + z) * r2;
      s(p, 2 * c) = sv.real();
      s(p, 2 * c + 1) = sv.imag();
      a(p, c) = (x - z) * r2 * ph.anti[kk](p);
    }
    for (std::size_t q = 0; q < b.self_m.size(); ++q) {
      const int m = b.self_m[q];
      const cplx x = psi[static_cast<std::size_t>(m) * n_ + m];
      s(np + q, 2 * c) = x.real();
      s(np + q, 2 * c + 1) = x.imag();
    }
  }
  y.noalias() = b.w.transpose() * s;
  for (int c = 0; c < nc; ++c)
    for (int i = 0; i < ns; ++i) {
      const cplx z = cplx(y(i, 2 * c), y(i, 2 * c + 1)) * ph.sym[kk](i);
      y(i, 2 * c) = z.real();
      y(i, 2 * c + 1) = z.imag();
    }
  s.noalias() = b.w * y;
  for (int c = 0; c < nc; ++c) {
    cplx* psi = comps[c];
    for (int p = 0; p < np; ++p) {
      const int m = b.pair_m[p], mp = ((kk - m) % n_ + n_) % n_;
      const cplx sv(s(p, 2 * c), s(p, 2 * c + 1));
      psi[static_cast<std::size_t>(m) * n_ + mp] = (sv + a(p, c)) * r2;
      psi[static_cast<std::size_t>(mp) * n_ + m] = (sv - a(p, c)) * r2;
    }
    for (std::size_t q = 0; q < b.self_m.size(); ++q) {
      const int m = b.self_m[q];
      psi[static_cast<std::size_t>(m) * n_ + m] = cplx(s(np + q, 2 * c), s(np + q, 2 * c + 1));
    }
  }
}

void ContactKineticBlocks::apply(std::span<cplx* const> comps, const Phases& ph, Exec exec) const {
  if (comps.empty()) return;
  if (exec == Exec::parallel) {
#pragma omp parallel
    {
      Eigen::MatrixXd s, y;
      Eigen::MatrixXcd a;
#pragma omp for schedule(static)
      for (int kk = 0; kk < n_; ++kk) apply_block(kk, comps, ph, s, y, a);
    }
  } else {
    Eigen::MatrixXd s, y;
    Eigen::MatrixXcd a;
    for (int kk = 0; kk < n_; ++kk) apply_block(kk, comps, ph, s, y, a);
  }
}

ContactKineticReference::ContactKineticReference(const Grid& grid, double g1d) : n_(grid.n) {
  if (grid.boundary != Boundary::periodic) throw DomainError("ContactKineticReference: periodic grid required");
  const std::vector<double> k = fft_wavenumbers(grid);
  const double rho = g1d / grid.length();
  for (int kk = 0; kk < n_; ++kk) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Constant(n_, n_, rho);
    for (int m = 0; m < n_; ++m) {
      const int mp = ((kk - m) % n_ + n_) % n_;
      a(m, m) += k[m] * k[m] + k[mp] * k[mp];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    w_.push_back(es.eigenvectors());
    lambda_.push_back(es.eigenvalues());
  }
}

void ContactKineticReference::apply(cplx* psi, double tau) const {
  std::vector<cplx> x(n_), y(n_);
  for (int kk = 0; kk < n_; ++kk) {
    const Eigen::MatrixXd& w = w_[kk];
    for (int m = 0; m < n_; ++m) x[m] = psi[static_cast<std::size_t>(m) * n_ + ((kk - m) % n_ + n_) % n_];
    for (int i = 0; i < n_; ++i) {
      cplx acc = 0.0;
      for (int m = 0; m < n_; ++m) acc += w(m, i) * x[m];
      y[i] = acc * std::polar(1.0, -lambda_[kk](i) * tau);
    }
    for (int m = 0; m < n_; ++m) {
      cplx acc = 0.0;
      for (int i = 0; i < n_; ++i) acc += w(m, i) * y[i];
      psi[static_cast<std::size_t>(m) * n_ + ((kk - m) % n_ + n_) % n_] = acc;
    }
  }
}

void apply_separable_phase(cplx* psi, const cplx* a, const cplx* b, int n, Exec exec) {
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      cplx* row = psi + static_cast<std::size_t>(i) * n;
      const cplx ai = a[i];
      for (int j = 0; j < n; ++j) row[j] *= ai * b[j];
    }
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) psi[static_cast<std::size_t>(i) * n + j] *= a[i] * b[j];
  }
}

std::pair<double, double> mode_weight(const cplx* psi, const double* phi, int n, double dx, Exec exec) {
  std::vector<double> w1(n), w2(n);
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (int j = 0; j < n; ++j) {
      cplx f = 0.0;
      for (int i = 0; i < n; ++i) f += phi[i] * psi[static_cast<std::size_t>(i) * n + j];
      w1[j] = std::norm(f);
    }
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      cplx g = 0.0;
      const cplx* row = psi + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) g += row[j] * phi[j];
      w2[i] = std::norm(g);
    }
  } else {
    for (int j = 0; j < n; ++j) {
      cplx f = 0.0;
      for (int i = 0; i < n; ++i) f += phi[i] * psi[static_cast<std::size_t>(i) * n + j];
      w1[j] = std::norm(f);
    }
    for (int i = 0; i < n; ++i) {
      cplx g = 0.0;
      for (int j = 0; j < n; ++j) g += psi[static_cast<std::size_t>(i) * n + j] * phi[j];
      w2[i] = std::norm(g);
    }
  }
  double s1 = 0.0, s2 = 0.0;
  for (int j = 0; j < n; ++j) {
    s1 += w1[j];
    s2 += w2[j];
  }
  const double dx3 = dx * dx * dx;
  return {s1 * dx3, s2 * dx3};
}

}  // namespace dws
