#include "dws/exchange.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "dws/error.hpp"

namespace dws {

namespace {

Eigen::Map<const Eigen::MatrixXd> as_block(const Eigen::VectorXd& v, int m) { return {v.data(), m, m}; }

// Orthonormal basis of span(cols) by Gram-Schmidt with one re-orthogonalization
// pass, dropping directions that are numerically dependent.
Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& s) {
  Eigen::MatrixXd q(s.rows(), s.cols());
  int k = 0;
  for (int j = 0; j < s.cols(); ++j) {
    Eigen::VectorXd v = s.col(j);
    const double n0 = v.norm();
    if (n0 == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i < k; ++i) v -= q.col(i).dot(v) * q.col(i);
    const double n1 = v.norm();
    if (n1 < 1e-10 * n0) continue;
    q.col(k++) = v / n1;
  }
  return q.leftCols(k);
}

}  // namespace

ExchangeSolver::ExchangeSolver(const SingleParticleSpectrum& s) : grid_(s.grid) {
  if (s.size() < 2) throw PreconditionError("ExchangeSolver: spectrum needs at least two states");
  const Eigen::MatrixXd h = single_particle_hamiltonian(s.potential, s.grid);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  if (es.info() != Eigen::Success) throw NumericError("ExchangeSolver: one-particle eigensolver failed");
  phi_ = es.eigenvectors();
  eps_ = es.eigenvalues();
  m_ = static_cast<int>(h.rows());
  overlap_eg_ = contact_overlap(s.orbital(1), s.orbital(0));

  x_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m_) * m_, 3);
  x_(0, 0) = 1.0;
  x_(1, 1) = x_(m_, 1) = 1.0 / std::numbers::sqrt2;
  x_(m_ + 1, 2) = 1.0;
}

// H0 is diagonal in the product eigenbasis; the contact term is (g/dx) on the
// x1 = x2 diagonal in position space.
Eigen::MatrixXd ExchangeSolver::apply(const Eigen::MatrixXd& c, double g1d) const {
  const Eigen::MatrixXd a = phi_ * c;
  Eigen::VectorXd d(m_);
  for (int i = 0; i < m_; ++i) d(i) = a.row(i).dot(phi_.row(i));
  d *= g1d / grid_.dx();
  Eigen::MatrixXd out = phi_.transpose() * d.asDiagonal() * phi_;
  for (int b = 0; b < m_; ++b)
    for (int a2 = 0; a2 < m_; ++a2) out(a2, b) += (eps_(a2) + eps_(b)) * c(a2, b);
  return out;
}

DressedExchange ExchangeSolver::solve(double g1d, double tol) {
  if (!(g1d >= 0)) throw DomainError("ExchangeSolver: g1d must be non-negative");
  const Eigen::Index dim = static_cast<Eigen::Index>(m_) * m_;
  const int nb = static_cast<int>(x_.cols());

  auto apply_cols = [&](const Eigen::MatrixXd& s) {
    Eigen::MatrixXd hs(dim, s.cols());
    for (int k = 0; k < s.cols(); ++k) {
      const Eigen::VectorXd col = s.col(k);
      const Eigen::MatrixXd r = apply(as_block(col, m_), g1d);
      hs.col(k) = Eigen::Map<const Eigen::VectorXd>(r.data(), dim);
    }
    return hs;
  };
  Eigen::VectorXd precond(dim);
  for (int b = 0; b < m_; ++b)
    for (int a = 0; a < m_; ++a) precond(a + static_cast<Eigen::Index>(b) * m_) = 1.0 / (eps_(a) + eps_(b) - 2.0 * eps_(0) + 1.0);

  // Reference for picking the triplet among Ritz vectors.
  Eigen::VectorXd ref = Eigen::VectorXd::Zero(dim);
  ref(1) = ref(m_) = 1.0 / std::numbers::sqrt2;

  Eigen::MatrixXd x = orthonormalize(x_);
  Eigen::MatrixXd p;
  Eigen::VectorXd theta;
  DressedExchange out;
  int pick = 0;
  double res = 1.0;
  const int max_iter = 500;
  int it = 0;
  for (; it < max_iter; ++it) {
    Eigen::MatrixXd s;
    if (it == 0) {
      s = x;
    } else {
      const Eigen::MatrixXd hx = apply_cols(x);
      Eigen::MatrixXd r = hx - x * theta.asDiagonal();
      res = r.col(pick).norm();
      if (res < tol) break;
      Eigen::MatrixXd w = precond.asDiagonal() * r;
      // Keep the iteration inside the symmetric sector.
      for (int k = 0; k < w.cols(); ++k) {
        Eigen::Map<Eigen::MatrixXd> blk(w.col(k).data(), m_, m_);
        const Eigen::MatrixXd sym = 0.5 * (blk + blk.transpose());
        blk = sym;
      }
      s.resize(dim, x.cols() + w.cols() + p.cols());
      s << x, w, p;
    }
    const Eigen::MatrixXd q = orthonormalize(s);
    const Eigen::MatrixXd hq = apply_cols(q);
    Eigen::MatrixXd small = q.transpose() * hq;
    small = 0.5 * (small + small.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(small);
    const Eigen::MatrixXd xn = q * es.eigenvectors().leftCols(nb);
    theta = es.eigenvalues().head(nb);
    if (it > 0) p = xn - x * (x.transpose() * xn);
    x = xn;
    pick = 0;
    double best = -1.0;
    for (int k = 0; k < nb; ++k) {
      const double o = std::abs(x.col(k).dot(ref));
      if (o > best) {
        best = o;
        pick = k;
      }
    }
  }
  if (it == max_iter) {
    std::ostringstream msg;
    msg << "ExchangeSolver: no convergence, residual " << res;
    throw NumericError(msg.str());
  }
  x_ = x;
  out.e_triplet = theta(pick);
  out.e_singlet = eps_(0) + eps_(1);
  out.u = out.e_triplet - out.e_singlet;
  out.u_first_order = 2.0 * g1d * overlap_eg_;
  out.iterations = it;
  out.residual = res;
  return out;
}

DressedExchange dressed_exchange(const SingleParticleSpectrum& s, double g1d) { return ExchangeSolver(s).solve(g1d); }

double calibrate_g1d(const SingleParticleSpectrum& s, double target_u) {
  if (!(target_u > 0)) throw DomainError("calibrate_g1d: target must be positive");
  ExchangeSolver solver(s);
  const double ov = contact_overlap(s.orbital(1), s.orbital(0));
  if (!(ov > 0)) throw PreconditionError("calibrate_g1d: g and e modes do not overlap");
  auto f = [&](double g) { return solver.solve(g).u - target_u; };
  double a = target_u / (2.0 * ov);
  double fa = f(a);
  double b = a, fb = fa;
  for (int i = 0; i < 40 && (fa < 0) == (fb < 0); ++i) {
    a = b;
    fa = fb;
    b = fa < 0 ? b * 1.25 : b / 1.25;
    fb = f(b);
  }
  if ((fa < 0) == (fb < 0)) throw NumericError("calibrate_g1d: could not bracket the target");
  if (a > b) {
    std::swap(a, b);
    std::swap(fa, fb);
  }
  boost::uintmax_t iters = 100;
  const auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, boost::math::tools::eps_tolerance<double>(44), iters);
  return 0.5 * (r.first + r.second);
}

ModeModel dressed_mode_model(const SingleParticleSpectrum& s, double g1d) {
  ModeModel m = build_mode_model(s, g1d);
  m.u_eg = dressed_exchange(s, g1d).u;
  return m;
}

}  // namespace dws
