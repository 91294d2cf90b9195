#include "dws/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>

#include <Eigen/Dense>

namespace dws {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kMaxIter = 200;
constexpr double kRelTol = 1e-9;

// Internal parameters over the scaled abscissa u = (t - t0) / span:
// y = c + A exp(-g u) cos(2 pi f u + phi).
using Vec5 = Eigen::Matrix<double, 5, 1>;
enum { C, AMP, F, PHI, G };

struct Problem {
  std::vector<double> u, y, w;

  double sse(const Vec5& p) const {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double m = p[C] + p[AMP] * std::exp(-p[G] * u[i]) * std::cos(kTwoPi * p[F] * u[i] + p[PHI]);
      s += w[i] * (y[i] - m) * (y[i] - m);
    }
    return s;
  }

  // Normal matrix and gradient at p.
  void normal(const Vec5& p, Eigen::Matrix<double, 5, 5>& a, Vec5& g) const {
    a.setZero();
    g.setZero();
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double e = std::exp(-p[G] * u[i]);
      const double th = kTwoPi * p[F] * u[i] + p[PHI];
      const double cs = std::cos(th), sn = std::sin(th);
      Vec5 j;
      j[C] = 1.0;
      j[AMP] = e * cs;
      j[F] = -p[AMP] * e * sn * kTwoPi * u[i];
      j[PHI] = -p[AMP] * e * sn;
      j[G] = -u[i] * p[AMP] * e * cs;
      const double r = y[i] - (p[C] + p[AMP] * e * cs);
      a.noalias() += w[i] * j * j.transpose();
      g.noalias() += w[i] * r * j;
    }
  }
};

// Weighted least squares of y on (1, cos 2 pi f u, sin 2 pi f u).
double sinusoid_sse(const Problem& pr, double f, Eigen::Vector3d& coef) {
  Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < pr.u.size(); ++i) {
    const Eigen::Vector3d x(1.0, std::cos(kTwoPi * f * pr.u[i]), std::sin(kTwoPi * f * pr.u[i]));
    a.noalias() += pr.w[i] * x * x.transpose();
    b.noalias() += pr.w[i] * pr.y[i] * x;
  }
  coef = a.ldlt().solve(b);
  double s = 0.0;
  for (std::size_t i = 0; i < pr.u.size(); ++i) {
    const double m = coef[0] + coef[1] * std::cos(kTwoPi * f * pr.u[i]) + coef[2] * std::sin(kTwoPi * f * pr.u[i]);
    s += pr.w[i] * (pr.y[i] - m) * (pr.y[i] - m);
  }
  return s;
}

double wrap_phase(double p) {
  p = std::remainder(p, kTwoPi);
  return p <= -std::numbers::pi ? p + kTwoPi : p;
}

}  // namespace

double FitResult::operator()(double t) const {
  const double env = std::isinf(tau) ? 1.0 : std::exp(-(t - t0) / tau);
  return offset + amplitude * env * std::cos(kTwoPi * t / period + phase);
}

FitResult fit_damped_sinusoid(const std::vector<double>& t, const std::vector<double>& y,
                              const std::vector<double>& weights) {
  const std::size_t n = t.size();
  if (y.size() != n || (!weights.empty() && weights.size() != n))
    throw PreconditionError("fit_damped_sinusoid: t, y and weights must have equal length");
  if (n < 8) throw PreconditionError("fit_damped_sinusoid: need at least 8 samples");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(t[i]) || !std::isfinite(y[i])) throw DomainError("fit_damped_sinusoid: non-finite sample");
    if (!weights.empty() && !(weights[i] >= 0)) throw DomainError("fit_damped_sinusoid: negative weight");
  }

  std::vector<double> ts = t;
  std::sort(ts.begin(), ts.end());
  const double t0 = ts.front(), span = ts.back() - ts.front();
  std::vector<double> gaps;
  for (std::size_t i = 1; i < n; ++i)
    if (ts[i] > ts[i - 1]) gaps.push_back(ts[i] - ts[i - 1]);
  if (!(span > 0) || gaps.empty()) throw PreconditionError("fit_damped_sinusoid: samples must span a time interval");
  std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
  const double median_dt = gaps[gaps.size() / 2];

  Problem pr;
  pr.w = weights.empty() ? std::vector<double>(n, 1.0) : weights;
  pr.y = y;
  pr.u.resize(n);
  for (std::size_t i = 0; i < n; ++i) pr.u[i] = (t[i] - t0) / span;

  double wsum = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    wsum += pr.w[i];
    mean += pr.w[i] * y[i];
  }
  if (!(wsum > 0)) throw DegenerateDataError("fit_damped_sinusoid: all weights are zero");
  mean /= wsum;
  double baseline = 0.0;
  for (std::size_t i = 0; i < n; ++i) baseline += pr.w[i] * (y[i] - mean) * (y[i] - mean);
  if (baseline / wsum < 1e-12) throw DegenerateDataError("fit_damped_sinusoid: data are flat");

  // Periodogram, frequencies in cycles per span.
  const double f_lo = 0.5, f_hi = 0.5 * span / median_dt;
  const double df = 0.05;
  double best_f = f_lo, best_s = std::numeric_limits<double>::infinity();
  Eigen::Vector3d best_coef = Eigen::Vector3d::Zero(), coef;
  for (double f = f_lo; f <= f_hi + 1e-12; f += df) {
    const double s = sinusoid_sse(pr, f, coef);
    if (s < best_s) {
      best_s = s;
      best_f = f;
      best_coef = coef;
    }
  }
  if (best_f < 1.0) throw PreconditionError("fit_damped_sinusoid: samples span less than one period");

  Vec5 p;
  p << best_coef[0], std::hypot(best_coef[1], best_coef[2]), best_f, std::atan2(-best_coef[2], best_coef[1]), 0.0;
  double s = pr.sse(p);
  double lambda = 1e-3;
  int it = 0;
  bool converged = false;
  Eigen::Matrix<double, 5, 5> a;
  Vec5 g;
  for (; it < kMaxIter && !converged; ++it) {
    pr.normal(p, a, g);
    Eigen::Matrix<double, 5, 5> m = a;
    const double floor = 1e-15 * a.diagonal().maxCoeff();
    for (int k = 0; k < 5; ++k) m(k, k) += lambda * std::max(a(k, k), floor);
    const Vec5 step = m.ldlt().solve(g);
    double rel = 0.0;
    for (int k = 0; k < 5; ++k) rel = std::max(rel, std::abs(step[k]) / (std::abs(p[k]) + 1e-8));
    const Vec5 trial = p + step;
    const double st = pr.sse(trial);
    if (st <= s) {
      p = trial;
      s = st;
      lambda = std::max(lambda / 10.0, 1e-12);
    } else {
      lambda *= 10.0;
    }
    converged = rel < kRelTol || lambda > 1e16;
  }

  FitResult r;
  r.t0 = t0;
  r.iterations = it;
  r.offset = p[C];
  r.amplitude = p[AMP];
  double phi = p[PHI];
  if (r.amplitude < 0) {
    r.amplitude = -r.amplitude;
    phi += std::numbers::pi;
  }
  // Back to absolute time: cos(2 pi f (t - t0)/span + phi) = cos(2 pi t / T + phase).
  const double k = kTwoPi * t0 / span;
  r.period = span / p[F];
  r.phase = wrap_phase(phi - k * p[F]);
  r.tau = p[G] != 0.0 ? span / p[G] : std::numeric_limits<double>::infinity();
  r.residual_norm = std::sqrt(s);
  r.baseline_norm = std::sqrt(baseline);

  pr.normal(p, a, g);
  const int dof = static_cast<int>(n) - 5;
  const Eigen::Matrix<double, 5, 5> cov = (s / std::max(dof, 1)) * a.inverse();
  r.sigma_offset = std::sqrt(cov(C, C));
  r.sigma_amplitude = std::sqrt(cov(AMP, AMP));
  r.sigma_period = span * std::sqrt(cov(F, F)) / (p[F] * p[F]);
  r.sigma_phase = std::sqrt(std::max(0.0, cov(PHI, PHI) + k * k * cov(F, F) - 2.0 * k * cov(PHI, F)));
  r.sigma_tau = p[G] != 0.0 ? span * std::sqrt(cov(G, G)) / (p[G] * p[G]) : std::numeric_limits<double>::infinity();

  if (!converged) throw FitError("fit_damped_sinusoid: no convergence in 200 iterations", r);
  if (!(r.residual_norm < r.baseline_norm))
    throw FitError("fit_damped_sinusoid: no improvement over a constant", r);
  return r;
}

void write_fit_report(std::ostream& os, const FitResult& f) {
  char buf[128];
  auto row = [&](const char* name, double v, double s) {
    std::snprintf(buf, sizeof buf, "%s,%.10g,%.6g\n", name, v, s);
    os << buf;
  };
  os << "parameter,value,sigma\n";
  row("amplitude", f.amplitude, f.sigma_amplitude);
  row("period_s", f.period, f.sigma_period);
  row("phase_rad", f.phase, f.sigma_phase);
  row("tau_s", f.tau, f.sigma_tau);
  row("offset", f.offset, f.sigma_offset);
  row("t0_s", f.t0, 0.0);
  row("residual_norm", f.residual_norm, 0.0);
  row("baseline_norm", f.baseline_norm, 0.0);
}

double estimate_fidelity(double amplitude) {
  if (!(amplitude >= 0.0 && amplitude <= 1.0)) throw DomainError("estimate_fidelity: amplitude must lie in [0, 1]");
  return 0.5 * (1.0 + amplitude);
}

std::string format_fidelity(double f) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", f);
  return buf;
}

Budget amplitude_budget(const std::vector<std::pair<std::string, double>>& factors) {
  Budget b;
  for (const auto& [label, v] : factors) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("amplitude_budget: factor '" + label + "' outside [0, 1]");
    b.product *= v;
    b.factors.push_back({label, v, b.product});
  }
  return b;
}

void write_budget(std::ostream& os, const Budget& b) {
  char buf[160];
  os << "factor,value,running_product\n";
  for (const auto& f : b.factors) {
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f\n", f.label.c_str(), f.value, f.running);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "product,%.6f,%.6f\n", b.product, b.product);
  os << buf;
}

}  // namespace dws
