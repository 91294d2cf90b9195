#include "dws/ramp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "dws/error.hpp"

namespace dws {

RampSchedule::RampSchedule(std::vector<RampKnot> knots, Interpolation interp)
    : knots_(std::move(knots)), interp_(interp) {
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    knots_[i].params.validate();
    if (!std::isfinite(knots_[i].t)) throw DomainError("ramp knot time must be finite");
    if (i > 0 && !(knots_[i].t > knots_[i - 1].t))
      throw DomainError("ramp knot times must be strictly increasing (knot " + std::to_string(i) + ")");
  }
}

RampSchedule RampSchedule::constant(const LatticeParams& p) {
  return RampSchedule({RampKnot{0.0, p}}, Interpolation::linear);
}

double RampSchedule::start() const {
  if (knots_.empty()) throw DomainError("empty ramp schedule");
  return knots_.front().t;
}

double RampSchedule::end() const {
  if (knots_.empty()) throw DomainError("empty ramp schedule");
  return knots_.back().t;
}

const LatticeParams& RampSchedule::first() const {
  if (knots_.empty()) throw DomainError("empty ramp schedule");
  return knots_.front().params;
}

const LatticeParams& RampSchedule::last() const {
  if (knots_.empty()) throw DomainError("empty ramp schedule");
  return knots_.back().params;
}

LatticeParams RampSchedule::sample(double t) const {
  if (knots_.empty()) throw DomainError("sample_ramp: empty schedule");
  if (t <= knots_.front().t) return knots_.front().params;
  if (t >= knots_.back().t) return knots_.back().params;
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t,
                             [](double v, const RampKnot& k) { return v < k.t; });
  const RampKnot& b = *it;
  const RampKnot& a = *(it - 1);
  double u = (t - a.t) / (b.t - a.t);
  if (interp_ == Interpolation::smoothstep) u = u * u * (3.0 - 2.0 * u);
  auto mix = [u](double x, double y) { return x + (y - x) * u; };
  LatticeParams p;
  p.v_long = mix(a.params.v_long, b.params.v_long);
  p.v_short = mix(a.params.v_short, b.params.v_short);
  p.theta = mix(a.params.theta, b.params.theta);
  p.dtheta_spin = mix(a.params.dtheta_spin, b.params.dtheta_spin);
  p.f_y = mix(a.params.f_y, b.params.f_y);
  p.f_z = mix(a.params.f_z, b.params.f_z);
  return p;
}

RampSchedule RampSchedule::stretched(double new_duration) const {
  if (knots_.empty()) throw DomainError("stretched: empty schedule");
  if (!(new_duration > 0)) throw DomainError("stretched: duration must be positive");
  std::vector<RampKnot> k = knots_;
  const double t0 = start(), d = duration();
  if (d == 0.0) return *this;
  for (auto& kn : k) kn.t = (kn.t - t0) / d * new_duration;
  return RampSchedule(std::move(k), interp_);
}

LatticeParams sample_ramp(const RampSchedule& schedule, double t) { return schedule.sample(t); }

namespace defaults {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTiltPhase = -0.2;
constexpr double kMidFraction = 0.65;
}

LatticeParams prep_params(double dtheta_spin) {
  LatticeParams p;
  p.v_short = 40.0;
  p.v_long = 15.0;
  p.theta = -0.25 * kPi + kTiltPhase;
  p.dtheta_spin = dtheta_spin;
  return p;
}

LatticeParams final_params() {
  LatticeParams p;
  p.v_short = 0.0;
  p.v_long = 40.0;
  p.theta = -0.25 * kPi;
  p.dtheta_spin = 0.0;
  return p;
}

double dtheta_spin(const Constants& c) { return calibrate_dtheta_spin(prep_params(0.0), kDnuRfHz, c); }

RampSchedule merge_ramp(double duration_s, double dtheta) {
  LatticeParams a = prep_params(dtheta);
  LatticeParams m = a;
  m.v_short = 13.5;
  m.v_long = 35.5;
  return RampSchedule({{0.0, a}, {kMidFraction * duration_s, m}, {duration_s, final_params()}},
                      Interpolation::smoothstep);
}

RampSchedule merge_ramp(double duration_s, const Constants& c) { return merge_ramp(duration_s, dtheta_spin(c)); }

}  // namespace defaults

}  // namespace dws
