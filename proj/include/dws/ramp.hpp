#pragma once

#include <vector>

#include "dws/superlattice.hpp"

namespace dws {

enum class Interpolation { linear, smoothstep };

struct RampKnot {
  double t = 0.0;  // s
  LatticeParams params;
};

class RampSchedule {
 public:
  RampSchedule() = default;
  RampSchedule(std::vector<RampKnot> knots, Interpolation interp);

  static RampSchedule constant(const LatticeParams& p);

  const std::vector<RampKnot>& knots() const { return knots_; }
  Interpolation interpolation() const { return interp_; }
  bool empty() const { return knots_.empty(); }
  double start() const;
  double end() const;
  double duration() const { return end() - start(); }

  LatticeParams sample(double t) const;
  const LatticeParams& first() const;
  const LatticeParams& last() const;

  // Same shape, knot times rescaled so the ramp lasts `new_duration`, starting at 0.
  RampSchedule stretched(double new_duration) const;

 private:
  std::vector<RampKnot> knots_;
  Interpolation interp_ = Interpolation::smoothstep;
};

LatticeParams sample_ramp(const RampSchedule& schedule, double t);

namespace defaults {

LatticeParams prep_params(double dtheta_spin);
LatticeParams final_params();
// Differential RF shift between sites in the preparation configuration.
inline constexpr double kDnuRfHz = 20e3;
double dtheta_spin(const Constants& c = Constants{});
RampSchedule merge_ramp(double duration_s, double dtheta_spin);
RampSchedule merge_ramp(double duration_s = 500e-6, const Constants& c = Constants{});

}  // namespace defaults

}  // namespace dws
