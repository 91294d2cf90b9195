#include "dws/units.hpp"

#include <cmath>
#include <numbers>

#include "dws/error.hpp"

namespace dws {

namespace {
constexpr double kHbar = 1.054571817e-34;
}

double Constants::k_R() const { return 2.0 * std::numbers::pi / lambda; }

double Constants::E_R() const {
  const double k = k_R();
  return hbar * hbar * k * k / (2.0 * mass);
}

double Constants::recoil_hz() const { return E_R() / h; }

void Constants::validate() const {
  if (!(hbar > 0) || !(h > 0) || !(mass > 0) || !(lambda > 0) || !(a_s >= 0))
    throw DomainError("constants must be positive (a_s non-negative)");
}

double recoil_energy(double lambda, double mass) {
  if (!(lambda > 0) || !(mass > 0)) throw DomainError("recoil_energy: lambda and mass must be positive");
  const double k = 2.0 * std::numbers::pi / lambda;
  return kHbar * kHbar * k * k / (2.0 * mass);
}

InternalUnits::InternalUnits(const Constants& c) {
  c.validate();
  energy_ = c.E_R();
  length_ = 1.0 / c.k_R();
  time_ = c.hbar / energy_;
  recoil_hz_ = c.recoil_hz();
}

double InternalUnits::to_internal(double si, Kind kind) const {
  switch (kind) {
    case Kind::energy: return si / energy_;
    case Kind::length: return si / length_;
    case Kind::time: return si / time_;
  }
  throw DomainError("to_internal: unknown quantity kind");
}

double InternalUnits::to_si(double value, Kind kind) const {
  switch (kind) {
    case Kind::energy: return value * energy_;
    case Kind::length: return value * length_;
    case Kind::time: return value * time_;
  }
  throw DomainError("to_si: unknown quantity kind");
}

}  // namespace dws
