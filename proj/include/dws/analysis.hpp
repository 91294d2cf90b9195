#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dws/error.hpp"

namespace dws {

// y = c + A exp(-(t - t_0)/tau) cos(2 pi t / T + phi), with t_0 the first
// sample so that A is the amplitude at the start of the record. A >= 0; the
// sign is absorbed into phi. tau is +inf when no decay is resolved.
struct FitResult {
  double amplitude = 0.0;
  double period = 0.0;  // s
  double phase = 0.0;   // rad, in (-pi, pi]
  double tau = 0.0;     // s
  double offset = 0.0;
  double sigma_amplitude = 0.0, sigma_period = 0.0, sigma_phase = 0.0, sigma_tau = 0.0, sigma_offset = 0.0;
  double t0 = 0.0;
  double residual_norm = 0.0;
  double baseline_norm = 0.0;  // constant fit
  int iterations = 0;

  double operator()(double t) const;
};

struct FitError : NumericError {
  FitError(const std::string& what, FitResult best) : NumericError(what), best(best) {}
  FitResult best;
};

struct DegenerateDataError : DomainError {
  using DomainError::DomainError;
};

// Periodogram over T in [2 median(dt), 2 span] followed by Levenberg-Marquardt.
// `weights` (optional, same length) multiply the squared residuals.
FitResult fit_damped_sinusoid(const std::vector<double>& t, const std::vector<double>& y,
                              const std::vector<double>& weights = {});

void write_fit_report(std::ostream& os, const FitResult& f);

// Probability of the target state after sqrt(SWAP): the oscillating part plus
// a random half of the rest.
double estimate_fidelity(double amplitude);
std::string format_fidelity(double f);

struct BudgetFactor {
  std::string label;
  double value = 1.0;
  double running = 1.0;  // product up to and including this factor
};

struct Budget {
  std::vector<BudgetFactor> factors;
  double product = 1.0;
  // Ratio of a measured value to the budget prediction.
  double compare(double measured) const { return product > 0 ? measured / product : 0.0; }
};

Budget amplitude_budget(const std::vector<std::pair<std::string, double>>& factors);
void write_budget(std::ostream& os, const Budget& b);

}  // namespace dws
