#include "semicomp/bivariate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "semicomp/errors.hpp"

namespace semicomp {
namespace {

void check_inputs(double pi1, double pi2, double theta) {
  if (!(pi1 >= 0.0 && pi1 < 1.0) || !(pi2 >= 0.0 && pi2 < 1.0)) {
    throw NumericalDomainError("margins must lie in [0, 1)");
  }
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw NumericalDomainError("odds ratio must be positive and finite");
  }
}

// Minus-root of the odds-ratio quadratic written as
//   2 theta pi1 pi2 / (1 + a + sqrt((1 + a)^2 - 4 theta (theta - 1) pi1 pi2)),
// a = (pi1 + pi2)(theta - 1). Rationalizing removes the cancellation near theta = 1.
double minus_root(double pi1, double pi2, double theta) {
  const double d = theta - 1.0;
  const double a = (pi1 + pi2) * d;
  const double disc = (1.0 + a) * (1.0 + a) - 4.0 * theta * d * pi1 * pi2;
  if (disc < -1e-12) {
    throw NumericalDomainError("negative discriminant in pi12 root (" + std::to_string(disc) + ")");
  }
  const double denom = 1.0 + a + std::sqrt(std::max(disc, 0.0));
  if (!(denom > 0.0)) return std::min(pi1, pi2);
  const double v = 2.0 * theta * pi1 * pi2 / denom;
  return std::clamp(v, std::max(0.0, pi1 + pi2 - 1.0), std::min(pi1, pi2));
}

// When pi1 + pi2 > 1 the joint probability sits just above pi1 + pi2 - 1 for small
// theta. Flipping both outcomes keeps the odds ratio and solves for p00 instead,
// which is small and carries full relative precision.
double stable_root(double pi1, double pi2, double theta) {
  if (pi1 + pi2 <= 1.0) return minus_root(pi1, pi2, theta);
  const double lower = pi1 + pi2 - 1.0;
  const double p00 = minus_root(1.0 - pi1, 1.0 - pi2, theta);
  return std::clamp(lower + p00, lower, std::min(pi1, pi2));
}

}  // namespace

double solve_pi12(double pi1, double pi2, double theta) {
  check_inputs(pi1, pi2, theta);
  if (std::abs(theta - 1.0) < kThetaIndependenceTolerance) return pi1 * pi2;
  return stable_root(pi1, pi2, theta);
}

Pi12Partials solve_pi12_with_partials(double pi1, double pi2, double theta) {
  check_inputs(pi1, pi2, theta);
  Pi12Partials out;
  out.value = stable_root(pi1, pi2, theta);
  // Implicit differentiation of v p00 - theta p10 p01 = 0.
  const double v = out.value;
  const double p10 = pi1 - v;
  const double p01 = pi2 - v;
  const double p00 = 1.0 - pi1 - pi2 + v;
  const double dv = p00 + v + theta * (p10 + p01);
  out.d_pi1 = (v + theta * p01) / dv;
  out.d_pi2 = (v + theta * p10) / dv;
  out.d_theta = p10 * p01 / dv;
  return out;
}

CellProbs cell_probs(double pi1, double pi2, double pi12) {
  CellProbs c;
  c.p11 = pi12;
  c.p10 = pi1 - pi12;
  c.p01 = pi2 - pi12;
  c.p00 = 1.0 - pi1 - pi2 + pi12;
  constexpr double tol = -1e-12;
  if (c.p00 < tol || c.p10 < tol || c.p01 < tol || c.p11 < tol) {
    throw NumericalDomainError("cell probability below zero; margins and pi12 violate the Fréchet bounds");
  }
  return c;
}

}  // namespace semicomp
