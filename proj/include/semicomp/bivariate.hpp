#pragma once

namespace semicomp {

// Odds ratios this close to one are treated as exact independence.
inline constexpr double kThetaIndependenceTolerance = 1e-9;

// Joint probability pi_12 of two binary events with margins pi1, pi2 and
// cross-sectional odds ratio theta (the Fréchet-admissible root).
double solve_pi12(double pi1, double pi2, double theta);

struct Pi12Partials {
  double value = 0.0;
  double d_pi1 = 0.0;
  double d_pi2 = 0.0;
  double d_theta = 0.0;
};

Pi12Partials solve_pi12_with_partials(double pi1, double pi2, double theta);

// Cells of the 2x2 table for an interval entered in state (0,0).
struct CellProbs {
  double p00 = 1.0;
  double p10 = 0.0;
  double p01 = 0.0;
  double p11 = 0.0;

  double sum() const { return p00 + p10 + p01 + p11; }
  double odds_ratio() const { return (p11 * p00) / (p10 * p01); }
};

CellProbs cell_probs(double pi1, double pi2, double pi12);

}  // namespace semicomp
