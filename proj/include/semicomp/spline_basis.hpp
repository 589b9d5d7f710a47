#pragma once

#include <vector>

#include <Eigen/Dense>

#include "semicomp/timegrid.hpp"

namespace semicomp {

// J knots (boundary knots included), degree q, difference-penalty order m.
// When `knots` is non-empty it overrides the equally spaced default and
// num_knots is taken from its length.
struct SplineConfig {
  int num_knots = 5;
  int degree = 3;
  int penalty_order = 2;
  std::vector<double> knots;

  int knot_count() const { return knots.empty() ? num_knots : static_cast<int>(knots.size()); }
  // J~ = J - 1 + q
  int num_terms() const { return knot_count() - 1 + degree; }

  bool operator==(const SplineConfig&) const = default;
};

void validate(const SplineConfig& cfg);

// Knot sequence actually used: explicit knots, or J points equally spaced on [tau_0, tau_K].
std::vector<double> knot_positions(const Partition& partition, const SplineConfig& cfg);

// Values of the J~ B-spline basis functions at one point, boundary knots
// repeated to the degree. `x` must lie within the knot range.
Eigen::VectorXd bspline_values(const std::vector<double>& knots, int degree, double x);

// J~ x K matrix with entry (j, k) the j-th basis function evaluated at tau_k.
Eigen::MatrixXd build_basis(const Partition& partition, const SplineConfig& cfg);

// m-th order difference operator, (n - m) x n.
Eigen::MatrixXd difference_matrix(int n, int order);

// D_m^T D_m, so that eta^T P eta = sum_j (Delta^m eta_j)^2.
Eigen::MatrixXd build_penalty(int num_terms, int order);

}  // namespace semicomp
