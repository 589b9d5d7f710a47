#include "semicomp/spline_basis.hpp"

#include <algorithm>
#include <string>

#include "semicomp/errors.hpp"

namespace semicomp {

void validate(const SplineConfig& cfg) {
  if (cfg.knot_count() < 2) throw ConfigurationError("spline needs at least two knots");
  if (cfg.degree < 1) throw ConfigurationError("spline degree must be at least 1");
  if (cfg.penalty_order < 1 || cfg.penalty_order >= cfg.num_terms()) {
    throw ConfigurationError("penalty order must satisfy 1 <= m < J~ (J~ = " +
                             std::to_string(cfg.num_terms()) + ")");
  }
  for (size_t i = 1; i < cfg.knots.size(); ++i) {
    if (!(cfg.knots[i - 1] < cfg.knots[i])) {
      throw ConfigurationError("explicit knots must be strictly increasing");
    }
  }
}

std::vector<double> knot_positions(const Partition& partition, const SplineConfig& cfg) {
  if (!cfg.knots.empty()) return cfg.knots;
  const int J = cfg.num_knots;
  std::vector<double> knots(static_cast<size_t>(J));
  const double a = partition.origin();
  const double b = partition.end();
  for (int j = 0; j < J; ++j) knots[static_cast<size_t>(j)] = a + (b - a) * j / (J - 1);
  knots.back() = b;
  return knots;
}

Eigen::VectorXd bspline_values(const std::vector<double>& knots, int degree, double x) {
  const int q = degree;
  const int J = static_cast<int>(knots.size());
  // Full knot vector with each boundary knot repeated q + 1 times.
  std::vector<double> t;
  t.reserve(static_cast<size_t>(J + 2 * q));
  for (int i = 0; i < q; ++i) t.push_back(knots.front());
  t.insert(t.end(), knots.begin(), knots.end());
  for (int i = 0; i < q; ++i) t.push_back(knots.back());
  const int n_basis = J - 1 + q;

  // Span s with t[s] <= x < t[s+1]; the right boundary belongs to the last span.
  int span = q + J - 2;
  if (x < knots.back()) {
    span = static_cast<int>(std::upper_bound(t.begin(), t.end(), x) - t.begin()) - 1;
    span = std::clamp(span, q, q + J - 2);
  }

  // Cox-de Boor triangle for the q + 1 non-zero functions on the span.
  std::vector<double> N(static_cast<size_t>(q + 1), 0.0), left(static_cast<size_t>(q + 1)),
      right(static_cast<size_t>(q + 1));
  N[0] = 1.0;
  for (int j = 1; j <= q; ++j) {
    left[static_cast<size_t>(j)] = x - t[static_cast<size_t>(span + 1 - j)];
    right[static_cast<size_t>(j)] = t[static_cast<size_t>(span + j)] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[static_cast<size_t>(r + 1)] + left[static_cast<size_t>(j - r)];
      const double temp = denom == 0.0 ? 0.0 : N[static_cast<size_t>(r)] / denom;
      N[static_cast<size_t>(r)] = saved + right[static_cast<size_t>(r + 1)] * temp;
      saved = left[static_cast<size_t>(j - r)] * temp;
    }
    N[static_cast<size_t>(j)] = saved;
  }

  Eigen::VectorXd values = Eigen::VectorXd::Zero(n_basis);
  for (int r = 0; r <= q; ++r) values(span - q + r) = N[static_cast<size_t>(r)];
  return values;
}

Eigen::MatrixXd build_basis(const Partition& partition, const SplineConfig& cfg) {
  validate(cfg);
  const int K = partition.num_intervals();
  const int n_terms = cfg.num_terms();
  if (n_terms > K) {
    throw ConfigurationError("more spline terms than intervals (J~ = " + std::to_string(n_terms) +
                             ", K = " + std::to_string(K) + ")");
  }
  const auto knots = knot_positions(partition, cfg);
  if (knots.front() > partition.cut(1) || knots.back() < partition.end()) {
    throw ConfigurationError("knots must cover the evaluation points tau_1..tau_K");
  }
  Eigen::MatrixXd B(n_terms, K);
  for (int k = 1; k <= K; ++k) B.col(k - 1) = bspline_values(knots, cfg.degree, partition.cut(k));
  return B;
}

Eigen::MatrixXd difference_matrix(int n, int order) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Identity(n, n);
  for (int r = 0; r < order; ++r) {
    const Eigen::Index rows = D.rows() - 1;
    D = (D.bottomRows(rows) - D.topRows(rows)).eval();
  }
  return D;
}

Eigen::MatrixXd build_penalty(int num_terms, int order) {
  if (order < 1 || order >= num_terms) {
    throw ConfigurationError("penalty order must satisfy 1 <= m < J~");
  }
  const Eigen::MatrixXd D = difference_matrix(num_terms, order);
  return D.transpose() * D;
}

}  // namespace semicomp
