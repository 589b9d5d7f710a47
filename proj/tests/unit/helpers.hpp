#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "semicomp/likelihood.hpp"
#include "semicomp/simulate.hpp"
#include "semicomp/timegrid.hpp"

namespace testutil {

// Root of v (1 - p1 - p2 + v) = theta (p1 - v)(p2 - v) inside the Frechet
// interval, by bisection in long double. Independent of the closed form.
inline double pi12_by_bisection(double p1, double p2, double theta) {
  long double lo = std::max(0.0L, static_cast<long double>(p1) + p2 - 1.0L);
  long double hi = std::min<long double>(p1, p2);
  auto f = [&](long double v) { return v * (1.0L - p1 - p2 + v) - theta * (p1 - v) * (p2 - v); };
  // f is increasing on the interval: f(lo) <= 0 <= f(hi).
  for (int i = 0; i < 200; ++i) {
    const long double mid = 0.5L * (lo + hi);
    (f(mid) < 0.0L ? lo : hi) = mid;
  }
  return static_cast<double>(0.5L * (lo + hi));
}

inline semicomp::Partition width5_partition() { return semicomp::Partition::equally_spaced(65.0, 5.0, 7); }

struct Cohort {
  semicomp::ScenarioSpec spec;
  std::vector<semicomp::SubjectRecord> records;
  std::vector<semicomp::SubjectPath> paths;
};

inline Cohort simulated(const std::string& preset, int n, std::uint64_t seed) {
  Cohort c;
  c.spec = semicomp::scenario_preset(preset);
  c.spec.n_subjects = n;
  c.spec.seed = seed;
  c.records = semicomp::simulate_cohort(c.spec).records;
  c.paths = semicomp::discretize_all(c.records, c.spec.truth_model.partition, semicomp::CensorMode::DropPartial);
  return c;
}

inline Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                          const Eigen::VectorXd& x, double rel_step = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = rel_step * std::max(1.0, std::abs(x(j)));
    Eigen::VectorXd xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    g(j) = (f(xp) - f(xm)) / (2 * h);
  }
  return g;
}

}  // namespace testutil
