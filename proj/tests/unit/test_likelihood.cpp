#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "semicomp/bivariate.hpp"
#include "semicomp/errors.hpp"
#include "semicomp/likelihood.hpp"

using namespace semicomp;

namespace {

ModelSpec spline_spec(ModelSpec spec, int num_knots = 5) {
  for (auto s : kSubmodels) {
    spec[s].baseline.mode = BaselineMode::BSpline;
    spec[s].baseline.spline = SplineConfig{.num_knots = num_knots, .degree = 3, .penalty_order = 2, .knots = {}};
  }
  return spec;
}

Eigen::VectorXd perturbed(const Eigen::VectorXd& x, std::mt19937_64& rng, double sd) {
  std::normal_distribution<double> z(0.0, sd);
  Eigen::VectorXd y = x;
  for (Eigen::Index j = 0; j < y.size(); ++j) y(j) += z(rng);
  return y;
}

SubjectPath single(int y1_prev, int y1, int y2) {
  SubjectPath p;
  p.id = "one";
  p.k_entry = p.k_exit = 2;
  IntervalObservation o;
  o.k = 2;
  o.y1_prev = y1_prev;
  o.y1 = y1;
  o.y2 = y2;
  p.observations.push_back(o);
  return p;
}

}  // namespace

TEST_CASE("single-interval contributions follow the six data scenarios") {
  const Model m(ModelSpec::defaults(testutil::width5_partition()));
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(m.num_params());
  phi(m.baseline_block(Submodel::Pi1).offset + 1) = -1.2;
  phi(m.baseline_block(Submodel::Pi2).offset + 1) = -0.7;
  phi(m.baseline_block(Submodel::Theta).offset + 1) = std::log(2.5);
  const double p1 = m.eval_pi1(phi, {}, 2);
  const double p20 = m.eval_pi2(phi, {}, 0, 2);
  const double p21 = m.eval_pi2(phi, {}, 1, 2);
  const double p12 = solve_pi12(p1, p20, 2.5);
  CHECK(subject_loglik(m, phi, single(0, 1, 1)) == doctest::Approx(std::log(p12)));
  CHECK(subject_loglik(m, phi, single(0, 1, 0)) == doctest::Approx(std::log(p1 - p12)));
  CHECK(subject_loglik(m, phi, single(0, 0, 1)) == doctest::Approx(std::log(p20 - p12)));
  CHECK(subject_loglik(m, phi, single(0, 0, 0)) == doctest::Approx(std::log(1 - p1 - p20 + p12)));
  CHECK(subject_loglik(m, phi, single(1, 1, 1)) == doctest::Approx(std::log(p21)));
  CHECK(subject_loglik(m, phi, single(1, 1, 0)) == doctest::Approx(std::log(1 - p21)));

  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 50; ++rep) {
    const auto x = perturbed(phi, rng, 1.5);
    double total = 0.0;
    for (auto [a, b] : {std::pair{0, 0}, {1, 0}, {0, 1}, {1, 1}}) total += std::exp(subject_loglik(m, x, single(0, a, b)));
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::exp(subject_loglik(m, x, single(1, 1, 1))) + std::exp(subject_loglik(m, x, single(1, 1, 0))) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("path log-likelihood factorizes over intervals") {
  const auto c = testutil::simulated("complex", 150, 21);
  const Model m(c.spec.truth_model);
  for (const auto& path : c.paths) {
    double parts = 0.0;
    for (const auto& o : path.observations) {
      SubjectPath one;
      one.id = path.id;
      one.observations = {o};
      parts += subject_loglik(m, c.spec.truth, one);
    }
    CHECK(subject_loglik(m, c.spec.truth, path) == doctest::Approx(parts).epsilon(1e-13));
  }
  const LikelihoodData data(m, c.paths);
  double direct = 0.0;
  for (const auto& path : c.paths) direct += subject_loglik(m, c.spec.truth, path);
  CHECK(loglik(data, c.spec.truth) == doctest::Approx(direct).epsilon(1e-12));
  int empty = 0;
  for (const auto& p : c.paths) empty += !p.contributes();
  CHECK(data.num_empty_subjects() == empty);
  CHECK(data.num_subjects() + empty == 150);
}

TEST_CASE("analytic gradient matches central differences") {
  const auto c = testutil::simulated("complex", 200, 5);
  std::mt19937_64 rng(77);
  SUBCASE("unstructured") {
    const LikelihoodData data(Model(c.spec.truth_model), c.paths);
    for (int rep = 0; rep < 5; ++rep) {
      const auto x = perturbed(c.spec.truth, rng, 0.3);
      const auto obj = evaluate_objective(data, x, {});
      const auto fd = testutil::central_difference([&](const Eigen::VectorXd& p) { return loglik(data, p); }, x);
      CHECK((obj.gradient - fd).norm() <= 1e-6 * std::max(1.0, fd.norm()));
    }
  }
  SUBCASE("spline with penalty") {
    const Model m(spline_spec(c.spec.truth_model, 8));
    const LikelihoodData data(m, c.paths);
    const PenaltyWeights w{0.7, 1.3, 2.0};
    Eigen::VectorXd x0 = m.params_from_curves({Eigen::VectorXd::LinSpaced(14, -4, -1.5),
                                               Eigen::VectorXd::LinSpaced(14, -3.5, -1), Eigen::VectorXd::Constant(14, 0.4)});
    for (int rep = 0; rep < 5; ++rep) {
      const auto x = perturbed(x0, rng, 0.3);
      const auto obj = evaluate_objective(data, x, w);
      const auto fd = testutil::central_difference(
          [&](const Eigen::VectorXd& p) { return penalized_loglik(data, p, w); }, x);
      CHECK((obj.gradient - fd).norm() <= 1e-6 * std::max(1.0, fd.norm()));
      CHECK(obj.penalized_loglik == doctest::Approx(obj.loglik - penalty_value(m, x, w)).epsilon(1e-14));
    }
  }
}

TEST_CASE("penalty algebra") {
  const auto c = testutil::simulated("simple", 100, 2);
  const Model m(spline_spec(c.spec.truth_model));
  const LikelihoodData data(m, c.paths);
  std::mt19937_64 rng(1);
  const auto x = perturbed(Eigen::VectorXd::Zero(m.num_params()), rng, 0.5);
  CHECK(penalized_loglik(data, x, {}) == loglik(data, x));
  const PenaltyWeights w{0.5, 0.0, 0.0};
  const PenaltyWeights w2{1.0, 0.0, 0.0};
  const auto b = m.baseline_block(Submodel::Pi1);
  const Eigen::VectorXd eta = x.segment(b.offset, b.size);
  const double quad = eta.dot(m.penalty(Submodel::Pi1) * eta);
  CHECK(penalized_loglik(data, x, w2) - penalized_loglik(data, x, w) == doctest::Approx(-0.5 * quad).epsilon(1e-10));
  const PenaltyWeights all{0.3, 0.6, 0.9};
  const auto g = penalty_gradient(m, x, all);
  const auto H = penalty_hessian(m, all);
  for (auto s : kSubmodels) {
    const auto bb = m.baseline_block(s);
    const Eigen::VectorXd e = x.segment(bb.offset, bb.size);
    CHECK((g.segment(bb.offset, bb.size) - 2 * all[s] * m.penalty(s) * e).norm() < 1e-14);
  }
  CHECK((H * x - g).norm() < 1e-12);
  // Linear baseline coefficients are not penalized with m = 2.
  Eigen::VectorXd lin = x;
  lin.segment(b.offset, b.size).setLinSpaced(-2.0, 1.0);
  CHECK(std::abs(penalty_value(m, lin, w)) < 1e-12);
  // Monotone in each weight.
  double prev = penalized_loglik(data, x, {});
  for (double l : {0.1, 0.5, 1.0, 5.0}) {
    const double v = penalized_loglik(data, x, {0.0, l, 0.0});
    CHECK(v <= prev);
    prev = v;
  }
  const Model unstructured(c.spec.truth_model);
  CHECK_THROWS_AS(validate(PenaltyWeights{0.0, 0.1, 0.0}, unstructured), ConfigurationError);
  CHECK_NOTHROW(validate(PenaltyWeights{}, unstructured));
  CHECK_THROWS_AS(validate(PenaltyWeights{-0.1, 0.0, 0.0}, m), ConfigurationError);
}

TEST_CASE("score report structure") {
  const auto c = testutil::simulated("complex", 120, 8);
  const Model m(spline_spec(c.spec.truth_model, 8));
  const LikelihoodData data(m, c.paths);
  const PenaltyWeights w = PenaltyWeights::common(1.5);
  const Eigen::VectorXd x =
      m.params_from_curves({Eigen::VectorXd::LinSpaced(14, -4, -1.5), Eigen::VectorXd::LinSpaced(14, -3.5, -1),
                            Eigen::VectorXd::Constant(14, 0.3)});
  const auto r = score_and_hessian(data, x, w);
  CHECK(r.subject_scores.rows() == data.num_subjects());
  CHECK((r.subject_scores.colwise().sum().transpose() - r.gradient).norm() < 1e-9 * std::max(1.0, r.gradient.norm()));
  CHECK((r.hessian - r.hessian.transpose()).norm() <= 1e-8 * r.hessian.norm());
  CHECK((r.hessian - (r.hessian_unpenalized - penalty_hessian(m, w))).norm() <= 1e-10 * r.hessian.norm());
  const auto r0 = score_and_hessian(data, x, {});
  CHECK((r0.hessian - r0.hessian_unpenalized).norm() == 0.0);
}

TEST_CASE("finite-difference Hessian agrees with a full second-difference Hessian") {
  const auto c = testutil::simulated("simple", 80, 13);
  const LikelihoodData data(Model(c.spec.truth_model), c.paths);
  const auto& x = c.spec.truth;
  const auto H = unpenalized_hessian(data, x);
  const int P = static_cast<int>(x.size());
  Eigen::MatrixXd slow(P, P);
  const double h = 1e-4;
  auto f = [&](const Eigen::VectorXd& p) { return loglik(data, p); };
  for (int a = 0; a < P; ++a)
    for (int b = a; b < P; ++b) {
      Eigen::VectorXd pp = x, pm = x, mp = x, mm = x;
      pp(a) += h; pp(b) += h;
      pm(a) += h; pm(b) -= h;
      mp(a) -= h; mp(b) += h;
      mm(a) -= h; mm(b) -= h;
      slow(a, b) = slow(b, a) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4 * h * h);
    }
  CHECK((H - slow).norm() <= 1e-4 * slow.norm());
}

TEST_CASE("evaluation is identical across thread counts and subject order") {
  const auto c = testutil::simulated("complex", 300, 3);
  const LikelihoodData data(Model(c.spec.truth_model), c.paths);
  const auto a = evaluate_objective(data, c.spec.truth, {}, 1);
  const auto b = evaluate_objective(data, c.spec.truth, {}, 4);
  CHECK(a.loglik == b.loglik);
  CHECK(a.gradient == b.gradient);
  const auto ra = score_and_hessian(data, c.spec.truth, {}, 1);
  const auto rb = score_and_hessian(data, c.spec.truth, {}, 3);
  CHECK(ra.hessian == rb.hessian);
  CHECK(ra.subject_scores == rb.subject_scores);
}

TEST_CASE("non-finite parameters name the subject") {
  const auto c = testutil::simulated("simple", 20, 3);
  const LikelihoodData data(Model(c.spec.truth_model), c.paths);
  Eigen::VectorXd x = c.spec.truth;
  x(0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_WITH_AS(loglik(data, x), doctest::Contains("subject '"), NumericalDomainError);
  CHECK_THROWS_AS(loglik(data, Eigen::VectorXd::Zero(3)), ConfigurationError);
}
