#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "helpers.hpp"
#include "semicomp/errors.hpp"
#include "semicomp/inference.hpp"

using namespace semicomp;

TEST_CASE("coefficient table formatting fixture") {
  auto spec = ModelSpec::defaults(testutil::width5_partition());
  spec[Submodel::Pi1].terms = {{{"apoe"}}};
  spec[Submodel::Pi2].terms = {{{"y1_prev"}}};
  const Model m(spec);
  FitResult fit;
  fit.params = Eigen::VectorXd::Zero(m.num_params());
  const int j = m.slope_block(Submodel::Pi1).offset;
  // log(1.83) with the standard error implied by the interval (1.43, 2.34).
  const double se = (std::log(2.34) - std::log(1.43)) / (2 * kWaldZ);
  fit.params(j) = std::log(1.83);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(m.num_params(), m.num_params()) * 0.04;
  cov(j, j) = se * se;
  const auto rows = coefficient_table(m, fit, cov);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].name == "pi1.apoe");
  CHECK(rows[0].submodel == Submodel::Pi1);
  CHECK(*rows[0].exp_estimate == doctest::Approx(1.83));
  CHECK(*rows[0].exp_ci_low == doctest::Approx(1.43).epsilon(0.01));
  CHECK(*rows[0].exp_ci_high == doctest::Approx(2.34).epsilon(0.01));
  // Zero estimate: exp column 1, symmetric link-scale interval of width 2 * 1.96 * se.
  CHECK(rows[1].name == "pi2.y1_prev");
  CHECK(*rows[1].exp_estimate == 1.0);
  CHECK(rows[1].ci_low == doctest::Approx(-rows[1].ci_high));
  CHECK(rows[1].ci_high - rows[1].ci_low == doctest::Approx(2 * 1.96 * 0.2));
}

TEST_CASE("identity links report no exponentiated columns") {
  auto spec = ModelSpec::defaults(testutil::width5_partition());
  spec[Submodel::Theta].link = Link(LinkKind::Identity);
  spec[Submodel::Theta].terms = {{{"apoe"}}};
  const Model m(spec);
  FitResult fit;
  fit.params = Eigen::VectorXd::Zero(m.num_params());
  const auto rows = coefficient_table(m, fit, Eigen::MatrixXd::Identity(m.num_params(), m.num_params()));
  REQUIRE(rows.size() == 1);
  CHECK_FALSE(rows[0].exp_estimate.has_value());
}

TEST_CASE("curve bands") {
  const auto c = testutil::simulated("complex", 2000, 31);
  const Model m(c.spec.truth_model);
  const LikelihoodData data(m, c.paths);
  const auto fit = maximize(data, {});
  REQUIRE(fit.covariance.size() > 0);
  for (auto s : kSubmodels) {
    const auto curve = baseline_curves(m, fit, fit.covariance, s);
    REQUIRE(static_cast<int>(curve.size()) == m.num_intervals());
    const auto b = m.baseline_block(s);
    for (const auto& e : curve) {
      CHECK(e.lower <= e.estimate);
      CHECK(e.estimate <= e.upper);
      const int j = b.offset + e.k - 1;
      CHECK(e.link_estimate == doctest::Approx(fit.params(j)));
      CHECK(e.link_scale_se == doctest::Approx(std::sqrt(fit.covariance(j, j))));
      // Band endpoints are the inverse link of the link-scale band.
      CHECK(e.lower == doctest::Approx(m.link(s).inverse(e.link_estimate - 1.96 * e.link_scale_se)));
      CHECK(e.upper == doctest::Approx(m.link(s).inverse(e.link_estimate + 1.96 * e.link_scale_se)));
    }
  }
  // Rising terminal-event baseline in the truth is reproduced.
  const auto pi2 = baseline_curves(m, fit, fit.covariance, Submodel::Pi2);
  CHECK(pi2.back().estimate > pi2.front().estimate);
  int rises = 0;
  for (size_t k = 1; k < pi2.size(); ++k) rises += pi2[k].estimate > pi2[k - 1].estimate;
  CHECK(rises >= static_cast<int>(pi2.size()) - 3);

  // Log-link covariate effects multiply theta.
  const auto ref = baseline_curves(m, fit, fit.covariance, Submodel::Theta);
  const auto prof = profile_curves(m, fit.params, fit.covariance, Submodel::Theta, {{"apoe", 1.0}});
  const double beta = fit.params(m.slope_block(Submodel::Theta).offset);
  for (size_t k = 0; k < ref.size(); ++k) CHECK(prof[k].estimate == doctest::Approx(ref[k].estimate * std::exp(beta)));
  // Profiles use the covariance of baseline and slope together.
  const auto b = m.block(Submodel::Pi2);
  const auto y1 = profile_curves(m, fit.params, fit.covariance, Submodel::Pi2, {{"y1_prev", 1.0}, {"apoe", 1.0}});
  const Eigen::VectorXd row = m.feature_row(Submodel::Pi2, {{"apoe", 1.0}, {"female", 0.0}, {"widowed", 0.0}}, 1, 4);
  const double var = row.dot(fit.covariance.block(b.offset, b.offset, b.size, b.size) * row);
  CHECK(y1[3].link_scale_se == doctest::Approx(std::sqrt(var)));

  CHECK_THROWS_AS(profile_curves(m, fit.params, fit.covariance, Submodel::Pi1, {{"bogus", 1.0}}), ConfigurationError);
  const auto no_cov = profile_curves(m, fit.params, Eigen::MatrixXd(), Submodel::Pi1, {});
  CHECK(std::isnan(no_cov[0].lower));
}

TEST_CASE("sandwich variance agrees with inverse information for a correct model") {
  const auto c = testutil::simulated("simple", 5000, 77);
  const LikelihoodData data(Model(c.spec.truth_model), c.paths);
  const auto fit = maximize(data, {});
  const Eigen::MatrixXd inv_info = (-fit.hessian_penalized).inverse();
  const auto slopes = data.model().slope_block(Submodel::Pi2);
  for (int j = slopes.offset; j < slopes.offset + slopes.size; ++j) {
    const double ratio = std::sqrt(fit.covariance(j, j) / inv_info(j, j));
    CHECK(ratio == doctest::Approx(1.0).epsilon(0.10));
  }
  const auto s1 = data.model().slope_block(Submodel::Pi1);
  for (int j = s1.offset; j < s1.offset + s1.size; ++j)
    CHECK(std::sqrt(fit.covariance(j, j) / inv_info(j, j)) == doctest::Approx(1.0).epsilon(0.10));
}

TEST_CASE("covariance is invariant to subject order") {
  const auto c = testutil::simulated("simple", 600, 19);
  const Model m(c.spec.truth_model);
  const LikelihoodData data(m, c.paths);
  const auto fit = maximize(data, {});
  auto shuffled = c.paths;
  std::mt19937_64 rng(2);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const LikelihoodData data2(m, shuffled);
  const auto r1 = score_and_hessian(data, fit.params, {});
  const auto r2 = score_and_hessian(data2, fit.params, {});
  const auto v1 = sandwich_covariance(r1), v2 = sandwich_covariance(r2);
  CHECK(v1 == v2);

  ScoreReport bad = r1;
  bad.hessian.setZero();
  CHECK_THROWS_AS(sandwich_covariance(bad), InferenceError);
}

TEST_CASE("rescaled covariates map estimates and standard errors by the affine rule") {
  auto c = testutil::simulated("simple", 1500, 23);
  const Model m(c.spec.truth_model);
  const auto fit = maximize(LikelihoodData(m, c.paths), {});
  for (auto& p : c.paths)
    for (auto& o : p.observations) o.covariates["female"] *= 2.0;
  const auto fit2 = maximize(LikelihoodData(m, c.paths), {});
  const int j = m.slope_block(Submodel::Pi1).offset;  // pi1.female
  CHECK(fit2.params(j) * 2.0 == doctest::Approx(fit.params(j)).epsilon(1e-4));
  CHECK(std::sqrt(fit2.covariance(j, j)) * 2.0 == doctest::Approx(std::sqrt(fit.covariance(j, j))).epsilon(1e-3));
  CHECK(fit2.loglik_unpenalized == doctest::Approx(fit.loglik_unpenalized).epsilon(1e-9));
}
