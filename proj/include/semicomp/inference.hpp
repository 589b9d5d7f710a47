#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "semicomp/fit.hpp"
#include "semicomp/likelihood.hpp"
#include "semicomp/model.hpp"

namespace semicomp {

// Two-sided 95% normal quantile used for every Wald interval and band.
inline constexpr double kWaldZ = 1.96;

// H^{-1} (sum_i U_i U_i^T) H^{-1} with H the negative penalized Hessian;
// diagonal entries are squared standard errors of the estimate.
Eigen::MatrixXd sandwich_covariance(const ScoreReport& report);

struct CoefficientRow {
  std::string name;
  Submodel submodel = Submodel::Pi1;
  double estimate = 0.0;
  double se = 0.0;
  double ci_low = 0.0;   // link scale
  double ci_high = 0.0;  // link scale
  // Odds-ratio / rate-ratio scale, present for logit and log links.
  std::optional<double> exp_estimate;
  std::optional<double> exp_ci_low;
  std::optional<double> exp_ci_high;
};

// One row per slope coefficient (baselines are reported as curves).
std::vector<CoefficientRow> coefficient_table(const Model& model, const FitResult& fit,
                                              const Eigen::MatrixXd& covariance);

struct CurveEstimate {
  int k = 0;
  double estimate = 0.0;  // response scale
  double lower = 0.0;
  double upper = 0.0;
  double link_estimate = 0.0;
  double link_scale_se = 0.0;
};

// Reference curve: all covariates zero, y1_prev = 0.
std::vector<CurveEstimate> baseline_curves(const Model& model, const FitResult& fit,
                                           const Eigen::MatrixXd& covariance, Submodel which);

// Curve for a covariate profile; unspecified covariates are zero and
// "y1_prev" may be set for pi2. Bands use the covariance of every involved
// coefficient. With an empty covariance the bands are NaN.
std::vector<CurveEstimate> profile_curves(const Model& model, const Eigen::VectorXd& params,
                                          const Eigen::MatrixXd& covariance, Submodel which,
                                          const Covariates& profile);

}  // namespace semicomp
