#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "semicomp/likelihood.hpp"

namespace semicomp {

enum class FitStatus { Converged, MaxIterations, LineSearchFailure };
std::string_view to_string(FitStatus status);

struct OptimizerOptions {
  int max_iterations = 500;
  // Converged when |gradient| < tolerance * max(1, |penalized loglik|).
  double gradient_tolerance = 1e-6;
  int threads = 1;
};

struct Convergence {
  int iterations = 0;
  double gradient_norm = 0.0;
  FitStatus status = FitStatus::Converged;
};

struct FitWarnings {
  int probability_floor_hits = 0;
  // Fitted baseline probabilities or odds ratios at the edge of their range.
  int boundary_estimates = 0;
  bool covariance_unavailable = false;
  std::vector<std::string> messages;
};

struct FitResult {
  Eigen::VectorXd params;
  double loglik_unpenalized = 0.0;
  double loglik_penalized = 0.0;
  double aic = 0.0;
  double edf = 0.0;
  PenaltyWeights lambda;
  Eigen::VectorXd gradient;  // penalized, at params
  Eigen::MatrixXd hessian_unpenalized;
  Eigen::MatrixXd hessian_penalized;
  Eigen::MatrixXd covariance;  // sandwich; empty when unavailable
  Convergence convergence;
  FitWarnings warnings;
};

// Baselines from pooled per-interval event frequencies ((events + 0.5) / (n + 1)),
// slopes at zero, theta baseline at theta = 1.
Eigen::VectorXd initial_parameters(const LikelihoodData& data);

// Rejects covariate columns that are constant over the contributing cells and
// rank-deficient submodel designs, naming the offending columns.
void check_identifiability(const LikelihoodData& data);

FitResult maximize(const LikelihoodData& data, const PenaltyWeights& lambdas,
                   const std::optional<Eigen::VectorXd>& init = std::nullopt,
                   const OptimizerOptions& options = {});

// trace(H(phi; 0) H^{-1}(phi; lambda))
double effective_df(const Eigen::MatrixXd& hessian_unpenalized, const Eigen::MatrixXd& hessian_penalized);

std::vector<PenaltyWeights> default_lambda_grid();

struct LambdaRow {
  PenaltyWeights lambda;
  double loglik = 0.0;
  double aic = 0.0;
  double edf = 0.0;
  FitStatus status = FitStatus::Converged;
  std::string error;  // non-empty when the fit threw
};

struct LambdaSelection {
  FitResult best;
  size_t best_index = 0;
  std::vector<LambdaRow> table;
};

// Fits every grid point in order, warm-starting each from the previous fit,
// and returns the AIC minimizer; ties go to the larger total penalty.
LambdaSelection select_lambda(const LikelihoodData& data, std::span<const PenaltyWeights> grid,
                              const OptimizerOptions& options = {});

}  // namespace semicomp
