#include "semicomp/fit.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "semicomp/errors.hpp"
#include "semicomp/inference.hpp"

namespace semicomp {

std::string_view to_string(FitStatus status) {
  switch (status) {
    case FitStatus::Converged: return "converged";
    case FitStatus::MaxIterations: return "max_iter";
    case FitStatus::LineSearchFailure: return "line_search_failure";
  }
  return "converged";
}

Eigen::VectorXd initial_parameters(const LikelihoodData& data) {
  const Model& model = data.model();
  const int K = model.num_intervals();
  Eigen::VectorXd n1 = Eigen::VectorXd::Zero(K), e1 = n1, n2 = n1, e2 = n1;
  for (const auto& c : data.cells()) {
    const auto k = c.k - 1;
    if (c.y1_prev == 0) {
      n1(k) += 1;
      e1(k) += c.y1;
    }
    n2(k) += 1;
    e2(k) += c.y2;
  }
  std::array<Eigen::VectorXd, 3> alphas;
  for (auto& a : alphas) a.resize(K);
  for (int k = 0; k < K; ++k) {
    alphas[0](k) = model.link(Submodel::Pi1).apply((e1(k) + 0.5) / (n1(k) + 1.0));
    alphas[1](k) = model.link(Submodel::Pi2).apply((e2(k) + 0.5) / (n2(k) + 1.0));
    alphas[2](k) = model.link(Submodel::Theta).apply(1.0);
  }
  return model.params_from_curves(alphas);
}

void check_identifiability(const LikelihoodData& data) {
  const Model& model = data.model();
  const auto& names = model.param_names();
  for (auto s : kSubmodels) {
    const auto& Z = data.design(s);
    const auto block = model.block(s);
    std::vector<Eigen::Index> rows;
    for (int c = 0; c < data.num_cells(); ++c) {
      if (data.uses(s, data.cells()[static_cast<size_t>(c)])) rows.push_back(c);
    }
    if (rows.empty()) {
      throw ConfigurationError(std::string(to_string(s)) + ": no contributing intervals");
    }
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(rows.size()), Z.cols());
    for (size_t r = 0; r < rows.size(); ++r) sub.row(static_cast<Eigen::Index>(r)) = Z.row(rows[r]);

    const auto slopes = model.slope_block(s);
    for (int j = 0; j < slopes.size; ++j) {
      const auto col = sub.col(slopes.offset - block.offset + j);
      if (col.maxCoeff() == col.minCoeff()) {
        throw ConfigurationError("design column '" + names[static_cast<size_t>(slopes.offset + j)] +
                                 "' has zero variance over the contributing intervals");
      }
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sub);
    qr.setThreshold(1e-10);
    if (qr.rank() < sub.cols()) {
      std::ostringstream msg;
      msg << std::string(to_string(s)) << ": rank-deficient design; collinear columns:";
      const auto& perm = qr.colsPermutation().indices();
      for (Eigen::Index j = qr.rank(); j < sub.cols(); ++j) {
        msg << " '" << names[static_cast<size_t>(block.offset + perm(j))] << "'";
      }
      throw ConfigurationError(msg.str());
    }
  }
}

double effective_df(const Eigen::MatrixXd& hessian_unpenalized, const Eigen::MatrixXd& hessian_penalized) {
  const Eigen::MatrixXd info = -hessian_penalized;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) {
    throw InferenceError("penalized Hessian is singular; use a larger lambda or a coarser partition");
  }
  return (lu.solve(-hessian_unpenalized)).trace();
}

std::vector<PenaltyWeights> default_lambda_grid() {
  std::vector<PenaltyWeights> grid;
  for (double l : {0.0, 0.1, 0.5, 1.0, 2.5, 5.0}) grid.push_back(PenaltyWeights::common(l));
  return grid;
}

namespace {

// Iterations between curvature recomputations from the finite-difference Hessian.
constexpr int kCurvatureRefresh = 10;
// Cap on the per-iteration change of any linear predictor component.
constexpr double kMaxPredictorStep = 5.0;

struct Point {
  Eigen::VectorXd x;
  ObjectiveValue value;
};

std::optional<ObjectiveValue> try_evaluate(const LikelihoodData& data, const Eigen::VectorXd& x,
                                           const PenaltyWeights& lambdas, int threads) {
  try {
    auto v = evaluate_objective(data, x, lambdas, threads);
    if (!std::isfinite(v.penalized_loglik) || !v.gradient.allFinite()) return std::nullopt;
    return v;
  } catch (const NumericalDomainError&) {
    return std::nullopt;
  }
}

// Inverse of the negative penalized Hessian with eigenvalues reflected and
// floored, so the quasi-Newton direction is an ascent direction even where
// the objective is not locally concave.
Eigen::MatrixXd inverse_curvature(const LikelihoodData& data, const Point& at, const PenaltyWeights& lambdas,
                                  int threads) {
  const int P = static_cast<int>(at.x.size());
  try {
    const Eigen::MatrixXd info = -(unpenalized_hessian(data, at.x, threads) - penalty_hessian(data.model(), lambdas));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(info);
    if (es.info() == Eigen::Success) {
      const double top = es.eigenvalues().cwiseAbs().maxCoeff();
      if (top > 0.0 && std::isfinite(top)) {
        const Eigen::VectorXd inv = es.eigenvalues().cwiseAbs().cwiseMax(1e-10 * top).cwiseInverse();
        return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
      }
    }
  } catch (const NumericalDomainError&) {
  }
  return Eigen::MatrixXd::Identity(P, P) / std::max(1.0, at.value.gradient.norm());
}

// Largest change of any baseline curve value or slope implied by a parameter step.
double predictor_change(const Model& model, const Eigen::VectorXd& step) {
  double out = 0.0;
  for (auto s : kSubmodels) {
    const auto b = model.baseline_block(s);
    const auto sl = model.slope_block(s);
    out = std::max(out, (model.basis(s).transpose() * step.segment(b.offset, b.size)).cwiseAbs().maxCoeff());
    if (sl.size > 0) out = std::max(out, step.segment(sl.offset, sl.size).cwiseAbs().maxCoeff());
  }
  return out;
}

int count_boundary(const Model& model, const Eigen::VectorXd& phi) {
  int n = 0;
  for (auto s : kSubmodels) {
    const Eigen::VectorXd alpha = model.baseline_curve(s, phi);
    for (Eigen::Index k = 0; k < alpha.size(); ++k) {
      const double r = model.link(s).inverse(alpha(k));
      const bool edge = s == Submodel::Theta ? (r < 1e-6 || r > 1e6) : (r < 1e-6 || r > 1.0 - 1e-6);
      if (edge) ++n;
    }
  }
  return n;
}

}  // namespace

FitResult maximize(const LikelihoodData& data, const PenaltyWeights& lambdas,
                   const std::optional<Eigen::VectorXd>& init, const OptimizerOptions& options) {
  const Model& model = data.model();
  validate(lambdas, model);
  if (data.num_subjects() == 0) throw ConfigurationError("no subject contributes a complete interval");
  check_identifiability(data);

  Point current;
  current.x = init ? *init : initial_parameters(data);
  if (current.x.size() != model.num_params()) {
    throw InitializationError("initial parameter vector has the wrong length");
  }
  {
    auto v = try_evaluate(data, current.x, lambdas, options.threads);
    if (!v) throw InitializationError("objective is not finite at the initial parameters");
    current.value = std::move(*v);
  }

  const int P = model.num_params();
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(P, P);
  Eigen::MatrixXd inv_curv;
  int last_refresh = -kCurvatureRefresh;

  FitResult result;
  result.lambda = lambdas;
  auto& conv = result.convergence;
  conv.status = FitStatus::MaxIterations;
  int floor_hits = current.value.floor_hits;

  for (int iter = 0;; ++iter) {
    const auto& g = current.value.gradient;
    conv.gradient_norm = g.norm();
    conv.iterations = iter;
    if (conv.gradient_norm < options.gradient_tolerance * std::max(1.0, std::abs(current.value.penalized_loglik))) {
      conv.status = FitStatus::Converged;
      break;
    }
    if (iter >= options.max_iterations) {
      conv.status = FitStatus::MaxIterations;
      break;
    }
    if (iter - last_refresh >= kCurvatureRefresh) {
      inv_curv = inverse_curvature(data, current, lambdas, options.threads);
      last_refresh = iter;
    }

    // Quasi-Newton direction, then a freshly computed curvature, then steepest ascent.
    std::optional<Point> next;
    for (int attempt = 0; attempt < 3 && !next; ++attempt) {
      if (attempt == 1) {
        if (last_refresh == iter) continue;
        inv_curv = inverse_curvature(data, current, lambdas, options.threads);
        last_refresh = iter;
      } else if (attempt == 2) {
        inv_curv = identity / std::max(1.0, g.norm());
      }
      Eigen::VectorXd dir = inv_curv * g;
      if (!(g.dot(dir) > 0.0)) {
        inv_curv = identity / std::max(1.0, g.norm());
        dir = inv_curv * g;
      }
      const double largest = predictor_change(model, dir);
      if (largest > kMaxPredictorStep) dir *= kMaxPredictorStep / largest;
      const double slope = g.dot(dir);
      double step = 1.0;
      for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
        Eigen::VectorXd x = current.x + step * dir;
        auto v = try_evaluate(data, x, lambdas, options.threads);
        if (v && v->penalized_loglik >= current.value.penalized_loglik + 1e-4 * step * slope) {
          next = Point{std::move(x), std::move(*v)};
          break;
        }
      }
    }
    if (!next) {
      conv.status = FitStatus::LineSearchFailure;
      break;
    }

    const Eigen::VectorXd s = next->x - current.x;
    const Eigen::VectorXd y = current.value.gradient - next->value.gradient;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd left = identity - rho * s * y.transpose();
      inv_curv = left * inv_curv * left.transpose() + rho * s * s.transpose();
    }
    current = std::move(*next);
    floor_hits = current.value.floor_hits;
  }

  result.params = current.x;
  result.gradient = current.value.gradient;
  result.warnings.probability_floor_hits = floor_hits;

  const auto report = score_and_hessian(data, result.params, lambdas, options.threads);
  result.loglik_unpenalized = report.loglik;
  result.loglik_penalized = report.penalized_loglik;
  result.hessian_unpenalized = report.hessian_unpenalized;
  result.hessian_penalized = report.hessian;
  result.warnings.boundary_estimates = count_boundary(model, result.params);
  if (result.warnings.boundary_estimates > 0) {
    result.warnings.messages.push_back(std::to_string(result.warnings.boundary_estimates) +
                                       " baseline estimates on the boundary of the parameter space");
  }
  if (floor_hits > 0) {
    result.warnings.messages.push_back(std::to_string(floor_hits) + " cell probabilities hit the floor");
  }

  try {
    result.edf = effective_df(report.hessian_unpenalized, report.hessian);
    result.aic = -2.0 * result.loglik_unpenalized + 2.0 * result.edf;
  } catch (const InferenceError& e) {
    result.edf = std::numeric_limits<double>::quiet_NaN();
    result.aic = std::numeric_limits<double>::quiet_NaN();
    result.warnings.messages.push_back(e.what());
  }
  try {
    result.covariance = sandwich_covariance(report);
  } catch (const std::runtime_error& e) {
    result.warnings.covariance_unavailable = true;
    result.warnings.messages.push_back(std::string("covariance unavailable: ") + e.what());
  }
  return result;
}

LambdaSelection select_lambda(const LikelihoodData& data, std::span<const PenaltyWeights> grid,
                              const OptimizerOptions& options) {
  if (grid.empty()) throw ConfigurationError("lambda grid is empty");
  for (const auto& l : grid) validate(l, data.model());

  LambdaSelection out;
  std::optional<Eigen::VectorXd> warm;
  std::optional<FitResult> best;
  for (size_t i = 0; i < grid.size(); ++i) {
    LambdaRow row;
    row.lambda = grid[i];
    try {
      FitResult fit = maximize(data, grid[i], warm, options);
      row.loglik = fit.loglik_unpenalized;
      row.aic = fit.aic;
      row.edf = fit.edf;
      row.status = fit.convergence.status;
      warm = fit.params;
      const bool admissible = row.status == FitStatus::Converged && std::isfinite(row.aic);
      if (admissible) {
        bool better = !best;
        if (best) {
          const double tie = 1e-9 * std::max(1.0, std::abs(best->aic));
          better = row.aic < best->aic - tie ||
                   (std::abs(row.aic - best->aic) <= tie && row.lambda.total() > best->lambda.total());
        }
        if (better) {
          best = std::move(fit);
          out.best_index = i;
        }
      }
    } catch (const std::runtime_error& e) {
      row.error = e.what();
      row.status = FitStatus::LineSearchFailure;
      row.aic = row.edf = row.loglik = std::numeric_limits<double>::quiet_NaN();
    }
    out.table.push_back(row);
  }

  if (!best) {
    std::ostringstream msg;
    msg << "no lambda produced an admissible fit:";
    for (const auto& row : out.table) {
      msg << " [lambda=(" << row.lambda.pi1 << "," << row.lambda.pi2 << "," << row.lambda.theta
          << ") status=" << to_string(row.status);
      if (!row.error.empty()) msg << " error=" << row.error;
      msg << "]";
    }
    throw ConvergenceError(msg.str());
  }
  out.best = std::move(*best);
  return out;
}

}  // namespace semicomp
