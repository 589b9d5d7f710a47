#include "semicomp/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "semicomp/errors.hpp"

namespace semicomp {

Eigen::MatrixXd sandwich_covariance(const ScoreReport& report) {
  const Eigen::MatrixXd info = -report.hessian;
  const auto P = info.rows();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) throw InferenceError("negative penalized Hessian is singular");
  const Eigen::MatrixXd bread = lu.solve(Eigen::MatrixXd::Identity(P, P));
  const Eigen::MatrixXd meat = report.subject_scores.transpose() * report.subject_scores;
  Eigen::MatrixXd cov = bread * meat * bread.transpose();
  cov = 0.5 * (cov + cov.transpose()).eval();
  for (Eigen::Index j = 0; j < P; ++j) {
    if (cov(j, j) < -1e-10) throw NumericalDomainError("negative variance in sandwich covariance");
    cov(j, j) = std::max(cov(j, j), 0.0);
  }
  return cov;
}

std::vector<CoefficientRow> coefficient_table(const Model& model, const FitResult& fit,
                                              const Eigen::MatrixXd& covariance) {
  const bool have_cov = covariance.rows() == model.num_params();
  std::vector<CoefficientRow> rows;
  for (auto s : kSubmodels) {
    const auto block = model.slope_block(s);
    const bool exp_scale = model.link(s).exponentiable();
    for (int j = block.offset; j < block.offset + block.size; ++j) {
      CoefficientRow row;
      row.name = model.param_names()[static_cast<size_t>(j)];
      row.submodel = s;
      row.estimate = fit.params(j);
      row.se = have_cov ? std::sqrt(covariance(j, j)) : std::numeric_limits<double>::quiet_NaN();
      row.ci_low = row.estimate - kWaldZ * row.se;
      row.ci_high = row.estimate + kWaldZ * row.se;
      if (exp_scale) {
        row.exp_estimate = std::exp(row.estimate);
        row.exp_ci_low = std::exp(row.ci_low);
        row.exp_ci_high = std::exp(row.ci_high);
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<CurveEstimate> profile_curves(const Model& model, const Eigen::VectorXd& params,
                                          const Eigen::MatrixXd& covariance, Submodel which,
                                          const Covariates& profile) {
  Covariates x;
  for (const auto& name : model.covariate_names()) x[name] = 0.0;
  int y1_prev = 0;
  for (const auto& [name, value] : profile) {
    if (name == kPriorNonTerminal) {
      if (value != 0.0 && value != 1.0) throw ConfigurationError("y1_prev must be 0 or 1");
      y1_prev = static_cast<int>(value);
      continue;
    }
    if (!x.contains(name)) throw ConfigurationError("unknown covariate '" + name + "' in profile");
    x[name] = value;
  }

  const bool have_cov = covariance.rows() == model.num_params();
  const auto block = model.block(which);
  const Link& link = model.link(which);
  const auto coef = params.segment(block.offset, block.size);
  std::vector<CurveEstimate> out;
  for (int k = 1; k <= model.num_intervals(); ++k) {
    const Eigen::VectorXd c = model.feature_row(which, x, y1_prev, k);
    CurveEstimate e;
    e.k = k;
    e.link_estimate = c.dot(coef);
    e.link_scale_se = have_cov
                          ? std::sqrt(std::max(0.0, c.dot(covariance.block(block.offset, block.offset,
                                                                            block.size, block.size) *
                                                         c)))
                          : std::numeric_limits<double>::quiet_NaN();
    e.estimate = link.inverse(e.link_estimate);
    e.lower = link.inverse(e.link_estimate - kWaldZ * e.link_scale_se);
    e.upper = link.inverse(e.link_estimate + kWaldZ * e.link_scale_se);
    out.push_back(e);
  }
  return out;
}

std::vector<CurveEstimate> baseline_curves(const Model& model, const FitResult& fit,
                                           const Eigen::MatrixXd& covariance, Submodel which) {
  return profile_curves(model, fit.params, covariance, which, {});
}

}  // namespace semicomp
