#include "semicomp/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "semicomp/bivariate.hpp"
#include "semicomp/errors.hpp"
#include "semicomp/parallel.hpp"

namespace semicomp {

double PenaltyWeights::operator[](Submodel s) const {
  switch (s) {
    case Submodel::Pi1: return pi1;
    case Submodel::Pi2: return pi2;
    case Submodel::Theta: return theta;
  }
  return 0.0;
}

void validate(const PenaltyWeights& lambdas, const Model& model) {
  for (auto s : kSubmodels) {
    const double l = lambdas[s];
    if (!(l >= 0.0) || !std::isfinite(l)) {
      throw ConfigurationError("penalty weight for " + std::string(to_string(s)) +
                               " must be a finite non-negative number");
    }
    if (l != 0.0 && !model.penalized(s)) {
      throw ConfigurationError("penalty weight for " + std::string(to_string(s)) +
                               " is nonzero but its baseline is unstructured");
    }
  }
}

namespace {

double margin(const Link& link, double lp, double& derivative) {
  const double p = link.inverse(lp);
  derivative = link.inverse_derivative(lp);
  if (!(p >= 0.0 && p < 1.0)) {
    throw NumericalDomainError("probability " + std::to_string(p) + " outside [0, 1)");
  }
  return p;
}

}  // namespace

IntervalTerm interval_term(const Model& model, int y1_prev, int y1, int y2, double lp_pi1, double lp_pi2,
                           double lp_theta) {
  IntervalTerm out;
  double dp2 = 0.0;
  const double p2 = margin(model.link(Submodel::Pi2), lp_pi2, dp2);

  if (y1_prev == 1) {
    double c = y2 ? p2 : 1.0 - p2;
    double dc = y2 ? dp2 : -dp2;
    if (c < kProbabilityFloor) {
      out.floored = true;
      c = kProbabilityFloor;
    }
    out.log_contribution = std::log(c);
    out.d_linear_predictor = {0.0, dc / c, 0.0};
    return out;
  }

  double dp1 = 0.0;
  const double p1 = margin(model.link(Submodel::Pi1), lp_pi1, dp1);
  const Link& theta_link = model.link(Submodel::Theta);
  const double theta = theta_link.inverse(lp_theta);
  const double dtheta = theta_link.inverse_derivative(lp_theta);
  const auto v = solve_pi12_with_partials(p1, p2, theta);

  // Cell value and its partials with respect to (pi1, pi2, theta).
  double c = 0.0, c1 = 0.0, c2 = 0.0, ct = 0.0;
  if (y1 && y2) {
    c = v.value;
    c1 = v.d_pi1;
    c2 = v.d_pi2;
    ct = v.d_theta;
  } else if (y1) {
    c = p1 - v.value;
    c1 = 1.0 - v.d_pi1;
    c2 = -v.d_pi2;
    ct = -v.d_theta;
  } else if (y2) {
    c = p2 - v.value;
    c1 = -v.d_pi1;
    c2 = 1.0 - v.d_pi2;
    ct = -v.d_theta;
  } else {
    c = 1.0 - p1 - p2 + v.value;
    c1 = v.d_pi1 - 1.0;
    c2 = v.d_pi2 - 1.0;
    ct = v.d_theta;
  }
  if (c < -1e-12) {
    throw NumericalDomainError("negative interval likelihood contribution");
  }
  if (c < kProbabilityFloor) {
    out.floored = true;
    c = kProbabilityFloor;
  }
  out.log_contribution = std::log(c);
  out.d_linear_predictor = {c1 / c * dp1, c2 / c * dp2, ct / c * dtheta};
  return out;
}

double subject_loglik(const Model& model, const Eigen::VectorXd& phi, const SubjectPath& path) {
  double total = 0.0;
  for (const auto& obs : path.observations) {
    if (obs.y2_prev != 0) throw DataError("subject '" + path.id + "': observation after the terminal event");
    double lp1 = 0.0, lpt = 0.0;
    if (obs.y1_prev == 0) {
      lp1 = model.linear_predictor(Submodel::Pi1, phi, obs.covariates, 0, obs.k);
      lpt = model.linear_predictor(Submodel::Theta, phi, obs.covariates, 0, obs.k);
    }
    const double lp2 = model.linear_predictor(Submodel::Pi2, phi, obs.covariates, obs.y1_prev, obs.k);
    total += interval_term(model, obs.y1_prev, obs.y1, obs.y2, lp1, lp2, lpt).log_contribution;
  }
  return total;
}

LikelihoodData::LikelihoodData(Model model, std::span<const SubjectPath> paths) : model_(std::move(model)) {
  int n_cells = 0;
  for (const auto& p : paths) n_cells += static_cast<int>(p.observations.size());
  for (auto s : kSubmodels) design_[index_of(s)].resize(n_cells, model_.block(s).size);
  cells_.reserve(static_cast<size_t>(n_cells));

  // Subjects are stored sorted by id so that sums do not depend on input order.
  std::vector<size_t> order(paths.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return paths[a].id < paths[b].id; });

  int row = 0;
  subject_start_.push_back(0);
  for (size_t idx : order) {
    const auto& p = paths[idx];
    if (!p.contributes()) {
      ++empty_subjects_;
      continue;
    }
    const int subject = static_cast<int>(subject_ids_.size());
    for (const auto& obs : p.observations) {
      if (obs.y2_prev != 0) throw DataError("subject '" + p.id + "': observation after the terminal event");
      if (obs.y1 < obs.y1_prev) throw DataError("subject '" + p.id + "': non-terminal status reverted");
      cells_.push_back(Cell{subject, obs.k, static_cast<std::uint8_t>(obs.y1_prev),
                            static_cast<std::uint8_t>(obs.y1), static_cast<std::uint8_t>(obs.y2)});
      for (auto s : kSubmodels) {
        auto& Z = design_[index_of(s)];
        Eigen::VectorXd r = model_.feature_row(s, obs.covariates, obs.y1_prev, obs.k);
        Z.row(row) = r.transpose();
      }
      ++row;
    }
    subject_ids_.push_back(p.id);
    subject_start_.push_back(row);
  }
}

SubjectEvaluation evaluate_subjects(const LikelihoodData& data, const Eigen::VectorXd& phi, bool with_scores,
                                    int threads) {
  const Model& model = data.model();
  if (phi.size() != model.num_params()) throw ConfigurationError("parameter vector has the wrong length");
  const int N = data.num_subjects();
  SubjectEvaluation out;
  out.loglik = Eigen::VectorXd::Zero(N);
  if (with_scores) out.scores = RowMatrix::Zero(N, model.num_params());
  std::vector<int> floors(static_cast<size_t>(N), 0);

  std::array<Block, 3> blocks{};
  for (auto s : kSubmodels) blocks[index_of(s)] = model.block(s);

  parallel_for(N, threads, [&](int i) {
    const auto [first, last] = data.subject_cells(i);
    double total = 0.0;
    for (int c = first; c < last; ++c) {
      const auto& cell = data.cells()[static_cast<size_t>(c)];
      std::array<double, 3> lp{0.0, 0.0, 0.0};
      for (auto s : kSubmodels) {
        if (!data.uses(s, cell)) continue;
        const auto b = blocks[index_of(s)];
        lp[index_of(s)] = data.design(s).row(c).dot(phi.segment(b.offset, b.size));
      }
      IntervalTerm term;
      try {
        term = interval_term(model, cell.y1_prev, cell.y1, cell.y2, lp[0], lp[1], lp[2]);
      } catch (const NumericalDomainError& e) {
        throw NumericalDomainError("subject '" + data.subject_ids()[static_cast<size_t>(i)] + "', interval " +
                                   std::to_string(cell.k) + ": " + e.what());
      }
      total += term.log_contribution;
      if (term.floored) ++floors[static_cast<size_t>(i)];
      if (with_scores) {
        for (auto s : kSubmodels) {
          const double w = term.d_linear_predictor[index_of(s)];
          if (w == 0.0) continue;
          const auto b = blocks[index_of(s)];
          out.scores.row(i).segment(b.offset, b.size) += w * data.design(s).row(c);
        }
      }
    }
    out.loglik(i) = total;
  });

  for (int f : floors) out.floor_hits += f;
  for (int i = 0; i < N; ++i) {
    if (!std::isfinite(out.loglik(i)) || (with_scores && !out.scores.row(i).allFinite())) {
      throw NumericalDomainError("non-finite likelihood term for subject '" +
                                 data.subject_ids()[static_cast<size_t>(i)] + "'");
    }
  }
  return out;
}

double loglik(const LikelihoodData& data, const Eigen::VectorXd& phi, int threads) {
  const auto eval = evaluate_subjects(data, phi, false, threads);
  return pairwise_sum(eval.loglik.data(), eval.loglik.size());
}

double penalty_value(const Model& model, const Eigen::VectorXd& phi, const PenaltyWeights& lambdas) {
  double total = 0.0;
  for (auto s : kSubmodels) {
    if (lambdas[s] == 0.0 || !model.penalized(s)) continue;
    const auto b = model.baseline_block(s);
    const auto eta = phi.segment(b.offset, b.size);
    total += lambdas[s] * eta.dot(model.penalty(s) * eta);
  }
  return total;
}

Eigen::VectorXd penalty_gradient(const Model& model, const Eigen::VectorXd& phi, const PenaltyWeights& lambdas) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(model.num_params());
  for (auto s : kSubmodels) {
    if (lambdas[s] == 0.0 || !model.penalized(s)) continue;
    const auto b = model.baseline_block(s);
    g.segment(b.offset, b.size) = 2.0 * lambdas[s] * (model.penalty(s) * phi.segment(b.offset, b.size));
  }
  return g;
}

Eigen::MatrixXd penalty_hessian(const Model& model, const PenaltyWeights& lambdas) {
  const int P = model.num_params();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(P, P);
  for (auto s : kSubmodels) {
    if (lambdas[s] == 0.0 || !model.penalized(s)) continue;
    const auto b = model.baseline_block(s);
    H.block(b.offset, b.offset, b.size, b.size) = 2.0 * lambdas[s] * model.penalty(s);
  }
  return H;
}

double penalized_loglik(const LikelihoodData& data, const Eigen::VectorXd& phi, const PenaltyWeights& lambdas,
                        int threads) {
  validate(lambdas, data.model());
  return loglik(data, phi, threads) - penalty_value(data.model(), phi, lambdas);
}

ObjectiveValue evaluate_objective(const LikelihoodData& data, const Eigen::VectorXd& phi,
                                  const PenaltyWeights& lambdas, int threads) {
  validate(lambdas, data.model());
  const auto eval = evaluate_subjects(data, phi, true, threads);
  ObjectiveValue out;
  out.loglik = pairwise_sum(eval.loglik.data(), eval.loglik.size());
  out.penalized_loglik = out.loglik - penalty_value(data.model(), phi, lambdas);
  out.gradient = pairwise_row_sum(eval.scores, 0, eval.scores.rows()) -
                 penalty_gradient(data.model(), phi, lambdas);
  out.floor_hits = eval.floor_hits;
  return out;
}

Eigen::MatrixXd unpenalized_hessian(const LikelihoodData& data, const Eigen::VectorXd& phi, int threads) {
  const int P = static_cast<int>(phi.size());
  const PenaltyWeights none{};
  Eigen::MatrixXd H(P, P);
  for (int j = 0; j < P; ++j) {
    const double h = 1e-5 * std::max(1.0, std::abs(phi(j)));
    Eigen::VectorXd plus = phi, minus = phi;
    plus(j) += h;
    minus(j) -= h;
    H.col(j) = (evaluate_objective(data, plus, none, threads).gradient -
                evaluate_objective(data, minus, none, threads).gradient) /
               (2.0 * h);
  }
  return 0.5 * (H + H.transpose());
}

ScoreReport score_and_hessian(const LikelihoodData& data, const Eigen::VectorXd& phi,
                              const PenaltyWeights& lambdas, int threads) {
  validate(lambdas, data.model());
  const Model& model = data.model();
  const auto eval = evaluate_subjects(data, phi, true, threads);
  const int N = data.num_subjects();

  ScoreReport report;
  report.loglik = pairwise_sum(eval.loglik.data(), eval.loglik.size());
  report.penalized_loglik = report.loglik - penalty_value(model, phi, lambdas);
  const Eigen::VectorXd pen_grad = penalty_gradient(model, phi, lambdas);
  RowMatrix scores = eval.scores;
  if (N > 0) scores.rowwise() -= (pen_grad / N).transpose();
  report.gradient = pairwise_row_sum(scores, 0, scores.rows());
  report.subject_scores = scores;
  report.hessian_unpenalized = unpenalized_hessian(data, phi, threads);
  report.hessian = report.hessian_unpenalized - penalty_hessian(model, lambdas);
  report.floor_hits = eval.floor_hits;
  if (!report.hessian.allFinite()) throw NumericalDomainError("non-finite Hessian entries");
  return report;
}

}  // namespace semicomp
