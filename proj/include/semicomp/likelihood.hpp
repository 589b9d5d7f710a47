#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "semicomp/model.hpp"
#include "semicomp/timegrid.hpp"

namespace semicomp {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Cell probabilities are floored here before taking logs.
inline constexpr double kProbabilityFloor = 1e-300;

struct PenaltyWeights {
  double pi1 = 0.0;
  double pi2 = 0.0;
  double theta = 0.0;

  static PenaltyWeights common(double lambda) { return {lambda, lambda, lambda}; }
  double operator[](Submodel s) const;
  double total() const { return pi1 + pi2 + theta; }
  bool operator==(const PenaltyWeights&) const = default;
};

void validate(const PenaltyWeights& lambdas, const Model& model);

// Log-likelihood contribution of one interval and its derivatives with respect
// to the (pi1, pi2, theta) linear predictors.
struct IntervalTerm {
  double log_contribution = 0.0;
  std::array<double, 3> d_linear_predictor{};
  bool floored = false;
};

IntervalTerm interval_term(const Model& model, int y1_prev, int y1, int y2, double lp_pi1, double lp_pi2,
                           double lp_theta);

// Direct evaluation from a path, no design cache.
double subject_loglik(const Model& model, const Eigen::VectorXd& phi, const SubjectPath& path);

// Design rows for every contributing interval, built once per dataset.
class LikelihoodData {
 public:
  struct Cell {
    int subject = 0;
    int k = 0;
    std::uint8_t y1_prev = 0;
    std::uint8_t y1 = 0;
    std::uint8_t y2 = 0;
  };

  LikelihoodData(Model model, std::span<const SubjectPath> paths);

  const Model& model() const { return model_; }
  int num_subjects() const { return static_cast<int>(subject_ids_.size()); }
  int num_cells() const { return static_cast<int>(cells_.size()); }
  // Subjects dropped because they contribute no complete interval.
  int num_empty_subjects() const { return empty_subjects_; }
  const std::vector<std::string>& subject_ids() const { return subject_ids_; }
  const std::vector<Cell>& cells() const { return cells_; }
  const RowMatrix& design(Submodel s) const { return design_[index_of(s)]; }
  // Cells [first, second) belong to subject i.
  std::pair<int, int> subject_cells(int i) const {
    return {subject_start_[static_cast<size_t>(i)], subject_start_[static_cast<size_t>(i) + 1]};
  }
  // Whether cell c enters submodel s (pi1 and theta only from state (0,0)).
  bool uses(Submodel s, const Cell& c) const { return s == Submodel::Pi2 || c.y1_prev == 0; }

 private:
  Model model_;
  std::vector<std::string> subject_ids_;
  std::vector<int> subject_start_;
  std::vector<Cell> cells_;
  std::array<RowMatrix, 3> design_;
  int empty_subjects_ = 0;
};

struct SubjectEvaluation {
  Eigen::VectorXd loglik;  // per subject
  RowMatrix scores;        // N x P, unpenalized; empty unless requested
  int floor_hits = 0;
};

SubjectEvaluation evaluate_subjects(const LikelihoodData& data, const Eigen::VectorXd& phi, bool with_scores,
                                    int threads = 1);

double loglik(const LikelihoodData& data, const Eigen::VectorXd& phi, int threads = 1);

// sum_s lambda_s eta_s^T P eta_s
double penalty_value(const Model& model, const Eigen::VectorXd& phi, const PenaltyWeights& lambdas);
// Gradient of the penalty term (2 lambda P eta in the baseline slots).
Eigen::VectorXd penalty_gradient(const Model& model, const Eigen::VectorXd& phi, const PenaltyWeights& lambdas);
// Hessian of the penalty term (2 lambda P blocks).
Eigen::MatrixXd penalty_hessian(const Model& model, const PenaltyWeights& lambdas);

double penalized_loglik(const LikelihoodData& data, const Eigen::VectorXd& phi, const PenaltyWeights& lambdas,
                        int threads = 1);

struct ObjectiveValue {
  double loglik = 0.0;
  double penalized_loglik = 0.0;
  Eigen::VectorXd gradient;  // of the penalized log-likelihood
  int floor_hits = 0;
};

ObjectiveValue evaluate_objective(const LikelihoodData& data, const Eigen::VectorXd& phi,
                                  const PenaltyWeights& lambdas, int threads = 1);

// Hessian of the unpenalized log-likelihood by central differences of the
// analytic gradient, step 1e-5 * max(1, |phi_j|), symmetrized.
Eigen::MatrixXd unpenalized_hessian(const LikelihoodData& data, const Eigen::VectorXd& phi, int threads = 1);

struct ScoreReport {
  double loglik = 0.0;            // unpenalized
  double penalized_loglik = 0.0;
  Eigen::MatrixXd subject_scores;  // U_i = grad l_i - grad(penalty) / N
  Eigen::VectorXd gradient;        // penalized; equals the column sums of subject_scores
  Eigen::MatrixXd hessian;         // penalized
  Eigen::MatrixXd hessian_unpenalized;
  int floor_hits = 0;
};

ScoreReport score_and_hessian(const LikelihoodData& data, const Eigen::VectorXd& phi,
                              const PenaltyWeights& lambdas, int threads = 1);

}  // namespace semicomp
