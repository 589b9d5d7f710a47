#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "semicomp/link.hpp"
#include "semicomp/spline_basis.hpp"
#include "semicomp/timegrid.hpp"

namespace semicomp {

// pi1: non-terminal event from (0,0); pi2: terminal event given prior
// non-terminal status; theta: within-interval odds ratio from (0,0).
enum class Submodel { Pi1 = 0, Pi2 = 1, Theta = 2 };
inline constexpr std::array<Submodel, 3> kSubmodels = {Submodel::Pi1, Submodel::Pi2, Submodel::Theta};

std::string_view to_string(Submodel s);
Submodel parse_submodel(std::string_view name);
inline size_t index_of(Submodel s) { return static_cast<size_t>(s); }

// Pseudo-covariate Y_{1,k-1}; legal only in the pi2 design.
inline constexpr std::string_view kPriorNonTerminal = "y1_prev";

// A product of covariates: one factor is a main effect, more form an interaction.
struct Term {
  std::vector<std::string> factors;

  std::string name() const;
  bool operator==(const Term&) const = default;
};

enum class BaselineMode { Unstructured, BSpline };

struct BaselineSpec {
  BaselineMode mode = BaselineMode::Unstructured;
  SplineConfig spline;

  bool operator==(const BaselineSpec&) const = default;
};

struct SubmodelSpec {
  Link link;
  std::vector<Term> terms;
  BaselineSpec baseline;

  bool operator==(const SubmodelSpec&) const = default;
};

struct ModelSpec {
  Partition partition;
  std::array<SubmodelSpec, 3> submodels;

  // Logit links for pi1/pi2, log link for theta, unstructured baselines, no covariates.
  static ModelSpec defaults(Partition partition);

  SubmodelSpec& operator[](Submodel s) { return submodels[index_of(s)]; }
  const SubmodelSpec& operator[](Submodel s) const { return submodels[index_of(s)]; }
};

struct Block {
  int offset = 0;
  int size = 0;
};

// Compiled model: basis and penalty matrices plus the parameter layout.
// Parameters are stored submodel by submodel, each as [baseline, slopes].
class Model {
 public:
  explicit Model(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }
  const Partition& partition() const { return spec_.partition; }
  int num_intervals() const { return spec_.partition.num_intervals(); }
  int num_params() const { return num_params_; }
  const Link& link(Submodel s) const { return spec_[s].link; }

  Block block(Submodel s) const;           // whole submodel
  Block baseline_block(Submodel s) const;  // eta (or alpha) coefficients
  Block slope_block(Submodel s) const;     // beta coefficients
  int num_slopes() const;

  // J~ x K; the identity in unstructured mode.
  const Eigen::MatrixXd& basis(Submodel s) const { return basis_[index_of(s)]; }
  bool penalized(Submodel s) const { return spec_[s].baseline.mode == BaselineMode::BSpline; }
  // D_m^T D_m for B-spline baselines; empty otherwise.
  const Eigen::MatrixXd& penalty(Submodel s) const { return penalty_[index_of(s)]; }

  const std::vector<std::string>& param_names() const { return names_; }
  // Covariate names referenced by any design term (y1_prev excluded).
  const std::vector<std::string>& covariate_names() const { return covariate_names_; }

  // Row of the submodel design for interval k: [B(:, k); term values].
  void feature_row(Submodel s, const Covariates& x, int y1_prev, int k,
                   Eigen::Ref<Eigen::VectorXd> out) const;
  Eigen::VectorXd feature_row(Submodel s, const Covariates& x, int y1_prev, int k) const;

  double linear_predictor(Submodel s, const Eigen::VectorXd& phi, const Covariates& x, int y1_prev,
                          int k) const;
  // alpha_s = B^T eta_s, length K.
  Eigen::VectorXd baseline_curve(Submodel s, const Eigen::VectorXd& phi) const;

  double eval_pi1(const Eigen::VectorXd& phi, const Covariates& x, int k) const;
  double eval_pi2(const Eigen::VectorXd& phi, const Covariates& x, int y1_prev, int k) const;
  double eval_theta(const Eigen::VectorXd& phi, const Covariates& x, int k) const;

  // Parameter vector from baseline link-scale curves (length K each, least
  // squares onto the basis) and slope values; slopes default to zero.
  Eigen::VectorXd params_from_curves(const std::array<Eigen::VectorXd, 3>& alphas) const;

 private:
  ModelSpec spec_;
  std::array<Eigen::MatrixXd, 3> basis_;
  std::array<Eigen::MatrixXd, 3> penalty_;
  std::array<Block, 3> blocks_;
  std::vector<std::string> names_;
  std::vector<std::string> covariate_names_;
  int num_params_ = 0;
};

}  // namespace semicomp
