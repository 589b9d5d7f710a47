#include "semicomp/model.hpp"

#include <set>

#include "semicomp/errors.hpp"

namespace semicomp {

std::string_view to_string(Submodel s) {
  switch (s) {
    case Submodel::Pi1: return "pi1";
    case Submodel::Pi2: return "pi2";
    case Submodel::Theta: return "theta";
  }
  return "pi1";
}

Submodel parse_submodel(std::string_view name) {
  for (auto s : kSubmodels) {
    if (to_string(s) == name) return s;
  }
  throw ConfigurationError("unknown submodel '" + std::string(name) + "' (expected pi1, pi2 or theta)");
}

std::string Term::name() const {
  std::string out;
  for (size_t i = 0; i < factors.size(); ++i) {
    if (i > 0) out += ':';
    out += factors[i];
  }
  return out;
}

ModelSpec ModelSpec::defaults(Partition partition) {
  ModelSpec spec{std::move(partition), {}};
  spec[Submodel::Pi1].link = Link(LinkKind::Logit);
  spec[Submodel::Pi2].link = Link(LinkKind::Logit);
  spec[Submodel::Theta].link = Link(LinkKind::Log);
  return spec;
}

Model::Model(ModelSpec spec) : spec_(std::move(spec)) {
  const int K = spec_.partition.num_intervals();
  std::set<std::string> covariates;
  int offset = 0;
  for (auto s : kSubmodels) {
    const auto& sub = spec_[s];
    const auto tag = std::string(to_string(s));
    std::set<std::string> seen;
    for (const auto& term : sub.terms) {
      if (term.factors.empty()) throw ConfigurationError(tag + ": empty design term");
      std::set<std::string> factor_set;
      for (const auto& f : term.factors) {
        if (f.empty()) throw ConfigurationError(tag + ": empty covariate name in design term");
        if (!factor_set.insert(f).second) {
          throw ConfigurationError(tag + ": repeated factor '" + f + "' in term " + term.name());
        }
        if (f == kPriorNonTerminal) {
          if (s != Submodel::Pi2) {
            throw ConfigurationError(tag + ": '" + std::string(kPriorNonTerminal) +
                                     "' may only appear in the pi2 design");
          }
        } else {
          covariates.insert(f);
        }
      }
      if (!seen.insert(term.name()).second) {
        throw ConfigurationError(tag + ": duplicate design term " + term.name());
      }
    }

    auto& B = basis_[index_of(s)];
    if (sub.baseline.mode == BaselineMode::BSpline) {
      B = build_basis(spec_.partition, sub.baseline.spline);
      penalty_[index_of(s)] = build_penalty(sub.baseline.spline.num_terms(), sub.baseline.spline.penalty_order);
    } else {
      B = Eigen::MatrixXd::Identity(K, K);
    }

    const int n_base = static_cast<int>(B.rows());
    blocks_[index_of(s)] = Block{offset, n_base + static_cast<int>(sub.terms.size())};
    for (int j = 1; j <= n_base; ++j) names_.push_back(tag + ".baseline[" + std::to_string(j) + "]");
    for (const auto& term : sub.terms) names_.push_back(tag + "." + term.name());
    offset += blocks_[index_of(s)].size;
  }
  num_params_ = offset;
  covariate_names_.assign(covariates.begin(), covariates.end());
}

Block Model::block(Submodel s) const { return blocks_[index_of(s)]; }

Block Model::baseline_block(Submodel s) const {
  return Block{blocks_[index_of(s)].offset, static_cast<int>(basis(s).rows())};
}

Block Model::slope_block(Submodel s) const {
  const auto base = baseline_block(s);
  return Block{base.offset + base.size, static_cast<int>(spec_[s].terms.size())};
}

int Model::num_slopes() const {
  int n = 0;
  for (auto s : kSubmodels) n += slope_block(s).size;
  return n;
}

void Model::feature_row(Submodel s, const Covariates& x, int y1_prev, int k,
                        Eigen::Ref<Eigen::VectorXd> out) const {
  const int K = num_intervals();
  if (k < 1 || k > K) {
    throw ConfigurationError("interval index " + std::to_string(k) + " outside 1.." + std::to_string(K));
  }
  const auto& B = basis(s);
  const Eigen::Index n_base = B.rows();
  out.head(n_base) = B.col(k - 1);
  const auto& terms = spec_[s].terms;
  for (size_t t = 0; t < terms.size(); ++t) {
    double value = 1.0;
    for (const auto& f : terms[t].factors) {
      if (f == kPriorNonTerminal) {
        value *= y1_prev;
        continue;
      }
      auto it = x.find(f);
      if (it == x.end()) throw ConfigurationError("unknown covariate '" + f + "'");
      value *= it->second;
    }
    out(n_base + static_cast<Eigen::Index>(t)) = value;
  }
}

Eigen::VectorXd Model::feature_row(Submodel s, const Covariates& x, int y1_prev, int k) const {
  Eigen::VectorXd row(block(s).size);
  feature_row(s, x, y1_prev, k, row);
  return row;
}

double Model::linear_predictor(Submodel s, const Eigen::VectorXd& phi, const Covariates& x, int y1_prev,
                               int k) const {
  const auto b = block(s);
  return feature_row(s, x, y1_prev, k).dot(phi.segment(b.offset, b.size));
}

Eigen::VectorXd Model::baseline_curve(Submodel s, const Eigen::VectorXd& phi) const {
  const auto b = baseline_block(s);
  return basis(s).transpose() * phi.segment(b.offset, b.size);
}

double Model::eval_pi1(const Eigen::VectorXd& phi, const Covariates& x, int k) const {
  return link(Submodel::Pi1).inverse(linear_predictor(Submodel::Pi1, phi, x, 0, k));
}

double Model::eval_pi2(const Eigen::VectorXd& phi, const Covariates& x, int y1_prev, int k) const {
  return link(Submodel::Pi2).inverse(linear_predictor(Submodel::Pi2, phi, x, y1_prev, k));
}

double Model::eval_theta(const Eigen::VectorXd& phi, const Covariates& x, int k) const {
  return link(Submodel::Theta).inverse(linear_predictor(Submodel::Theta, phi, x, 0, k));
}

Eigen::VectorXd Model::params_from_curves(const std::array<Eigen::VectorXd, 3>& alphas) const {
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(num_params_);
  for (auto s : kSubmodels) {
    const auto& alpha = alphas[index_of(s)];
    if (alpha.size() != num_intervals()) {
      throw ConfigurationError("baseline curve length must equal K");
    }
    const auto b = baseline_block(s);
    phi.segment(b.offset, b.size) =
        basis(s).transpose().colPivHouseholderQr().solve(alpha);
  }
  return phi;
}

}  // namespace semicomp
