#pragma once

#include <string>
#include <string_view>

namespace semicomp {

enum class LinkKind { Logit, Log, Identity };

// g maps the response scale to the linear-predictor scale; inverse() is g^{-1}.
class Link {
 public:
  constexpr Link() = default;
  constexpr explicit Link(LinkKind kind) : kind_(kind) {}

  LinkKind kind() const { return kind_; }
  double apply(double mu) const;
  double inverse(double eta) const;
  // d g^{-1}(eta) / d eta
  double inverse_derivative(double eta) const;
  // Coefficients are reported on the exp scale (odds or rate ratios).
  bool exponentiable() const { return kind_ != LinkKind::Identity; }

  std::string_view name() const;
  static Link parse(std::string_view name);

  bool operator==(const Link&) const = default;

 private:
  LinkKind kind_ = LinkKind::Logit;
};

}  // namespace semicomp
