#include "semicomp/link.hpp"

#include <cmath>

#include "semicomp/errors.hpp"

namespace semicomp {

double Link::apply(double mu) const {
  switch (kind_) {
    case LinkKind::Logit: return std::log(mu) - std::log1p(-mu);
    case LinkKind::Log: return std::log(mu);
    case LinkKind::Identity: return mu;
  }
  return mu;
}

double Link::inverse(double eta) const {
  switch (kind_) {
    case LinkKind::Logit:
      if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
      else {
        const double e = std::exp(eta);
        return e / (1.0 + e);
      }
    case LinkKind::Log: return std::exp(eta);
    case LinkKind::Identity: return eta;
  }
  return eta;
}

double Link::inverse_derivative(double eta) const {
  switch (kind_) {
    case LinkKind::Logit: {
      const double p = inverse(eta);
      return p * (1.0 - p);
    }
    case LinkKind::Log: return std::exp(eta);
    case LinkKind::Identity: return 1.0;
  }
  return 1.0;
}

std::string_view Link::name() const {
  switch (kind_) {
    case LinkKind::Logit: return "logit";
    case LinkKind::Log: return "log";
    case LinkKind::Identity: return "identity";
  }
  return "logit";
}

Link Link::parse(std::string_view name) {
  if (name == "logit") return Link(LinkKind::Logit);
  if (name == "log") return Link(LinkKind::Log);
  if (name == "identity") return Link(LinkKind::Identity);
  throw ConfigurationError("unknown link '" + std::string(name) + "'");
}

}  // namespace semicomp
