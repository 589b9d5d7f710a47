#include "semicomp/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "semicomp/bivariate.hpp"
#include "semicomp/errors.hpp"

namespace semicomp {

CovariateGenerator CovariateGenerator::bernoulli(std::string name, double p) {
  CovariateGenerator g;
  g.name = std::move(name);
  g.kind = Kind::Bernoulli;
  g.p = p;
  return g;
}

CovariateGenerator CovariateGenerator::normal(std::string name, double mean, double sd) {
  CovariateGenerator g;
  g.name = std::move(name);
  g.kind = Kind::Normal;
  g.mean = mean;
  g.sd = sd;
  return g;
}

CovariateGenerator CovariateGenerator::switch_on(std::string name, double initial, double rate) {
  CovariateGenerator g;
  g.name = std::move(name);
  g.kind = Kind::SwitchOn;
  g.p = initial;
  g.rate = rate;
  return g;
}

std::string_view to_string(CovariateGenerator::Kind kind) {
  switch (kind) {
    case CovariateGenerator::Kind::Bernoulli: return "bernoulli";
    case CovariateGenerator::Kind::Normal: return "normal";
    case CovariateGenerator::Kind::SwitchOn: return "switch_on";
  }
  return "?";
}

std::string_view to_string(CensoringSpec::Kind kind) {
  switch (kind) {
    case CensoringSpec::Kind::None: return "none";
    case CensoringSpec::Kind::Administrative: return "administrative";
    case CensoringSpec::Kind::Random: return "random";
  }
  return "?";
}

namespace {

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

// Uniform on [0, 1) from the top 53 bits; avoids implementation-defined
// distribution objects so cohorts match across standard libraries.
double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double standard_normal(std::mt19937_64& rng) {
  // Box-Muller, discarding the second draw to keep the stream simple.
  double u1 = uniform(rng);
  while (u1 <= 0.0) u1 = uniform(rng);
  const double u2 = uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

int draw_entry_interval(const TruncationSpec& trunc, std::mt19937_64& rng) {
  if (trunc.entry_weights.empty()) return 1;
  double total = 0.0;
  for (double w : trunc.entry_weights) total += w;
  double u = uniform(rng) * total;
  for (size_t k = 0; k < trunc.entry_weights.size(); ++k) {
    u -= trunc.entry_weights[k];
    if (u < 0.0) return static_cast<int>(k) + 1;
  }
  // Rounding at the top end: last interval with positive weight.
  for (size_t k = trunc.entry_weights.size(); k-- > 0;)
    if (trunc.entry_weights[k] > 0.0) return static_cast<int>(k) + 1;
  return 1;
}

struct SubjectDraw {
  SubjectRecord record;
  int k_entry = 1;
  // Intervals after which random censoring could have stopped follow-up.
  int censoring_opportunities = 0;
};

// Generates one subject. When censoring_hazard > 0 a censoring check follows
// every completed interval before tau_K.
SubjectDraw draw_subject(const Model& model, const ScenarioSpec& spec, std::mt19937_64& rng,
                         double censoring_hazard, int index) {
  const Partition& part = model.partition();
  const int K = part.num_intervals();
  SubjectDraw out;
  SubjectRecord& rec = out.record;
  rec.id = std::to_string(index + 1);

  std::vector<std::pair<const CovariateGenerator*, double>> switches;
  for (const auto& g : spec.covariates) {
    double v = 0.0;
    switch (g.kind) {
      case CovariateGenerator::Kind::Bernoulli: v = uniform(rng) < g.p ? 1.0 : 0.0; break;
      case CovariateGenerator::Kind::Normal: v = g.mean + g.sd * standard_normal(rng); break;
      case CovariateGenerator::Kind::SwitchOn:
        v = uniform(rng) < g.p ? 1.0 : 0.0;
        switches.emplace_back(&g, v);
        break;
    }
    rec.baseline[g.name] = v;
  }

  const int k0 = draw_entry_interval(spec.truncation, rng);
  out.k_entry = k0;
  rec.entry = part.cut(k0 - 1);

  Covariates x = rec.baseline;
  int y1 = 0;
  for (int k = k0; k <= K; ++k) {
    if (k > k0) {
      // Time-varying covariates are measured at tau_{k-1}.
      Covariates changed;
      for (auto& [g, value] : switches) {
        if (value == 0.0 && uniform(rng) < g->rate) {
          value = 1.0;
          changed[g->name] = 1.0;
          x[g->name] = 1.0;
        }
      }
      if (!changed.empty()) rec.time_varying[k] = std::move(changed);
    }

    const double u = uniform(rng);
    if (y1 == 0) {
      const double p1 = model.eval_pi1(spec.truth, x, k);
      const double p2 = model.eval_pi2(spec.truth, x, 0, k);
      const double theta = model.eval_theta(spec.truth, x, k);
      if (!is_probability(p1) || !is_probability(p2) || p1 >= 1.0 || p2 >= 1.0 || !(theta > 0.0) ||
          !std::isfinite(theta))
        throw ConfigurationError("invalid truth in interval " + std::to_string(k) +
                                 ": probabilities outside [0, 1) or non-positive odds ratio");
      CellProbs c;
      try {
        c = cell_probs(p1, p2, solve_pi12(p1, p2, theta));
      } catch (const std::exception& e) {
        throw ConfigurationError("invalid truth in interval " + std::to_string(k) + ": " + e.what());
      }
      const double t = part.cut(k);
      if (u < c.p11) {
        rec.t1 = rec.t2 = t;
        rec.d1 = rec.d2 = true;
        return out;
      }
      if (u < c.p11 + c.p01) {
        rec.t1 = rec.t2 = t;
        rec.d1 = false;
        rec.d2 = true;
        return out;
      }
      if (u < c.p11 + c.p01 + c.p10) {
        y1 = 1;
        rec.t1 = t;
        rec.d1 = true;
      }
    } else {
      const double p2 = model.eval_pi2(spec.truth, x, 1, k);
      if (!is_probability(p2) || p2 >= 1.0)
        throw ConfigurationError("invalid truth in interval " + std::to_string(k) +
                                 ": terminal probability outside [0, 1)");
      if (u < p2) {
        rec.t2 = part.cut(k);
        rec.d2 = true;
        return out;
      }
    }

    if (k < K) {
      ++out.censoring_opportunities;
      if (censoring_hazard > 0.0 && uniform(rng) < censoring_hazard) {
        rec.t2 = part.cut(k);
        rec.d2 = false;
        if (y1 == 0) rec.t1 = rec.t2;
        return out;
      }
    }
  }
  rec.t2 = part.end();
  rec.d2 = false;
  if (y1 == 0) rec.t1 = rec.t2;
  return out;
}

}  // namespace

void validate(const ScenarioSpec& spec) {
  if (spec.n_subjects < 1) throw ConfigurationError("n_subjects must be at least 1");
  for (auto s : kSubmodels)
    if (spec.truth_model[s].baseline.mode != BaselineMode::Unstructured)
      throw ConfigurationError("simulation truth must use unstructured baselines");
  const Model model(spec.truth_model);
  if (spec.truth.size() != model.num_params())
    throw ConfigurationError("truth has " + std::to_string(spec.truth.size()) + " parameters, model needs " +
                             std::to_string(model.num_params()));
  if (!spec.truth.allFinite()) throw ConfigurationError("truth parameters must be finite");
  const int K = model.num_intervals();
  const auto& w = spec.truncation.entry_weights;
  if (!w.empty()) {
    if (static_cast<int>(w.size()) != K)
      throw ConfigurationError("entry_weights must have one weight per interval");
    double total = 0.0;
    for (double v : w) {
      if (!std::isfinite(v) || v < 0.0) throw ConfigurationError("entry_weights must be non-negative");
      total += v;
    }
    if (!(total > 0.0)) throw ConfigurationError("entry_weights must not all be zero");
  }
  if (spec.censoring.kind == CensoringSpec::Kind::Random &&
      !(spec.censoring.target_rate >= 0.0 && spec.censoring.target_rate <= 0.3))
    throw ConfigurationError("censoring target rate must lie in [0, 0.3]");
  for (const auto& g : spec.covariates) {
    if (g.name.empty() || g.name == kPriorNonTerminal)
      throw ConfigurationError("invalid covariate generator name '" + g.name + "'");
    if ((g.kind != CovariateGenerator::Kind::Normal && !is_probability(g.p)) ||
        (g.kind == CovariateGenerator::Kind::SwitchOn && !is_probability(g.rate)) ||
        (g.kind == CovariateGenerator::Kind::Normal && !(g.sd >= 0.0 && std::isfinite(g.mean))))
      throw ConfigurationError("invalid parameters for covariate generator '" + g.name + "'");
  }
  for (const auto& name : model.covariate_names()) {
    const bool generated = std::any_of(spec.covariates.begin(), spec.covariates.end(),
                                       [&](const CovariateGenerator& g) { return g.name == name; });
    if (!generated) throw ConfigurationError("truth references covariate '" + name + "' with no generator");
  }
}

std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t rep) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(rep), static_cast<std::uint32_t>(rep >> 32), 0x5eedu};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

double calibrate_censoring_hazard(const ScenarioSpec& spec, int calibration_size) {
  validate(spec);
  if (spec.censoring.kind != CensoringSpec::Kind::Random || spec.censoring.target_rate == 0.0) return 0.0;
  const Model model(spec.truth_model);
  auto rng = make_engine(spec.seed, 0xca1b7a7eULL);
  std::vector<int> opportunities(static_cast<size_t>(calibration_size));
  for (int i = 0; i < calibration_size; ++i)
    opportunities[static_cast<size_t>(i)] = draw_subject(model, spec, rng, 0.0, i).censoring_opportunities;

  // Censoring is independent of the event process, so a subject with n
  // opportunities is censored with probability 1 - (1 - h)^n.
  auto expected_rate = [&](double h) {
    double total = 0.0;
    for (int n : opportunities) total += 1.0 - std::pow(1.0 - h, n);
    return total / calibration_size;
  };
  const double target = spec.censoring.target_rate;
  if (expected_rate(1.0) < target)
    throw ConfigurationError("censoring target rate is unattainable: at most " +
                             std::to_string(expected_rate(1.0)) + " of subjects can be censored");
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    (expected_rate(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

SimulatedCohort simulate_cohort(const ScenarioSpec& spec) {
  validate(spec);
  const Model model(spec.truth_model);
  SimulatedCohort cohort;
  cohort.censoring_hazard = calibrate_censoring_hazard(spec);
  auto rng = make_engine(spec.seed, 0);
  cohort.records.reserve(static_cast<size_t>(spec.n_subjects));
  int censored = 0;
  const double end = model.partition().end();
  for (int i = 0; i < spec.n_subjects; ++i) {
    auto draw = draw_subject(model, spec, rng, cohort.censoring_hazard, i);
    if (!draw.record.d2 && draw.record.t2 < end) ++censored;
    cohort.records.push_back(std::move(draw.record));
  }
  cohort.censoring_rate = static_cast<double>(censored) / spec.n_subjects;
  return cohort;
}

namespace {

Eigen::VectorXd linear_curve(int K, double first, double last) {
  return Eigen::VectorXd::LinSpaced(K, first, last);
}

void set_param(const Model& model, Eigen::VectorXd& phi, const std::string& name, double value) {
  const auto& names = model.param_names();
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ConfigurationError("preset refers to unknown parameter " + name);
  phi(it - names.begin()) = value;
}

ScenarioSpec base_preset(std::string name, int K) {
  ScenarioSpec spec{.name = std::move(name),
                    .truth_model = ModelSpec::defaults(Partition::equally_spaced(65.0, 2.5, K)),
                    .truth = {},
                    .n_subjects = 2000,
                    .censoring = {CensoringSpec::Kind::Random, 0.15},
                    .truncation = {},
                    .covariates = {CovariateGenerator::bernoulli("female", 0.55),
                                   CovariateGenerator::bernoulli("apoe", 0.3)},
                    .seed = 20240601};
  // Staggered entry over the first four intervals.
  spec.truncation.entry_weights.assign(static_cast<size_t>(K), 0.0);
  const double w[] = {0.4, 0.3, 0.2, 0.1};
  for (int k = 0; k < 4; ++k) spec.truncation.entry_weights[static_cast<size_t>(k)] = w[k];
  return spec;
}

ScenarioSpec null_preset() {
  auto spec = base_preset("null", 10);
  auto& m = spec.truth_model;
  m[Submodel::Pi1].terms = {{{"female"}}, {{"apoe"}}};
  m[Submodel::Pi2].terms = {{{std::string(kPriorNonTerminal)}}, {{"female"}}};
  m[Submodel::Theta].terms = {{{"apoe"}}};
  const Model model(m);
  const int K = model.num_intervals();
  spec.truth = model.params_from_curves(
      {linear_curve(K, -4.5, -1.5), linear_curve(K, -3.5, -1.0), Eigen::VectorXd::Zero(K)});
  set_param(model, spec.truth, "pi1.female", -0.2);
  set_param(model, spec.truth, "pi1.apoe", 0.6);
  set_param(model, spec.truth, "pi2.y1_prev", 0.0);
  set_param(model, spec.truth, "pi2.female", -0.3);
  set_param(model, spec.truth, "theta.apoe", 0.0);
  return spec;
}

ScenarioSpec simple_preset() {
  auto spec = base_preset("simple", 10);
  auto& m = spec.truth_model;
  m[Submodel::Pi1].terms = {{{"female"}}, {{"apoe"}}};
  m[Submodel::Pi2].terms = {{{std::string(kPriorNonTerminal)}}, {{"female"}}};
  const Model model(m);
  const int K = model.num_intervals();
  spec.truth = model.params_from_curves({linear_curve(K, -4.5, -1.5), linear_curve(K, -3.5, -1.0),
                                         Eigen::VectorXd::Constant(K, std::log(2.5))});
  set_param(model, spec.truth, "pi1.female", -0.2);
  set_param(model, spec.truth, "pi1.apoe", 0.6);
  set_param(model, spec.truth, "pi2.y1_prev", std::log(2.0));
  set_param(model, spec.truth, "pi2.female", -0.3);
  return spec;
}

ScenarioSpec complex_preset() {
  auto spec = base_preset("complex", 14);
  spec.covariates.push_back(CovariateGenerator::switch_on("widowed", 0.2, 0.08));
  auto& m = spec.truth_model;
  const std::string y1(kPriorNonTerminal);
  m[Submodel::Pi1].terms = {{{"female"}}, {{"apoe"}}};
  m[Submodel::Pi2].terms = {{{y1}}, {{"female"}}, {{y1, "apoe"}}, {{"widowed"}}};
  m[Submodel::Theta].terms = {{{"apoe"}}, {{"female"}}};
  const Model model(m);
  const int K = model.num_intervals();
  // Odds ratio rising from about 1.5 to a peak near age 85, then falling back.
  Eigen::VectorXd alpha_theta(K);
  for (int k = 1; k <= K; ++k) {
    const double mid = model.partition().cut(k) - 1.25;
    alpha_theta(k - 1) = 0.4 + 1.0 * std::exp(-0.5 * std::pow((mid - 85.0) / 6.0, 2));
  }
  spec.truth = model.params_from_curves({linear_curve(K, -4.5, -1.2), linear_curve(K, -3.8, -0.6), alpha_theta});
  set_param(model, spec.truth, "pi1.female", -0.2);
  set_param(model, spec.truth, "pi1.apoe", 0.6);
  set_param(model, spec.truth, "pi2.y1_prev", 0.9);
  set_param(model, spec.truth, "pi2.female", -0.3);
  set_param(model, spec.truth, "pi2.y1_prev:apoe", 0.4);
  set_param(model, spec.truth, "pi2.widowed", 0.25);
  set_param(model, spec.truth, "theta.apoe", 0.4);
  set_param(model, spec.truth, "theta.female", -0.3);
  return spec;
}

}  // namespace

std::vector<ScenarioSpec> scenario_presets() { return {null_preset(), simple_preset(), complex_preset()}; }

ScenarioSpec scenario_preset(const std::string& name) {
  for (auto& spec : scenario_presets())
    if (spec.name == name) return spec;
  throw ConfigurationError("unknown preset '" + name + "' (expected null, simple or complex)");
}

}  // namespace semicomp
