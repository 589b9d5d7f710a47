#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "semicomp/model.hpp"
#include "semicomp/timegrid.hpp"

namespace semicomp {

struct CovariateGenerator {
  enum class Kind { Bernoulli, Normal, SwitchOn };

  std::string name;
  Kind kind = Kind::Bernoulli;
  double p = 0.5;     // Bernoulli success / SwitchOn initial probability
  double mean = 0.0;  // Normal
  double sd = 1.0;    // Normal
  double rate = 0.0;  // SwitchOn: per-interval probability of turning on

  static CovariateGenerator bernoulli(std::string name, double p);
  static CovariateGenerator normal(std::string name, double mean, double sd);
  static CovariateGenerator switch_on(std::string name, double initial, double rate);
};

std::string_view to_string(CovariateGenerator::Kind kind);

// Entry interval weights (length K, non-negative); a subject entering in
// interval k0 has entry time tau_{k0-1}. Empty means everyone enters at tau_0.
struct TruncationSpec {
  std::vector<double> entry_weights;
};

struct CensoringSpec {
  enum class Kind { None, Administrative, Random };
  Kind kind = Kind::Administrative;
  double target_rate = 0.0;  // Random only, in [0, 0.3]
};

std::string_view to_string(CensoringSpec::Kind kind);

struct ScenarioSpec {
  std::string name;
  ModelSpec truth_model = ModelSpec::defaults(Partition({0.0, 1.0, 2.0}));  // unstructured baselines
  Eigen::VectorXd truth;  // parameters of truth_model
  int n_subjects = 1000;
  CensoringSpec censoring;
  TruncationSpec truncation;
  std::vector<CovariateGenerator> covariates;
  std::uint64_t seed = 1;
};

// Throws ConfigurationError for inconsistent specs.
void validate(const ScenarioSpec& spec);

struct SimulatedCohort {
  std::vector<SubjectRecord> records;
  // Per-interval censoring probability applied after each completed interval.
  double censoring_hazard = 0.0;
  // Fraction of subjects randomly censored before tau_K.
  double censoring_rate = 0.0;
};

SimulatedCohort simulate_cohort(const ScenarioSpec& spec);

// Censoring hazard whose expected censoring rate under the truth equals the
// target, found by bisection on a calibration cohort.
double calibrate_censoring_hazard(const ScenarioSpec& spec, int calibration_size = 20000);

// Seed for replicate `rep` of a study seeded with `seed`.
std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t rep);

// null, simple, complex
std::vector<ScenarioSpec> scenario_presets();
ScenarioSpec scenario_preset(const std::string& name);

}  // namespace semicomp
