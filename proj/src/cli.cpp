#include "semicomp/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "semicomp/csv_io.hpp"
#include "semicomp/errors.hpp"
#include "semicomp/fit.hpp"
#include "semicomp/inference.hpp"
#include "semicomp/run_config.hpp"
#include "semicomp/simulate.hpp"
#include "semicomp/version.hpp"

namespace semicomp {

namespace {

using ojson = nlohmann::ordered_json;

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigurationError("cannot write output file '" + path + "'");
  out << content;
  out.close();
  if (!out) throw ConfigurationError("failed writing output file '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path, 0, "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<SubjectRecord> load_records(const RunConfig& cfg) {
  if (cfg.data.empty()) throw ConfigurationError("no data file given (use --data or the 'data' config key)");
  std::ifstream in(cfg.data);
  if (!in) throw InputError(cfg.data, 0, "cannot open data file");
  auto records = read_subjects_csv(in, cfg.data);
  if (!cfg.tv_data.empty()) {
    std::ifstream tv(cfg.tv_data);
    if (!tv) throw InputError(cfg.tv_data, 0, "cannot open time-varying data file");
    read_time_varying_csv(tv, records, cfg.tv_data);
  }
  return records;
}

ojson lambda_json(const PenaltyWeights& w) { return {{"pi1", w.pi1}, {"pi2", w.pi2}, {"theta", w.theta}}; }

ojson curves_json(const Model& model, const std::vector<CurveEstimate>& curve) {
  auto arr = ojson::array();
  for (const auto& c : curve) {
    arr.push_back({{"k", c.k},
                   {"t_left", model.partition().cut(c.k - 1)},
                   {"t_right", model.partition().cut(c.k)},
                   {"estimate", c.estimate},
                   {"lower", c.lower},
                   {"upper", c.upper},
                   {"link_estimate", c.link_estimate},
                   {"link_scale_se", c.link_scale_se}});
  }
  return arr;
}

ojson optional_json(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

ojson matrix_json(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return nullptr;
  auto rows = ojson::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = ojson::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

ojson fit_json(const RunConfig& cfg, const LikelihoodData& data, int n_records, const LambdaSelection& sel) {
  const Model& model = data.model();
  const FitResult& fit = sel.best;
  ojson j;
  j["version"] = kVersion;
  j["config"] = to_json(cfg);
  j["status"] = to_string(fit.convergence.status);
  j["data_summary"] = {{"records", n_records},
                       {"contributing_subjects", data.num_subjects()},
                       {"dropped_subjects", data.num_empty_subjects()},
                       {"intervals", data.num_cells()}};
  j["selected_lambda"] = lambda_json(fit.lambda);
  j["loglik"] = fit.loglik_unpenalized;
  j["penalized_loglik"] = fit.loglik_penalized;
  j["aic"] = fit.aic;
  j["edf"] = fit.edf;
  j["convergence"] = {{"status", to_string(fit.convergence.status)},
                      {"iterations", fit.convergence.iterations},
                      {"gradient_norm", fit.convergence.gradient_norm}};
  j["warnings"] = {{"probability_floor_hits", fit.warnings.probability_floor_hits},
                   {"boundary_estimates", fit.warnings.boundary_estimates},
                   {"covariance_unavailable", fit.warnings.covariance_unavailable},
                   {"messages", fit.warnings.messages}};
  auto table = ojson::array();
  for (size_t i = 0; i < sel.table.size(); ++i) {
    const auto& row = sel.table[i];
    ojson r = {{"lambda", lambda_json(row.lambda)},
               {"loglik", row.loglik},
               {"aic", row.aic},
               {"edf", row.edf},
               {"status", to_string(row.status)},
               {"selected", i == sel.best_index}};
    if (!row.error.empty()) r["error"] = row.error;
    table.push_back(std::move(r));
  }
  j["lambda_table"] = table;

  auto coefs = ojson::array();
  for (const auto& row : coefficient_table(model, fit, fit.covariance)) {
    coefs.push_back({{"name", row.name},
                     {"submodel", to_string(row.submodel)},
                     {"estimate", row.estimate},
                     {"se", row.se},
                     {"ci_low", row.ci_low},
                     {"ci_high", row.ci_high},
                     {"exp_estimate", optional_json(row.exp_estimate)},
                     {"exp_ci_low", optional_json(row.exp_ci_low)},
                     {"exp_ci_high", optional_json(row.exp_ci_high)}});
  }
  j["coefficients"] = coefs;
  ojson curves;
  for (auto s : kSubmodels)
    curves[std::string(to_string(s))] = curves_json(model, baseline_curves(model, fit, fit.covariance, s));
  j["curves"] = curves;
  j["parameters"] = {{"names", model.param_names()},
                     {"values", std::vector<double>(fit.params.data(), fit.params.data() + fit.params.size())}};
  j["covariance"] = matrix_json(fit.covariance);
  return j;
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-")
    out << text;
  else
    write_text_file(path, text);
}

struct FitOptions {
  std::string config, data, tv_data, out, censor_mode;
  std::vector<double> lambdas;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

int cmd_fit(const FitOptions& opt, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_run_config(opt.config);
  if (!opt.data.empty()) cfg.data = opt.data;
  if (!opt.tv_data.empty()) cfg.tv_data = opt.tv_data;
  if (!opt.out.empty()) cfg.output = opt.out;
  if (!opt.censor_mode.empty()) cfg.censor_mode = parse_censor_mode(opt.censor_mode);
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.threads) {
    if (*opt.threads < 1) throw ConfigurationError("--threads must be at least 1");
    cfg.threads = *opt.threads;
  }
  if (!opt.lambdas.empty()) {
    cfg.lambda_grid.clear();
    for (double l : opt.lambdas) {
      if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigurationError("--lambda values must be finite and >= 0");
      cfg.lambda_grid.push_back(PenaltyWeights::common(l));
    }
  }

  const Model model(cfg.model);
  const auto grid = cfg.resolved_lambda_grid();
  for (const auto& w : grid) validate(w, model);

  std::vector<SubjectRecord> records = load_records(cfg);
  for (auto& r : records) r = clip_to_partition(std::move(r), cfg.model.partition);
  const auto paths = discretize_all(records, cfg.model.partition, cfg.censor_mode);
  const LikelihoodData data(model, paths);
  if (data.num_subjects() == 0) throw DataError("no subject contributes a complete interval");

  OptimizerOptions options;
  options.threads = cfg.threads;
  LambdaSelection sel;
  try {
    sel = select_lambda(data, grid, options);
  } catch (const ConvergenceError& e) {
    ojson j;
    j["version"] = kVersion;
    j["config"] = to_json(cfg);
    j["status"] = "failed";
    j["error"] = e.what();
    emit(cfg.output, j.dump(2) + "\n", out);
    err << "semicomp fit: " << e.what() << "\n";
    return kExitNumericalError;
  }
  emit(cfg.output, fit_json(cfg, data, static_cast<int>(records.size()), sel).dump(2) + "\n", out);
  if (!cfg.output.empty() && cfg.output != "-") {
    const auto& f = sel.best;
    char line[256];
    std::snprintf(line, sizeof line, "fit %s: loglik %.6f, AIC %.4f, edf %.3f, lambda %g\n",
                  std::string(to_string(f.convergence.status)).c_str(), f.loglik_unpenalized, f.aic, f.edf,
                  f.lambda.total() / 3.0);
    out << line;
  }
  for (const auto& m : sel.best.warnings.messages) err << "warning: " << m << "\n";
  return kExitOk;
}

struct SimulateOptions {
  std::string preset = "simple", out = "cohort";
  std::optional<int> n;
  std::optional<std::uint64_t> seed;
  std::optional<double> censoring;
  std::string censor_mode;
};

RunConfig suggested_config(const ScenarioSpec& spec, const std::string& prefix, CensorMode mode) {
  RunConfig cfg;
  cfg.model = spec.truth_model;
  const int K = spec.truth_model.partition.num_intervals();
  if (K > 10) {
    // Ten-term cubic spline with the default penalty grid.
    BaselineSpec b;
    b.mode = BaselineMode::BSpline;
    b.spline.num_knots = 8;
    for (auto s : kSubmodels) cfg.model[s].baseline = b;
  }
  cfg.censor_mode = mode;
  cfg.data = prefix + ".csv";
  cfg.tv_data = prefix + ".tv.csv";
  cfg.output = prefix + ".fit.json";
  cfg.seed = spec.seed;
  return cfg;
}

ojson manifest_json(const ScenarioSpec& spec, const SimulatedCohort& cohort, const std::string& prefix) {
  const Model model(spec.truth_model);
  ojson j;
  j["version"] = kVersion;
  j["preset"] = spec.name;
  j["seed"] = spec.seed;
  j["n_subjects"] = spec.n_subjects;
  j["declared_magnitudes"] = true;
  j["note"] = "Truth magnitudes are declared preset choices; check recovery against the values recorded here.";
  j["partition"] = spec.truth_model.partition.cuts();
  ojson tm;
  for (auto s : kSubmodels) {
    auto terms = ojson::array();
    for (const auto& t : spec.truth_model[s].terms) terms.push_back(t.name());
    tm[std::string(to_string(s))] = {{"link", spec.truth_model[s].link.name()}, {"terms", terms}};
  }
  j["truth_model"] = tm;
  j["truth"] = {{"names", model.param_names()},
                {"values", std::vector<double>(spec.truth.data(), spec.truth.data() + spec.truth.size())}};
  ojson curves;
  for (auto s : kSubmodels) {
    const Eigen::VectorXd a = model.baseline_curve(s, spec.truth);
    curves[std::string(to_string(s))] = std::vector<double>(a.data(), a.data() + a.size());
  }
  j["truth_baseline_link_scale"] = curves;
  auto gens = ojson::array();
  for (const auto& g : spec.covariates) {
    ojson gj = {{"name", g.name}, {"kind", to_string(g.kind)}};
    if (g.kind == CovariateGenerator::Kind::Normal) {
      gj["mean"] = g.mean;
      gj["sd"] = g.sd;
    } else {
      gj["p"] = g.p;
    }
    if (g.kind == CovariateGenerator::Kind::SwitchOn) gj["rate"] = g.rate;
    gens.push_back(std::move(gj));
  }
  j["covariates"] = gens;
  j["truncation"] = {{"entry_weights", spec.truncation.entry_weights}};
  j["censoring"] = {{"kind", to_string(spec.censoring.kind)},
                    {"target_rate", spec.censoring.target_rate},
                    {"hazard", cohort.censoring_hazard},
                    {"realized_rate", cohort.censoring_rate}};
  int d1 = 0, d2 = 0;
  for (const auto& r : cohort.records) {
    d1 += r.d1;
    d2 += r.d2;
  }
  j["summary"] = {{"subjects", cohort.records.size()}, {"nonterminal_events", d1}, {"terminal_events", d2}};
  j["files"] = {{"subjects", prefix + ".csv"}, {"time_varying", prefix + ".tv.csv"}, {"config", prefix + ".config.json"}};
  return j;
}

int cmd_simulate(const SimulateOptions& opt, std::ostream& out) {
  ScenarioSpec spec = scenario_preset(opt.preset);
  if (opt.n) spec.n_subjects = *opt.n;
  if (opt.seed) spec.seed = *opt.seed;
  if (opt.censoring) {
    spec.censoring.kind = *opt.censoring > 0.0 ? CensoringSpec::Kind::Random : CensoringSpec::Kind::Administrative;
    spec.censoring.target_rate = *opt.censoring;
  }
  const CensorMode mode = opt.censor_mode.empty() ? CensorMode::DropPartial : parse_censor_mode(opt.censor_mode);
  const auto cohort = simulate_cohort(spec);

  std::ostringstream subjects, tv;
  write_subjects_csv(subjects, cohort.records);
  write_time_varying_csv(tv, cohort.records);
  write_text_file(opt.out + ".csv", subjects.str());
  write_text_file(opt.out + ".tv.csv", tv.str());
  write_text_file(opt.out + ".manifest.json", manifest_json(spec, cohort, opt.out).dump(2) + "\n");
  write_text_file(opt.out + ".config.json", to_json(suggested_config(spec, opt.out, mode)).dump(2) + "\n");
  out << "simulated " << cohort.records.size() << " subjects (" << spec.name << ", seed " << spec.seed
      << ") to " << opt.out << ".csv\n";
  return kExitOk;
}

struct CurvesOptions {
  std::string fit, which = "pi2", out;
  std::vector<std::string> profile;
};

int cmd_curves(const CurvesOptions& opt, std::ostream& out) {
  const std::string text = read_text_file(opt.fit);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    throw InputError(opt.fit, 1, "malformed fit JSON");
  }
  if (!j.contains("config") || !j.contains("parameters") || !j["parameters"].contains("values"))
    throw InputError(opt.fit, 1, "not a fit result (missing config or parameters)");
  const RunConfig cfg = parse_run_config(j["config"].dump(), opt.fit + "#config");
  const Model model(cfg.model);
  const auto values = j["parameters"]["values"].get<std::vector<double>>();
  if (static_cast<int>(values.size()) != model.num_params())
    throw InputError(opt.fit, 1, "parameter count does not match the embedded config");
  const Eigen::VectorXd params = Eigen::Map<const Eigen::VectorXd>(values.data(), model.num_params());
  Eigen::MatrixXd cov;
  if (j.contains("covariance") && j["covariance"].is_array()) {
    const auto rows = j["covariance"].get<std::vector<std::vector<double>>>();
    cov.resize(model.num_params(), model.num_params());
    for (int a = 0; a < model.num_params(); ++a)
      for (int b = 0; b < model.num_params(); ++b) cov(a, b) = rows.at(static_cast<size_t>(a)).at(static_cast<size_t>(b));
  }

  const Submodel which = parse_submodel(opt.which);
  Covariates profile;
  for (const auto& item : opt.profile) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigurationError("--profile expects name=value, got '" + item + "'");
    const std::string name = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (value.empty() || *end != '\0' || !std::isfinite(v))
      throw ConfigurationError("--profile value for '" + name + "' is not a number");
    if (name == kPriorNonTerminal && which != Submodel::Pi2)
      throw ConfigurationError("y1_prev is only meaningful for pi2 curves");
    profile[name] = v;
  }
  const auto curve = profile_curves(model, params, cov, which, profile);

  std::ostringstream csv;
  csv << "k,t_left,t_right,estimate,lower,upper\n";
  char buf[160];
  for (const auto& c : curve) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", c.k, model.partition().cut(c.k - 1),
                  model.partition().cut(c.k), c.estimate, c.lower, c.upper);
    csv << buf;
  }
  emit(opt.out, csv.str(), out);
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semi-competing risks as a longitudinal bivariate binary process", "semicomp"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  FitOptions fit_opt;
  auto* fit = app.add_subcommand("fit", "Fit the model over a lambda grid and write JSON results");
  fit->add_option("--config", fit_opt.config, "JSON run configuration")->required();
  fit->add_option("--data", fit_opt.data, "Subject CSV (overrides config)");
  fit->add_option("--tv-data", fit_opt.tv_data, "Time-varying covariate CSV (overrides config)");
  fit->add_option("--out", fit_opt.out, "Output JSON path, '-' for stdout (overrides config)");
  fit->add_option("--lambda", fit_opt.lambdas, "Common penalty weight; repeat to form a grid");
  fit->add_option("--seed", fit_opt.seed, "Seed recorded with the run");
  fit->add_option("--threads", fit_opt.threads, "Worker threads for likelihood evaluation");
  fit->add_option("--censor-mode", fit_opt.censor_mode, "drop_partial or round_up");

  SimulateOptions sim_opt;
  auto* sim = app.add_subcommand("simulate", "Simulate a cohort from a preset scenario");
  sim->add_option("--preset", sim_opt.preset, "null, simple or complex")->capture_default_str();
  sim->add_option("--n", sim_opt.n, "Number of subjects");
  sim->add_option("--seed", sim_opt.seed, "Random seed");
  sim->add_option("--censoring", sim_opt.censoring, "Random censoring target rate in [0, 0.3]");
  sim->add_option("--censor-mode", sim_opt.censor_mode, "Censor mode written to the suggested config");
  sim->add_option("--out", sim_opt.out, "Output prefix")->capture_default_str();

  CurvesOptions cur_opt;
  auto* cur = app.add_subcommand("curves", "Write per-interval curve estimates with pointwise bands");
  cur->add_option("--fit", cur_opt.fit, "Fit result JSON")->required();
  cur->add_option("--which", cur_opt.which, "pi1, pi2 or theta")->capture_default_str();
  cur->add_option("--profile", cur_opt.profile, "Covariate value name=value; repeatable");
  cur->add_option("--out", cur_opt.out, "Output CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (*fit) return cmd_fit(fit_opt, out, err);
    if (*sim) return cmd_simulate(sim_opt, out);
    if (*cur) return cmd_curves(cur_opt, out);
  } catch (const InputError& e) {
    err << "semicomp: input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const ConfigurationError& e) {
    err << "semicomp: configuration error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const DataError& e) {
    err << "semicomp: data error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::runtime_error& e) {
    err << "semicomp: numerical failure: " << e.what() << "\n";
    return kExitNumericalError;
  }
  return kExitInputError;
}

}  // namespace semicomp
