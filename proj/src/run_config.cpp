#include "semicomp/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "semicomp/errors.hpp"
#include "semicomp/fit.hpp"

namespace semicomp {

using nlohmann::json;

std::string_view to_string(CensorMode mode) {
  return mode == CensorMode::DropPartial ? "drop_partial" : "round_up";
}

CensorMode parse_censor_mode(std::string_view name) {
  if (name == "drop_partial") return CensorMode::DropPartial;
  if (name == "round_up") return CensorMode::RoundUp;
  throw ConfigurationError("unknown censor_mode '" + std::string(name) + "' (expected drop_partial or round_up)");
}

std::vector<PenaltyWeights> RunConfig::resolved_lambda_grid() const {
  if (!lambda_grid.empty()) return lambda_grid;
  const bool any_penalized = std::any_of(model.submodels.begin(), model.submodels.end(), [](const SubmodelSpec& s) {
    return s.baseline.mode == BaselineMode::BSpline;
  });
  if (!any_penalized) return {PenaltyWeights{}};
  return default_lambda_grid();
}

namespace {

int line_of_offset(const std::string& text, size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

class Reader {
 public:
  Reader(const std::string& text, std::string source) : text_(text), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& message) const {
    std::string dotted;
    for (const auto& p : path) dotted += (dotted.empty() ? "" : ".") + p;
    throw InputError(source_, locate(path), (dotted.empty() ? "" : "'" + dotted + "': ") + message);
  }

  void only_keys(const json& obj, const std::vector<std::string>& path,
                 std::initializer_list<std::string_view> allowed) const {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& [key, value] : obj.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        auto p = path;
        p.push_back(key);
        fail(p, "unknown key");
      }
    }
  }

  double number(const json& v, const std::vector<std::string>& path) const {
    if (!v.is_number()) fail(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(path, "expected a finite number");
    return x;
  }

  int integer(const json& v, const std::vector<std::string>& path) const {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    return v.get<int>();
  }

  std::string string(const json& v, const std::vector<std::string>& path) const {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
  }

 private:
  // Line of the last path component, searching each key after its parent.
  int locate(const std::vector<std::string>& path) const {
    size_t pos = 0;
    bool found = false;
    for (const auto& key : path) {
      if (!key.empty() && key.front() == '[') continue;
      const size_t at = text_.find("\"" + key + "\"", pos);
      if (at == std::string::npos) break;
      pos = at;
      found = true;
    }
    return found ? line_of_offset(text_, pos) : 1;
  }

  const std::string& text_;
  std::string source_;
};

using Path = std::vector<std::string>;

Path extend(Path p, const std::string& key) {
  p.push_back(key);
  return p;
}

void read_baseline(const Reader& r, const json& v, const Path& path, BaselineSpec& spec) {
  r.only_keys(v, path, {"mode", "num_knots", "degree", "penalty_order", "knots"});
  if (v.contains("mode")) {
    const auto mode = r.string(v["mode"], extend(path, "mode"));
    if (mode == "unstructured")
      spec.mode = BaselineMode::Unstructured;
    else if (mode == "bspline")
      spec.mode = BaselineMode::BSpline;
    else
      r.fail(extend(path, "mode"), "expected 'unstructured' or 'bspline'");
  }
  if (v.contains("num_knots")) spec.spline.num_knots = r.integer(v["num_knots"], extend(path, "num_knots"));
  if (v.contains("degree")) spec.spline.degree = r.integer(v["degree"], extend(path, "degree"));
  if (v.contains("penalty_order"))
    spec.spline.penalty_order = r.integer(v["penalty_order"], extend(path, "penalty_order"));
  if (v.contains("knots")) {
    const auto kp = extend(path, "knots");
    if (!v["knots"].is_array()) r.fail(kp, "expected an array of numbers");
    spec.spline.knots.clear();
    for (const auto& x : v["knots"]) spec.spline.knots.push_back(r.number(x, kp));
    if (!spec.spline.knots.empty()) spec.spline.num_knots = static_cast<int>(spec.spline.knots.size());
  }
  if (spec.mode == BaselineMode::BSpline) {
    try {
      validate(spec.spline);
    } catch (const ConfigurationError& e) {
      r.fail(path, e.what());
    }
  }
}

Term parse_term(const Reader& r, const std::string& text, const Path& path) {
  Term t;
  std::stringstream ss(text);
  std::string factor;
  while (std::getline(ss, factor, ':')) {
    if (factor.empty()) r.fail(path, "empty factor in term '" + text + "'");
    t.factors.push_back(factor);
  }
  if (t.factors.empty()) r.fail(path, "empty term");
  return t;
}

PenaltyWeights read_lambda(const Reader& r, const json& v, const Path& path) {
  PenaltyWeights w;
  if (v.is_number()) {
    w = PenaltyWeights::common(r.number(v, path));
  } else {
    r.only_keys(v, path, {"pi1", "pi2", "theta"});
    if (v.contains("pi1")) w.pi1 = r.number(v["pi1"], extend(path, "pi1"));
    if (v.contains("pi2")) w.pi2 = r.number(v["pi2"], extend(path, "pi2"));
    if (v.contains("theta")) w.theta = r.number(v["theta"], extend(path, "theta"));
  }
  if (w.pi1 < 0 || w.pi2 < 0 || w.theta < 0) r.fail(path, "penalty weights must be non-negative");
  return w;
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(source, line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1), "malformed JSON");
  }
  const Reader r(text, source);
  r.only_keys(root, {}, {"partition", "censor_mode", "baseline", "pi1", "pi2", "theta", "lambda_grid", "data",
                         "tv_data", "output", "seed", "threads"});

  if (!root.contains("partition")) r.fail({}, "missing 'partition'");
  const auto& pj = root["partition"];
  const Path pp{"partition"};
  std::vector<double> cuts;
  if (pj.is_object() && pj.contains("cuts")) {
    r.only_keys(pj, pp, {"cuts"});
    if (!pj["cuts"].is_array()) r.fail(extend(pp, "cuts"), "expected an array of numbers");
    for (const auto& x : pj["cuts"]) cuts.push_back(r.number(x, extend(pp, "cuts")));
  } else {
    r.only_keys(pj, pp, {"origin", "width", "count"});
    for (const char* key : {"origin", "width", "count"})
      if (!pj.contains(key)) r.fail(pp, std::string("expected 'cuts' or origin/width/count; missing '") + key + "'");
    const double origin = r.number(pj["origin"], extend(pp, "origin"));
    const double width = r.number(pj["width"], extend(pp, "width"));
    const int count = r.integer(pj["count"], extend(pp, "count"));
    if (!(width > 0.0)) r.fail(extend(pp, "width"), "width must be positive");
    if (count < 2) r.fail(extend(pp, "count"), "at least two intervals are required");
    for (int k = 0; k <= count; ++k) cuts.push_back(origin + width * k);
  }
  RunConfig cfg;
  try {
    cfg.model = ModelSpec::defaults(Partition(cuts));
  } catch (const ConfigurationError& e) {
    r.fail(pp, e.what());
  }

  if (root.contains("censor_mode")) {
    try {
      cfg.censor_mode = parse_censor_mode(r.string(root["censor_mode"], {"censor_mode"}));
    } catch (const ConfigurationError& e) {
      r.fail({"censor_mode"}, e.what());
    }
  }

  BaselineSpec default_baseline;
  if (root.contains("baseline")) read_baseline(r, root["baseline"], {"baseline"}, default_baseline);
  for (auto s : kSubmodels) {
    const std::string key(to_string(s));
    auto& sub = cfg.model[s];
    sub.baseline = default_baseline;
    if (!root.contains(key)) continue;
    const auto& sj = root[key];
    const Path sp{key};
    r.only_keys(sj, sp, {"link", "terms", "baseline"});
    if (sj.contains("link")) {
      try {
        sub.link = Link::parse(r.string(sj["link"], extend(sp, "link")));
      } catch (const ConfigurationError& e) {
        r.fail(extend(sp, "link"), e.what());
      }
    }
    if (sj.contains("terms")) {
      const auto tp = extend(sp, "terms");
      if (!sj["terms"].is_array()) r.fail(tp, "expected an array of strings");
      for (const auto& t : sj["terms"]) sub.terms.push_back(parse_term(r, r.string(t, tp), tp));
    }
    if (sj.contains("baseline")) read_baseline(r, sj["baseline"], extend(sp, "baseline"), sub.baseline);
  }

  if (root.contains("lambda_grid")) {
    const Path lp{"lambda_grid"};
    if (!root["lambda_grid"].is_array() || root["lambda_grid"].empty()) r.fail(lp, "expected a non-empty array");
    for (const auto& v : root["lambda_grid"]) cfg.lambda_grid.push_back(read_lambda(r, v, lp));
  }
  if (root.contains("data")) cfg.data = r.string(root["data"], {"data"});
  if (root.contains("tv_data")) cfg.tv_data = r.string(root["tv_data"], {"tv_data"});
  if (root.contains("output")) cfg.output = r.string(root["output"], {"output"});
  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned()) r.fail({"seed"}, "expected a non-negative integer");
    cfg.seed = root["seed"].get<std::uint64_t>();
  }
  if (root.contains("threads")) {
    cfg.threads = r.integer(root["threads"], {"threads"});
    if (cfg.threads < 1) r.fail({"threads"}, "threads must be at least 1");
  }

  // Compile once so model-level problems surface before any data is read.
  try {
    const Model model(cfg.model);
    for (const auto& w : cfg.resolved_lambda_grid()) validate(w, model);
  } catch (const ConfigurationError& e) {
    throw InputError(source, 1, e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path, 0, "cannot open configuration file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path);
}

namespace {

nlohmann::ordered_json baseline_json(const BaselineSpec& b) {
  nlohmann::ordered_json j;
  j["mode"] = b.mode == BaselineMode::BSpline ? "bspline" : "unstructured";
  if (b.mode == BaselineMode::BSpline) {
    j["num_knots"] = b.spline.knot_count();
    j["degree"] = b.spline.degree;
    j["penalty_order"] = b.spline.penalty_order;
    if (!b.spline.knots.empty()) j["knots"] = b.spline.knots;
  }
  return j;
}

}  // namespace

nlohmann::ordered_json to_json(const RunConfig& config) {
  nlohmann::ordered_json j;
  j["partition"] = {{"cuts", config.model.partition.cuts()}};
  j["censor_mode"] = to_string(config.censor_mode);
  for (auto s : kSubmodels) {
    const auto& sub = config.model[s];
    nlohmann::ordered_json sj;
    sj["link"] = sub.link.name();
    auto terms = nlohmann::ordered_json::array();
    for (const auto& t : sub.terms) terms.push_back(t.name());
    sj["terms"] = terms;
    sj["baseline"] = baseline_json(sub.baseline);
    j[std::string(to_string(s))] = sj;
  }
  auto grid = nlohmann::ordered_json::array();
  for (const auto& w : config.resolved_lambda_grid())
    grid.push_back({{"pi1", w.pi1}, {"pi2", w.pi2}, {"theta", w.theta}});
  j["lambda_grid"] = grid;
  j["data"] = config.data;
  j["tv_data"] = config.tv_data;
  j["output"] = config.output;
  j["seed"] = config.seed;
  j["threads"] = config.threads;
  return j;
}

}  // namespace semicomp
