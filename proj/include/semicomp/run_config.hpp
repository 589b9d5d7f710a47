#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "semicomp/likelihood.hpp"
#include "semicomp/model.hpp"
#include "semicomp/timegrid.hpp"

namespace semicomp {

struct RunConfig {
  ModelSpec model = ModelSpec::defaults(Partition({0.0, 1.0, 2.0}));
  CensorMode censor_mode = CensorMode::DropPartial;
  std::vector<PenaltyWeights> lambda_grid;  // empty: default grid if any baseline is penalized, else {0}
  std::string data;
  std::string tv_data;
  std::string output;
  std::uint64_t seed = 1;
  int threads = 1;

  // The grid actually fitted.
  std::vector<PenaltyWeights> resolved_lambda_grid() const;
};

// Parses a JSON run configuration. Errors are InputError values carrying the
// line of the offending key when it can be located in `text`.
RunConfig parse_run_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_run_config(const std::string& path);

// Fully resolved form (explicit cuts, every submodel spelled out); parsing it
// back yields an equal configuration.
nlohmann::ordered_json to_json(const RunConfig& config);

std::string_view to_string(CensorMode mode);
CensorMode parse_censor_mode(std::string_view name);

}  // namespace semicomp
