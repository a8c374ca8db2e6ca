#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "demandcast/eval.hpp"
#include "demandcast/model.hpp"
#include "demandcast/synthetic.hpp"

namespace demandcast::cli {

enum ExitCode : int {
  kOk = 0,
  kUsageError = 1,
  kDataError = 2,
  kNumericalError = 3,
};

/// Fully resolved settings for one invocation.
struct RunConfig {
  PipelineConfig pipeline;
  std::uint64_t seed = 42;
  int cluster = 1;
  std::vector<FeatureSet> features{FeatureSet::All, FeatureSet::ConsumptionTemperature};
  std::size_t horizon = kThreeDayHorizon;
  std::vector<std::string> months;
  // synth
  std::size_t consumers = 16;
  std::size_t days = 365;
  std::string start = "2015-03-09";
};

/// Overlays a JSON config file on `c`. Keys starting with "_" are ignored; unknown
/// keys and malformed values throw std::invalid_argument.
void apply_config_file(RunConfig& c, const std::filesystem::path& path);

/// Generator settings for `synth` under `c`.
SyntheticSpec synthetic_spec(const RunConfig& c);

/// Runs the command line `args` (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace demandcast::cli
