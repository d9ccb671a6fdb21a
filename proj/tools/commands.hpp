#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "bsml/model.hpp"
#include "bsml/sim.hpp"

namespace bsml::cli {

enum ExitCode : int { kOk = 0, kInputError = 2, kNumericalError = 3 };

/// Entry point shared by the executable and the integration tests.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args);

/// Overlays a JSON object onto `base`. Unknown keys and invalid values throw
/// InputError with the offending field path.
GibbsConfig gibbs_from_json(const nlohmann::json& j, GibbsConfig base, const std::string& where = "gibbs");
nlohmann::json gibbs_to_json(const GibbsConfig& config);

SimulationSpec simulation_from_json(const nlohmann::json& j, SimulationSpec base,
                                    const std::string& where = "simulation");
nlohmann::json simulation_to_json(const SimulationSpec& spec);

struct BenchmarkPlan {
  SimulationSpec simulation;
  GibbsConfig gibbs;
  std::size_t replicates = 10;
  std::vector<Index> rank_grid;
  unsigned threads = 0;
};

/// Named starting points: independent-200x30, independent-500x10, rank-grid-1000x12, compound-noise-500x10.
BenchmarkPlan benchmark_preset(const std::string& name);
BenchmarkPlan benchmark_from_json(const nlohmann::json& j);
nlohmann::json benchmark_to_json(const BenchmarkPlan& plan);

}  // namespace bsml::cli
