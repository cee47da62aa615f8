#pragma once
// Key=value experiment configs: a strict parser (unknown or duplicate keys
// rejected, '#' comments), a complete resolved echo that re-parses to the
// same experiment, and oracle sampling for physics-guided runs.

#include <pinto/training.hpp>

#include <string>
#include <vector>

namespace pinto {

struct ExperimentConfig {
  TrainConfig train;
  std::string run_name;
  std::vector<int> guided_grid;  // oracle grid for physics-guided sampling
};

// throws std::invalid_argument with the offending line on any config error
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string format_config(const ExperimentConfig& cfg);

std::vector<int> default_guided_grid(const std::string& problem);

// per seen condition, oracle values sampled at that condition's collocation
// points (multilinear off an oracle grid)
std::vector<Matrix> guided_reference_values(const TrainConfig& cfg,
                                            const std::vector<int>& grid);

}  // namespace pinto
