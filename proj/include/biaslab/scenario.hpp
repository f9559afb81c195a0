#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

#include "biaslab/datagen.hpp"
#include "biaslab/model.hpp"

namespace biaslab {

// The four demonstration setups served to the UI and used by the
// acceptance suite.
enum class Scenario { kCovariate, kSelection, kImbalance, kUnbiased };

inline constexpr std::array<Scenario, 4> kAllScenarios = {
    Scenario::kCovariate, Scenario::kSelection, Scenario::kImbalance, Scenario::kUnbiased};

std::string_view scenario_name(Scenario s);
Scenario parse_scenario(std::string_view name);  // throws std::invalid_argument

struct ScenarioConfig {
  std::size_t train_size = 10000;
  std::size_t test_size = 10000;
  std::uint64_t train_seed = 0;
  std::uint64_t test_seed = 0;
  std::uint64_t model_seed = 7;
};

// Shipped defaults. Biased historical samples (covariate, selection) hold
// 2,000 applicants; everything else 10,000.
ScenarioConfig default_scenario_config(Scenario s);

BiasSpec train_bias(Scenario s);
// Covariate and selection test on the unbiased population; the imbalance
// scenario tests on Imbalance{0.10}.
BiasSpec test_bias(Scenario s);

Dataset scenario_dataset(Scenario s, SplitTag split, const ScenarioConfig& config);

TrainConfig scenario_train_config(const ScenarioConfig& config);

}  // namespace biaslab
