#include "biaslab/scenario.hpp"

#include <stdexcept>
#include <string>

namespace biaslab {

std::string_view scenario_name(Scenario s) {
  switch (s) {
    case Scenario::kCovariate: return "covariate";
    case Scenario::kSelection: return "selection";
    case Scenario::kImbalance: return "imbalance";
    case Scenario::kUnbiased: return "unbiased";
  }
  return "unbiased";
}

Scenario parse_scenario(std::string_view name) {
  for (const Scenario s : kAllScenarios) {
    if (scenario_name(s) == name) return s;
  }
  throw std::invalid_argument("unknown scenario '" + std::string(name) + "'");
}

ScenarioConfig default_scenario_config(Scenario s) {
  ScenarioConfig c;
  switch (s) {
    case Scenario::kCovariate:
      c.train_size = 2000;
      c.train_seed = 21;
      c.test_seed = 22;
      break;
    case Scenario::kSelection:
      c.train_size = 2000;
      c.train_seed = 31;
      c.test_seed = 32;
      break;
    case Scenario::kImbalance:
      c.train_seed = 41;
      c.test_seed = 42;
      break;
    case Scenario::kUnbiased:
      c.train_seed = 11;
      c.test_seed = 12;
      break;
  }
  return c;
}

BiasSpec train_bias(Scenario s) {
  switch (s) {
    case Scenario::kCovariate: return CovariateShift{Skill::kPytorch, kSkillThreshold};
    case Scenario::kSelection: return default_selection_bias();
    case Scenario::kImbalance: return Imbalance{0.10};
    case Scenario::kUnbiased: return NoBias{};
  }
  return NoBias{};
}

BiasSpec test_bias(Scenario s) {
  if (s == Scenario::kImbalance) return Imbalance{0.10};
  return NoBias{};
}

Dataset scenario_dataset(Scenario s, SplitTag split, const ScenarioConfig& config) {
  if (split == SplitTag::kTrain) {
    return generate(config.train_size, config.train_seed, train_bias(s), SplitTag::kTrain);
  }
  return generate(config.test_size, config.test_seed, test_bias(s), SplitTag::kTest);
}

TrainConfig scenario_train_config(const ScenarioConfig& config) {
  TrainConfig t;
  t.seed = config.model_seed;
  return t;
}

}  // namespace biaslab
