#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "biaslab/datagen.hpp"
#include "biaslab/model.hpp"

namespace biaslab {

// Inclusive [lower, upper]; construction rejects lower > upper.
struct Range {
  double lower = 0.0;
  double upper = 1.0;

  Range() = default;
  Range(double lo, double hi);

  bool contains(double v) const { return v >= lower && v <= upper; }
  friend bool operator==(const Range&, const Range&) = default;
};

// Parallel-coordinates brush. Unset axes are unconstrained; an example is
// selected iff it passes every constrained axis.
struct BrushSelection {
  std::array<std::optional<Range>, kNumSkills> skills;
  std::optional<std::vector<University>> universities;
  std::optional<std::vector<Decision>> decisions;  // HR decision
  std::optional<Range> probability;                // model output

  static BrushSelection all() { return {}; }
  bool is_all() const;
  // Throws std::invalid_argument when a range leaves its axis domain [0, 1].
  void validate() const;

  BrushSelection& skill(Skill s, Range r) {
    skills[static_cast<std::size_t>(s)] = r;
    return *this;
  }

  bool matches(const LabeledExample& e, double probability) const;
  // Conjunction: an example passes iff it passes both selections.
  static BrushSelection intersect(const BrushSelection& a, const BrushSelection& b);
};

struct BrushRow {
  std::size_t index = 0;  // position in the dataset
  LabeledExample example;
  double probability = 0.0;
};

struct BrushResult {
  std::vector<BrushRow> rows;
  std::size_t count = 0;
  double mean_probability = 0.0;  // 0 when nothing is selected
  double invite_share = 0.0;      // HR invite share among the selection
};

BrushResult brush(const Dataset& dataset, const NetworkParams& params,
                  const BrushSelection& selection);

struct SkillCoverage {
  Skill skill = Skill::kStatistics;
  double train_fraction = 0.0;  // fraction strictly above threshold
  double test_fraction = 0.0;
  bool shift_warning = false;
};

struct CoverageReport {
  double threshold = kSkillThreshold;
  std::array<SkillCoverage, kNumSkills> skills{};
};

// Warns for a skill whose train fraction is 0 while the test fraction
// exceeds 0.05.
CoverageReport coverage_report(const Dataset& train, const Dataset& test,
                               double threshold = kSkillThreshold);

struct UniversityAssociation {
  std::size_t count = 0;
  double invite_rate = 0.0;
  double lift = 0.0;
  bool present() const { return count > 0; }
};

struct AssociationReport {
  double global_invite_rate = 0.0;
  std::array<UniversityAssociation, kRosterSize> universities{};
};

// lift = university invite rate / global invite rate. Absent universities
// have count 0 and lift 0. When nobody is invited every present lift is 1.
AssociationReport university_label_association(const Dataset& dataset);

struct ConfusionBreakdown {
  std::size_t true_invite = 0;
  std::size_t false_invite = 0;
  std::size_t true_reject = 0;
  std::size_t false_reject = 0;

  std::size_t total() const { return true_invite + false_invite + true_reject + false_reject; }
  friend bool operator==(const ConfusionBreakdown&, const ConfusionBreakdown&) = default;
};

ConfusionBreakdown confusion(const NetworkParams& params, const Dataset& dataset);

struct PieQuadruple {
  double train_invite_ratio = 0.0;
  double test_invite_ratio = 0.0;
  double predicted_invite_ratio = 0.0;
  ConfusionBreakdown breakdown;
  friend bool operator==(const PieQuadruple&, const PieQuadruple&) = default;
};

inline constexpr double kImbalanceTestRatio = 0.10;

struct SweepConfig {
  std::size_t train_size = 10000;
  std::size_t test_size = 10000;
  std::uint64_t train_seed = 41;
  std::uint64_t test_seed = 42;
  TrainConfig train = [] {
    TrainConfig t;
    t.seed = 7;
    return t;
  }();
};

// Trains on Imbalance{train_ratio} and evaluates on Imbalance{0.10}.
PieQuadruple imbalance_sweep(double train_ratio, const SweepConfig& config);

}  // namespace biaslab
