#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "biaslab/datagen.hpp"
#include "biaslab/model.hpp"

namespace biaslab {

struct LrpConfig {
  double epsilon = 0.01;  // stabilizer, must be > 0
};

// Layer-wise relevance of one decision.
struct RelevanceVector {
  double probability = 0.5;
  double logit = 0.0;
  // Input-layer relevances; one per input component.
  std::vector<double> absolute;
  // |absolute| as percentages summing to 100. Uniform when all are zero.
  std::vector<double> relative;

  // Only meaningful for kFeatureDim-sized inputs.
  double skill_share(Skill s) const { return relative.at(static_cast<std::size_t>(s)); }
  double university_share(University u) const { return relative.at(kNumSkills + u.index()); }
  // Sum of the ten one-hot slots.
  double university_share() const;
};

// Percentages of |values|, summing to 100; uniform for the zero vector.
std::vector<double> relative_shares(std::span<const double> values);

// Epsilon-rule LRP from the output logit back to the inputs:
//   R_i = sum_j a_i w_ij / (z_j + eps * sign(z_j)) * R_j,  z_j = sum_i a_i w_ij + b_j
// with sign(0) taken as +1. Throws std::domain_error on non-finite values.
RelevanceVector explain(const NetworkParams& params, std::span<const double> x,
                        const LrpConfig& cfg = {});

RelevanceVector explain(const NetworkParams& params, const Applicant& applicant,
                        const LrpConfig& cfg = {});

// Arithmetic mean of the relative shares over the examples `select` keeps
// (all examples when `select` is empty). Throws on an empty selection.
std::array<double, kFeatureDim> mean_group_relevance(
    const NetworkParams& params, const Dataset& dataset, const LrpConfig& cfg = {},
    const std::function<bool(const LabeledExample&)>& select = {});

}  // namespace biaslab
