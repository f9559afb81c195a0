#pragma once

#include <cstddef>

#include "biaslab/model.hpp"

namespace biaslab::testing {

// Three-layer network that reproduces the HR rule with saturated output:
// unit pairs relu(k(x - 0.7)) - relu(k(x - 0.7) - 1) count high skills, the
// second layer fires when the count exceeds 1.5, and the output logit is
// +-1000, so the probability is exactly 0 or 1 in double precision.
inline NetworkParams hr_oracle_network(double sharpness = 1e9) {
  NetworkParams net;
  DenseLayer l1(2 * kNumSkills, kFeatureDim, Activation::kRelu);
  for (std::size_t s = 0; s < kNumSkills; ++s) {
    l1.w(2 * s, s) = sharpness;
    l1.bias[2 * s] = -0.7 * sharpness;
    l1.w(2 * s + 1, s) = sharpness;
    l1.bias[2 * s + 1] = -0.7 * sharpness - 1.0;
  }
  DenseLayer l2(1, 2 * kNumSkills, Activation::kRelu);
  for (std::size_t s = 0; s < kNumSkills; ++s) {
    l2.w(0, 2 * s) = 1.0;
    l2.w(0, 2 * s + 1) = -1.0;
  }
  l2.bias[0] = -1.5;
  DenseLayer l3(1, 1, Activation::kLogistic);
  l3.w(0, 0) = 4000.0;
  l3.bias[0] = -1000.0;
  net.layers = {l1, l2, l3};
  return net;
}

// Single logistic layer over `in` inputs.
inline NetworkParams linear_network(std::size_t in) {
  NetworkParams net;
  net.layers.emplace_back(1, in, Activation::kLogistic);
  return net;
}

}  // namespace biaslab::testing
