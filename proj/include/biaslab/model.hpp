#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "biaslab/datagen.hpp"

namespace biaslab {

// 4 skills (statistics, python, pytorch, matlab) followed by a one-hot
// university block in roster order.
inline constexpr std::size_t kFeatureDim = kNumSkills + kRosterSize;
using FeatureVector = std::array<double, kFeatureDim>;

FeatureVector encode(const Applicant& applicant);
// Inverse of encode's one-hot block. Throws unless exactly one slot is 1.
University decode_university(const FeatureVector& x);

enum class Activation { kRelu, kLogistic };

std::string_view activation_name(Activation a);
Activation parse_activation(std::string_view name);

struct DenseLayer {
  std::size_t rows = 0;  // outputs
  std::size_t cols = 0;  // inputs
  std::vector<double> weights;  // row-major, rows x cols
  std::vector<double> bias;     // rows
  Activation activation = Activation::kRelu;

  DenseLayer() = default;
  DenseLayer(std::size_t out, std::size_t in, Activation act)
      : rows(out), cols(in), weights(out * in, 0.0), bias(out, 0.0), activation(act) {}

  double& w(std::size_t r, std::size_t c) { return weights[r * cols + c]; }
  double w(std::size_t r, std::size_t c) const { return weights[r * cols + c]; }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// Also used as the gradient container: a gradient has the same shapes as
// the parameters it differentiates.
struct NetworkParams {
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().cols; }
  std::size_t parameter_count() const;

  // Throws std::invalid_argument on broken chaining, a non-scalar output,
  // a non-logistic output layer, or non-finite values.
  void validate() const;

  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);

  friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

// Default architecture.
inline constexpr std::array<std::size_t, 4> kLayerSizes = {kFeatureDim, 16, 16, 1};

// All-zero parameters with rectifier hiddens and a logistic output.
NetworkParams zero_network(std::span<const std::size_t> sizes);
// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
NetworkParams init_network(std::span<const std::size_t> sizes, std::uint64_t seed);

struct ForwardTrace {
  // activations[0] is the input; activations[l + 1] is layer l's output.
  std::vector<std::vector<double>> activations;
  std::vector<std::vector<double>> pre_activations;
  double logit = 0.0;
  double probability = 0.5;
};

ForwardTrace forward(const NetworkParams& params, std::span<const double> x);

// Probability only; same value as forward(...).probability.
double predict(const NetworkParams& params, const Applicant& applicant);

inline constexpr double kProbabilityClamp = 1e-7;

double logistic(double z);
// Binary cross-entropy with p clamped to [1e-7, 1 - 1e-7]; y = 1 for Invite.
double loss(double probability, Decision label);

// Gradient of loss(forward(params, x).probability, label) with respect to
// every weight and bias.
NetworkParams backward(const NetworkParams& params, std::span<const double> x, Decision label);

struct TrainConfig {
  double learning_rate = 0.005;
  std::size_t epochs = 400;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  // Adam moment coefficients.
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct TrainReport {
  std::vector<double> epoch_loss;
  double train_accuracy = 0.0;
  std::optional<double> held_out_accuracy;
  friend bool operator==(const TrainReport&, const TrainReport&) = default;
};

struct TrainedModel {
  NetworkParams params;
  TrainConfig config;
  TrainReport report;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Deterministic given (dataset, config). `held_out`, when given, only feeds
// the report.
TrainedModel train(const Dataset& dataset, const TrainConfig& config,
                   const Dataset* held_out = nullptr);

struct Evaluation {
  double accuracy = 0.0;
  double mean_probability = 0.0;
  double predicted_invite_fraction = 0.0;
};

// Prediction is Invite iff probability > 0.5.
inline constexpr double kDecisionThreshold = 0.5;

Evaluation evaluate(const NetworkParams& params, const Dataset& dataset);

}  // namespace biaslab
