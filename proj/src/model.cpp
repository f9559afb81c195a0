#include "biaslab/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "biaslab/random.hpp"

namespace biaslab {

namespace {

// Reusable buffers for one forward/backward pass.
struct Workspace {
  std::vector<std::vector<double>> act;  // act[0] = input
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> delta;  // dL/dpre per layer

  explicit Workspace(const NetworkParams& params) {
    act.resize(params.layers.size() + 1);
    pre.resize(params.layers.size());
    delta.resize(params.layers.size());
    act[0].resize(params.input_dim());
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
      act[l + 1].resize(params.layers[l].rows);
      pre[l].resize(params.layers[l].rows);
      delta[l].resize(params.layers[l].rows);
    }
  }
};

void check_input(const NetworkParams& params, std::span<const double> x) {
  if (params.layers.empty()) throw std::invalid_argument("forward: network has no layers");
  if (x.size() != params.input_dim()) {
    std::ostringstream msg;
    msg << "forward: input has " << x.size() << " components, network expects "
        << params.input_dim();
    throw std::invalid_argument(msg.str());
  }
}

// Returns the logit.
double forward_into(const NetworkParams& params, std::span<const double> x, Workspace& ws) {
  std::copy(x.begin(), x.end(), ws.act[0].begin());
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const DenseLayer& layer = params.layers[l];
    const std::vector<double>& in = ws.act[l];
    for (std::size_t r = 0; r < layer.rows; ++r) {
      const double* w = &layer.weights[r * layer.cols];
      double z = layer.bias[r];
      for (std::size_t c = 0; c < layer.cols; ++c) z += w[c] * in[c];
      ws.pre[l][r] = z;
      ws.act[l + 1][r] = layer.activation == Activation::kRelu ? std::max(z, 0.0) : logistic(z);
    }
  }
  return ws.pre.back()[0];
}

// Adds dL/dparams for one example into `grad`, given dL/dlogit.
void backward_accumulate(const NetworkParams& params, Workspace& ws, double dlogit,
                         NetworkParams& grad) {
  const std::size_t depth = params.layers.size();
  ws.delta[depth - 1][0] = dlogit;
  for (std::size_t l = depth; l-- > 0;) {
    const DenseLayer& layer = params.layers[l];
    DenseLayer& g = grad.layers[l];
    const std::vector<double>& in = ws.act[l];
    const std::vector<double>& delta = ws.delta[l];
    for (std::size_t r = 0; r < layer.rows; ++r) {
      const double d = delta[r];
      if (d == 0.0) continue;
      g.bias[r] += d;
      double* gw = &g.weights[r * layer.cols];
      for (std::size_t c = 0; c < layer.cols; ++c) gw[c] += d * in[c];
    }
    if (l == 0) break;
    // Propagate into the previous layer (always a rectifier hidden layer).
    std::vector<double>& prev = ws.delta[l - 1];
    std::fill(prev.begin(), prev.end(), 0.0);
    for (std::size_t r = 0; r < layer.rows; ++r) {
      const double d = delta[r];
      if (d == 0.0) continue;
      const double* w = &layer.weights[r * layer.cols];
      for (std::size_t c = 0; c < layer.cols; ++c) prev[c] += d * w[c];
    }
    const DenseLayer& below = params.layers[l - 1];
    for (std::size_t c = 0; c < prev.size(); ++c) {
      if (below.activation == Activation::kRelu) {
        if (ws.pre[l - 1][c] <= 0.0) prev[c] = 0.0;
      } else {
        const double s = ws.act[l][c];
        prev[c] *= s * (1.0 - s);
      }
    }
  }
}

NetworkParams zeros_like(const NetworkParams& params) {
  NetworkParams g;
  g.layers.reserve(params.layers.size());
  for (const auto& layer : params.layers) g.layers.emplace_back(layer.rows, layer.cols, layer.activation);
  return g;
}

double label_value(Decision d) { return d == Decision::kInvite ? 1.0 : 0.0; }

}  // namespace

FeatureVector encode(const Applicant& applicant) {
  FeatureVector x{};
  for (std::size_t i = 0; i < kNumSkills; ++i) x[i] = applicant.skills[i];
  const std::size_t slot = applicant.university.index();
  if (slot >= kRosterSize) throw std::invalid_argument("encode: university not in roster");
  x[kNumSkills + slot] = 1.0;
  return x;
}

University decode_university(const FeatureVector& x) {
  std::optional<std::size_t> hot;
  for (std::size_t i = 0; i < kRosterSize; ++i) {
    const double v = x[kNumSkills + i];
    if (v == 1.0 && !hot) {
      hot = i;
    } else if (v != 0.0) {
      throw std::invalid_argument("decode_university: one-hot block is not a single 1");
    }
  }
  if (!hot) throw std::invalid_argument("decode_university: one-hot block is all zero");
  return University(*hot);
}

std::string_view activation_name(Activation a) {
  return a == Activation::kRelu ? "relu" : "logistic";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "logistic") return Activation::kLogistic;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

std::size_t NetworkParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.weights.size() + layer.bias.size();
  return n;
}

void NetworkParams::validate() const {
  if (layers.empty()) throw std::invalid_argument("network has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const DenseLayer& layer = layers[l];
    if (layer.rows == 0 || layer.cols == 0 || layer.weights.size() != layer.rows * layer.cols ||
        layer.bias.size() != layer.rows) {
      throw std::invalid_argument("layer " + std::to_string(l) + " has inconsistent dimensions");
    }
    if (l > 0 && layer.cols != layers[l - 1].rows) {
      throw std::invalid_argument("layer " + std::to_string(l) + " expects " +
                                  std::to_string(layer.cols) + " inputs but layer " +
                                  std::to_string(l - 1) + " produces " +
                                  std::to_string(layers[l - 1].rows));
    }
    const bool last = l + 1 == layers.size();
    if (last != (layer.activation == Activation::kLogistic)) {
      throw std::invalid_argument("only the output layer may (and must) be logistic");
    }
    for (const double v : layer.weights) {
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite weight in layer " + std::to_string(l));
    }
    for (const double v : layer.bias) {
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite bias in layer " + std::to_string(l));
    }
  }
  if (layers.back().rows != 1) throw std::invalid_argument("output layer must have one unit");
}

std::vector<double> NetworkParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& layer : layers) {
    flat.insert(flat.end(), layer.weights.begin(), layer.weights.end());
    flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
  }
  return flat;
}

void NetworkParams::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    throw std::invalid_argument("assign: expected " + std::to_string(parameter_count()) +
                                " values, got " + std::to_string(flat.size()));
  }
  auto it = flat.begin();
  for (auto& layer : layers) {
    std::copy_n(it, layer.weights.size(), layer.weights.begin());
    it += static_cast<std::ptrdiff_t>(layer.weights.size());
    std::copy_n(it, layer.bias.size(), layer.bias.begin());
    it += static_cast<std::ptrdiff_t>(layer.bias.size());
  }
}

NetworkParams zero_network(std::span<const std::size_t> sizes) {
  if (sizes.size() < 2) throw std::invalid_argument("network needs at least two layer sizes");
  NetworkParams params;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const bool last = l + 2 == sizes.size();
    params.layers.emplace_back(sizes[l + 1], sizes[l],
                               last ? Activation::kLogistic : Activation::kRelu);
  }
  return params;
}

NetworkParams init_network(std::span<const std::size_t> sizes, std::uint64_t seed) {
  NetworkParams params = zero_network(sizes);
  Rng rng = Rng::substream(seed, "init");
  for (auto& layer : params.layers) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.cols));
    for (double& w : layer.weights) w = rng.uniform(-bound, bound);
    for (double& b : layer.bias) b = rng.uniform(-bound, bound);
  }
  return params;
}

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

ForwardTrace forward(const NetworkParams& params, std::span<const double> x) {
  check_input(params, x);
  Workspace ws(params);
  ForwardTrace trace;
  trace.logit = forward_into(params, x, ws);
  trace.probability = ws.act.back()[0];
  trace.activations = std::move(ws.act);
  trace.pre_activations = std::move(ws.pre);
  return trace;
}

double predict(const NetworkParams& params, const Applicant& applicant) {
  const FeatureVector x = encode(applicant);
  return forward(params, x).probability;
}

double loss(double probability, Decision label) {
  const double p = std::clamp(probability, kProbabilityClamp, 1.0 - kProbabilityClamp);
  return label == Decision::kInvite ? -std::log(p) : -std::log(1.0 - p);
}

NetworkParams backward(const NetworkParams& params, std::span<const double> x, Decision label) {
  check_input(params, x);
  Workspace ws(params);
  forward_into(params, x, ws);
  NetworkParams grad = zeros_like(params);
  // d/dlogit of cross-entropy through the logistic output.
  backward_accumulate(params, ws, ws.act.back()[0] - label_value(label), grad);
  return grad;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning_rate must be positive");
  }
  if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("Adam moment coefficients must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw std::invalid_argument("adam_epsilon must be positive");
}

TrainedModel train(const Dataset& dataset, const TrainConfig& config, const Dataset* held_out) {
  if (dataset.examples.empty()) throw std::invalid_argument("train: dataset is empty");
  config.validate();

  std::vector<FeatureVector> inputs;
  std::vector<Decision> labels;
  inputs.reserve(dataset.size());
  labels.reserve(dataset.size());
  for (const auto& e : dataset.examples) {
    inputs.push_back(encode(e.applicant));
    labels.push_back(e.label);
  }

  TrainedModel model;
  model.config = config;
  model.params = init_network(kLayerSizes, config.seed);
  NetworkParams& params = model.params;

  Workspace ws(params);
  NetworkParams grad = zeros_like(params);
  const std::size_t n_params = params.parameter_count();
  std::vector<double> flat = params.flatten();
  std::vector<double> m(n_params, 0.0);
  std::vector<double> v(n_params, 0.0);
  std::vector<double> g_flat(n_params, 0.0);
  double beta1_t = 1.0;
  double beta2_t = 1.0;

  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng = Rng::substream(config.seed, "shuffle");

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    }
    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      for (auto& layer : grad.layers) {
        std::fill(layer.weights.begin(), layer.weights.end(), 0.0);
        std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
      }
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t idx = order[k];
        forward_into(params, inputs[idx], ws);
        const double p = ws.act.back()[0];
        batch_loss += loss(p, labels[idx]);
        backward_accumulate(params, ws, p - label_value(labels[idx]), grad);
      }
      if (!std::isfinite(batch_loss)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch + 1 << ", batch " << batch_index + 1;
        throw TrainingError(msg.str());
      }
      epoch_loss += batch_loss;

      // Adam on the batch-mean gradient.
      const double scale = 1.0 / static_cast<double>(end - start);
      std::size_t j = 0;
      for (const auto& layer : grad.layers) {
        for (const double g : layer.weights) g_flat[j++] = g * scale;
        for (const double g : layer.bias) g_flat[j++] = g * scale;
      }
      beta1_t *= config.beta1;
      beta2_t *= config.beta2;
      const double step = config.learning_rate * std::sqrt(1.0 - beta2_t) / (1.0 - beta1_t);
      const double eps_hat = config.adam_epsilon * std::sqrt(1.0 - beta2_t);
      for (std::size_t i = 0; i < n_params; ++i) {
        m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g_flat[i];
        v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g_flat[i] * g_flat[i];
        flat[i] -= step * m[i] / (std::sqrt(v[i]) + eps_hat);
      }
      params.assign(flat);
    }
    model.report.epoch_loss.push_back(epoch_loss / static_cast<double>(order.size()));
  }

  model.report.train_accuracy = evaluate(params, dataset).accuracy;
  if (held_out != nullptr && !held_out->examples.empty()) {
    model.report.held_out_accuracy = evaluate(params, *held_out).accuracy;
  }
  return model;
}

Evaluation evaluate(const NetworkParams& params, const Dataset& dataset) {
  Evaluation eval;
  if (dataset.examples.empty()) throw std::invalid_argument("evaluate: dataset is empty");
  params.validate();
  Workspace ws(params);
  std::size_t correct = 0;
  std::size_t predicted_invites = 0;
  double prob_sum = 0.0;
  for (const auto& e : dataset.examples) {
    const FeatureVector x = encode(e.applicant);
    check_input(params, x);
    forward_into(params, x, ws);
    const double p = ws.act.back()[0];
    const Decision predicted = p > kDecisionThreshold ? Decision::kInvite : Decision::kReject;
    correct += predicted == e.label ? 1 : 0;
    predicted_invites += predicted == Decision::kInvite ? 1 : 0;
    prob_sum += p;
  }
  const double n = static_cast<double>(dataset.size());
  eval.accuracy = static_cast<double>(correct) / n;
  eval.mean_probability = prob_sum / n;
  eval.predicted_invite_fraction = static_cast<double>(predicted_invites) / n;
  return eval;
}

}  // namespace biaslab
