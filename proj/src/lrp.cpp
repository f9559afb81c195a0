#include "biaslab/lrp.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace biaslab {

namespace {

void require_finite(double v, const char* what, std::size_t layer) {
  if (!std::isfinite(v)) {
    throw std::domain_error(std::string("lrp: non-finite ") + what + " at layer " +
                            std::to_string(layer));
  }
}

}  // namespace

double RelevanceVector::university_share() const {
  double total = 0.0;
  for (std::size_t i = kNumSkills; i < relative.size(); ++i) total += relative[i];
  return total;
}

std::vector<double> relative_shares(std::span<const double> values) {
  std::vector<double> shares(values.size(), 0.0);
  if (values.empty()) return shares;
  double total = 0.0;
  for (const double v : values) total += std::abs(v);
  if (total == 0.0) {
    std::fill(shares.begin(), shares.end(), 100.0 / static_cast<double>(values.size()));
    return shares;
  }
  for (std::size_t i = 0; i < values.size(); ++i) shares[i] = 100.0 * std::abs(values[i]) / total;
  return shares;
}

RelevanceVector explain(const NetworkParams& params, std::span<const double> x,
                        const LrpConfig& cfg) {
  if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("lrp: epsilon must be positive");
  params.validate();
  const ForwardTrace trace = forward(params, x);

  RelevanceVector out;
  out.logit = trace.logit;
  out.probability = trace.probability;
  require_finite(trace.logit, "logit", params.layers.size() - 1);

  std::vector<double> upper = {trace.logit};
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    const DenseLayer& layer = params.layers[l];
    const std::vector<double>& a = trace.activations[l];
    std::vector<double> lower(layer.cols, 0.0);
    for (std::size_t j = 0; j < layer.rows; ++j) {
      if (upper[j] == 0.0) continue;
      const double z = trace.pre_activations[l][j];
      const double denom = z + cfg.epsilon * (z >= 0.0 ? 1.0 : -1.0);
      const double ratio = upper[j] / denom;
      for (std::size_t i = 0; i < layer.cols; ++i) lower[i] += a[i] * layer.w(j, i) * ratio;
    }
    for (const double r : lower) require_finite(r, "relevance", l);
    upper = std::move(lower);
  }
  out.absolute = std::move(upper);
  out.relative = relative_shares(out.absolute);
  return out;
}

RelevanceVector explain(const NetworkParams& params, const Applicant& applicant,
                        const LrpConfig& cfg) {
  const FeatureVector x = encode(applicant);
  return explain(params, x, cfg);
}

std::array<double, kFeatureDim> mean_group_relevance(
    const NetworkParams& params, const Dataset& dataset, const LrpConfig& cfg,
    const std::function<bool(const LabeledExample&)>& select) {
  std::array<double, kFeatureDim> sum{};
  std::size_t count = 0;
  for (const auto& e : dataset.examples) {
    if (select && !select(e)) continue;
    const RelevanceVector r = explain(params, e.applicant, cfg);
    for (std::size_t i = 0; i < kFeatureDim; ++i) sum[i] += r.relative[i];
    ++count;
  }
  if (count == 0) throw std::invalid_argument("mean_group_relevance: selection is empty");
  for (double& v : sum) v /= static_cast<double>(count);
  return sum;
}

}  // namespace biaslab
