#include "biaslab/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "biaslab/random.hpp"

namespace biaslab {

namespace {

constexpr std::array<std::string_view, kNumSkills> kSkillNames = {
    "statistics", "python", "pytorch", "matlab"};

std::size_t draw_weighted(Rng& rng, const std::array<double, kRosterSize>& weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double u = rng.uniform01() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < kRosterSize; ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;  // rounding at the top end
}

Applicant draw_applicant(Rng& rng, const BiasSpec& bias) {
  Applicant a;
  const auto* shift = std::get_if<CovariateShift>(&bias);
  for (const Skill s : kAllSkills) {
    const double hi = (shift != nullptr && shift->feature == s) ? shift->cap : 1.0;
    a.skills[static_cast<std::size_t>(s)] = rng.uniform(0.0, hi);
  }
  const auto* selection = std::get_if<SelectionBias>(&bias);
  if (selection != nullptr && a.skill(Skill::kStatistics) > kSkillThreshold &&
      a.skill(Skill::kPython) > kSkillThreshold) {
    a.university = University(draw_weighted(rng, selection->weights));
  } else {
    a.university = University(rng.below(kRosterSize));
  }
  return a;
}

}  // namespace

std::string_view skill_name(Skill skill) {
  return kSkillNames[static_cast<std::size_t>(skill)];
}

Skill parse_skill(std::string_view name) {
  for (std::size_t i = 0; i < kNumSkills; ++i) {
    if (kSkillNames[i] == name) return static_cast<Skill>(i);
  }
  throw std::invalid_argument("unknown skill '" + std::string(name) +
                              "' (expected statistics, python, pytorch or matlab)");
}

University::University(std::size_t index) : index_(index) {
  if (index >= kRosterSize) {
    throw std::out_of_range("university index " + std::to_string(index) +
                            " outside roster of " + std::to_string(kRosterSize));
  }
}

University University::parse(std::string_view name) {
  constexpr std::string_view kPrefix = "University";
  if (name.substr(0, kPrefix.size()) == kPrefix) {
    const std::string_view digits = name.substr(kPrefix.size());
    if (!digits.empty() && digits.size() <= 2 && digits.front() != '0' &&
        digits.find_first_not_of("0123456789") == std::string_view::npos) {
      const std::size_t number = std::stoul(std::string(digits));
      if (number >= 1 && number <= kRosterSize) return University(number - 1);
    }
  }
  throw std::invalid_argument("unknown university '" + std::string(name) +
                              "' (expected University1..University10)");
}

std::string University::name() const { return "University" + std::to_string(index_ + 1); }

std::string_view decision_name(Decision d) {
  return d == Decision::kInvite ? "invite" : "reject";
}

Decision parse_decision(std::string_view name) {
  if (name == "invite") return Decision::kInvite;
  if (name == "reject") return Decision::kReject;
  throw std::invalid_argument("unknown decision '" + std::string(name) + "'");
}

SelectionBias default_selection_bias() {
  SelectionBias bias;
  bias.weights.fill(0.10 / 7.0);
  bias.weights[9] = 0.60;
  bias.weights[8] = 0.15;
  bias.weights[2] = 0.15;
  return bias;
}

void validate(const BiasSpec& bias) {
  if (const auto* shift = std::get_if<CovariateShift>(&bias)) {
    if (!(shift->cap > 0.0 && shift->cap <= 1.0)) {
      throw std::invalid_argument("covariate shift cap must lie in (0, 1]");
    }
  } else if (const auto* selection = std::get_if<SelectionBias>(&bias)) {
    double total = 0.0;
    for (const double w : selection->weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw std::invalid_argument("selection bias weights must be nonnegative");
      }
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw std::invalid_argument("selection bias weights must sum to 1");
    }
  } else if (const auto* imbalance = std::get_if<Imbalance>(&bias)) {
    if (!(imbalance->invite_ratio > 0.0 && imbalance->invite_ratio < 1.0)) {
      throw std::invalid_argument("imbalance invite_ratio must lie in (0, 1)");
    }
  }
}

std::string_view bias_kind(const BiasSpec& bias) {
  constexpr std::array<std::string_view, 4> kKinds = {"none", "covariate", "selection",
                                                      "imbalance"};
  return kKinds[bias.index()];
}

std::string_view split_name(SplitTag tag) { return tag == SplitTag::kTrain ? "train" : "test"; }

SplitTag parse_split(std::string_view name) {
  if (name == "train") return SplitTag::kTrain;
  if (name == "test") return SplitTag::kTest;
  throw std::invalid_argument("unknown split '" + std::string(name) + "' (expected train or test)");
}

double Dataset::invite_fraction() const {
  if (examples.empty()) return 0.0;
  std::size_t invites = 0;
  for (const auto& e : examples) invites += e.label == Decision::kInvite ? 1 : 0;
  return static_cast<double>(invites) / static_cast<double>(examples.size());
}

Decision hr_decision(const Applicant& applicant) {
  int high = 0;
  for (const double s : applicant.skills) high += s > kSkillThreshold ? 1 : 0;
  return high >= 2 ? Decision::kInvite : Decision::kReject;
}

Dataset generate(std::size_t n, std::uint64_t seed, const BiasSpec& bias, SplitTag split) {
  if (n == 0) throw std::invalid_argument("generate: n must be at least 1");
  validate(bias);

  Dataset dataset;
  dataset.seed = seed;
  dataset.bias = bias;
  dataset.split = split;
  dataset.examples.reserve(n);

  Rng rng = Rng::substream(seed, "datagen");

  if (const auto* imbalance = std::get_if<Imbalance>(&bias)) {
    const double wanted = static_cast<double>(n) * imbalance->invite_ratio;
    const double wanted_rejects = static_cast<double>(n) - wanted;
    if (wanted < 1.0 || wanted_rejects < 1.0) {
      std::ostringstream msg;
      msg << "imbalance ratio " << imbalance->invite_ratio << " unattainable with n=" << n
          << ": need n*ratio >= 1 and n*(1-ratio) >= 1";
      throw std::invalid_argument(msg.str());
    }
    std::size_t invite_quota = static_cast<std::size_t>(std::llround(wanted));
    invite_quota = std::clamp<std::size_t>(invite_quota, 1, n - 1);
    std::size_t reject_quota = n - invite_quota;
    // Draw from the unbiased population; keep a draw only while its label
    // still has quota left.
    while (invite_quota + reject_quota > 0) {
      LabeledExample e{draw_applicant(rng, NoBias{}), Decision::kReject};
      e.label = hr_decision(e.applicant);
      std::size_t& quota = e.label == Decision::kInvite ? invite_quota : reject_quota;
      if (quota == 0) continue;
      --quota;
      dataset.examples.push_back(e);
    }
    return dataset;
  }

  for (std::size_t i = 0; i < n; ++i) {
    LabeledExample e{draw_applicant(rng, bias), Decision::kReject};
    e.label = hr_decision(e.applicant);
    dataset.examples.push_back(e);
  }
  return dataset;
}

std::array<double, kRosterSize> conditional_invite_share(const Dataset& dataset,
                                                         const ApplicantPredicate& predicate) {
  std::array<std::size_t, kRosterSize> counts{};
  std::size_t selected = 0;
  for (const auto& e : dataset.examples) {
    if (!predicate(e.applicant)) continue;
    ++counts[e.applicant.university.index()];
    ++selected;
  }
  if (selected == 0) {
    throw std::invalid_argument("conditional_invite_share: predicate selects no examples");
  }
  std::array<double, kRosterSize> shares{};
  for (std::size_t i = 0; i < kRosterSize; ++i) {
    shares[i] = static_cast<double>(counts[i]) / static_cast<double>(selected);
  }
  return shares;
}

}  // namespace biaslab
