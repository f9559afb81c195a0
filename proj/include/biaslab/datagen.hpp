#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace biaslab {

inline constexpr std::size_t kNumSkills = 4;
inline constexpr std::size_t kRosterSize = 10;
// HR invites when strictly more than this in at least two skills.
inline constexpr double kSkillThreshold = 0.7;

enum class Skill { kStatistics = 0, kPython = 1, kPytorch = 2, kMatlab = 3 };

inline constexpr std::array<Skill, kNumSkills> kAllSkills = {
    Skill::kStatistics, Skill::kPython, Skill::kPytorch, Skill::kMatlab};

std::string_view skill_name(Skill skill);
// Accepts "statistics", "python", "pytorch", "matlab". Throws on anything else.
Skill parse_skill(std::string_view name);

// One member of the fixed roster University1..University10. Index is 0-based.
class University {
 public:
  constexpr University() = default;
  // Throws std::out_of_range for index >= kRosterSize.
  explicit University(std::size_t index);

  static University parse(std::string_view name);

  constexpr std::size_t index() const { return index_; }
  std::string name() const;

  friend constexpr bool operator==(University, University) = default;

 private:
  std::size_t index_ = 0;
};

struct Applicant {
  std::array<double, kNumSkills> skills{};  // statistics, python, pytorch, matlab
  University university;

  double skill(Skill s) const { return skills[static_cast<std::size_t>(s)]; }
  friend bool operator==(const Applicant&, const Applicant&) = default;
};

enum class Decision { kReject = 0, kInvite = 1 };

std::string_view decision_name(Decision d);  // "reject" | "invite"
Decision parse_decision(std::string_view name);

struct LabeledExample {
  Applicant applicant;
  Decision label = Decision::kReject;
  friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

struct NoBias {
  friend bool operator==(const NoBias&, const NoBias&) = default;
};

// The named skill is drawn uniform on [0, cap] instead of [0, 1].
struct CovariateShift {
  Skill feature = Skill::kPytorch;
  double cap = 0.7;
  friend bool operator==(const CovariateShift&, const CovariateShift&) = default;
};

// Applicants with statistics > 0.7 and python > 0.7 draw their university
// from `weights` (indexed by roster position); everybody else uniformly.
struct SelectionBias {
  std::array<double, kRosterSize> weights{};
  friend bool operator==(const SelectionBias&, const SelectionBias&) = default;
};

// Rejection-resampled so that the invite fraction is invite_ratio to 1/n.
struct Imbalance {
  double invite_ratio = 0.1;
  friend bool operator==(const Imbalance&, const Imbalance&) = default;
};

using BiasSpec = std::variant<NoBias, CovariateShift, SelectionBias, Imbalance>;

// {University10: 0.60, University9: 0.15, University3: 0.15, rest: 0.10/7}.
SelectionBias default_selection_bias();

// Throws std::invalid_argument when a parameter is outside its domain.
void validate(const BiasSpec& bias);

std::string_view bias_kind(const BiasSpec& bias);  // none|covariate|selection|imbalance

enum class SplitTag { kTrain, kTest };

std::string_view split_name(SplitTag tag);
SplitTag parse_split(std::string_view name);

struct Dataset {
  std::vector<LabeledExample> examples;
  std::uint64_t seed = 0;
  BiasSpec bias = NoBias{};
  SplitTag split = SplitTag::kTrain;

  std::size_t size() const { return examples.size(); }
  double invite_fraction() const;
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Ground-truth labeler: Invite iff at least two skills are strictly above 0.7.
Decision hr_decision(const Applicant& applicant);

// Probability that a uniform random applicant is invited:
// 1 - 0.7^4 - 4 * 0.3 * 0.7^3.
inline constexpr double kUniformInviteProbability = 0.3483;

Dataset generate(std::size_t n, std::uint64_t seed, const BiasSpec& bias,
                 SplitTag split = SplitTag::kTrain);

using ApplicantPredicate = std::function<bool(const Applicant&)>;

// Share of each roster university among the examples selected by
// `predicate`. Throws std::invalid_argument if nothing is selected.
std::array<double, kRosterSize> conditional_invite_share(
    const Dataset& dataset, const ApplicantPredicate& predicate);

}  // namespace biaslab
