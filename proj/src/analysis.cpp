#include "biaslab/analysis.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace biaslab {

namespace {

void check_domain(const std::optional<Range>& r, const char* axis) {
  if (r && (r->lower < 0.0 || r->upper > 1.0)) {
    throw std::invalid_argument(std::string("brush range on ") + axis + " leaves [0, 1]");
  }
}

std::optional<Range> intersect_range(const std::optional<Range>& a, const std::optional<Range>& b) {
  if (!a) return b;
  if (!b) return a;
  const double lo = std::max(a->lower, b->lower);
  const double hi = std::min(a->upper, b->upper);
  if (lo > hi) {
    // Empty: encode as an impossible range inside the domain.
    Range empty;
    empty.lower = 1.0;
    empty.upper = 0.0;
    return empty;
  }
  return Range(lo, hi);
}

template <typename T>
std::optional<std::vector<T>> intersect_set(const std::optional<std::vector<T>>& a,
                                            const std::optional<std::vector<T>>& b) {
  if (!a) return b;
  if (!b) return a;
  std::vector<T> out;
  for (const T& v : *a) {
    if (std::find(b->begin(), b->end(), v) != b->end()) out.push_back(v);
  }
  return out;
}

}  // namespace

Range::Range(double lo, double hi) : lower(lo), upper(hi) {
  if (!(lo <= hi)) {
    throw std::invalid_argument("range lower bound " + std::to_string(lo) +
                                " exceeds upper bound " + std::to_string(hi));
  }
}

bool BrushSelection::is_all() const {
  return std::none_of(skills.begin(), skills.end(), [](const auto& r) { return r.has_value(); }) &&
         !universities && !decisions && !probability;
}

void BrushSelection::validate() const {
  for (const Skill s : kAllSkills) {
    check_domain(skills[static_cast<std::size_t>(s)], std::string(skill_name(s)).c_str());
  }
  check_domain(probability, "probability");
}

bool BrushSelection::matches(const LabeledExample& e, double p) const {
  for (std::size_t i = 0; i < kNumSkills; ++i) {
    if (skills[i] && !skills[i]->contains(e.applicant.skills[i])) return false;
  }
  if (universities && std::find(universities->begin(), universities->end(),
                                e.applicant.university) == universities->end()) {
    return false;
  }
  if (decisions && std::find(decisions->begin(), decisions->end(), e.label) == decisions->end()) {
    return false;
  }
  if (probability && !probability->contains(p)) return false;
  return true;
}

BrushSelection BrushSelection::intersect(const BrushSelection& a, const BrushSelection& b) {
  BrushSelection out;
  for (std::size_t i = 0; i < kNumSkills; ++i) out.skills[i] = intersect_range(a.skills[i], b.skills[i]);
  out.universities = intersect_set(a.universities, b.universities);
  out.decisions = intersect_set(a.decisions, b.decisions);
  out.probability = intersect_range(a.probability, b.probability);
  return out;
}

BrushResult brush(const Dataset& dataset, const NetworkParams& params,
                  const BrushSelection& selection) {
  selection.validate();
  BrushResult result;
  double prob_sum = 0.0;
  std::size_t invites = 0;
  for (std::size_t i = 0; i < dataset.examples.size(); ++i) {
    const LabeledExample& e = dataset.examples[i];
    const double p = predict(params, e.applicant);
    if (!selection.matches(e, p)) continue;
    result.rows.push_back({i, e, p});
    prob_sum += p;
    invites += e.label == Decision::kInvite ? 1 : 0;
  }
  result.count = result.rows.size();
  if (result.count > 0) {
    result.mean_probability = prob_sum / static_cast<double>(result.count);
    result.invite_share = static_cast<double>(invites) / static_cast<double>(result.count);
  }
  return result;
}

CoverageReport coverage_report(const Dataset& train, const Dataset& test, double threshold) {
  if (train.examples.empty() || test.examples.empty()) {
    throw std::invalid_argument("coverage_report: both datasets must be nonempty");
  }
  auto fraction_above = [threshold](const Dataset& d, Skill s) {
    std::size_t n = 0;
    for (const auto& e : d.examples) n += e.applicant.skill(s) > threshold ? 1 : 0;
    return static_cast<double>(n) / static_cast<double>(d.size());
  };
  CoverageReport report;
  report.threshold = threshold;
  for (const Skill s : kAllSkills) {
    SkillCoverage& c = report.skills[static_cast<std::size_t>(s)];
    c.skill = s;
    c.train_fraction = fraction_above(train, s);
    c.test_fraction = fraction_above(test, s);
    c.shift_warning = c.train_fraction == 0.0 && c.test_fraction > 0.05;
  }
  return report;
}

AssociationReport university_label_association(const Dataset& dataset) {
  AssociationReport report;
  if (dataset.examples.empty()) return report;
  std::array<std::size_t, kRosterSize> invites{};
  for (const auto& e : dataset.examples) {
    UniversityAssociation& u = report.universities[e.applicant.university.index()];
    ++u.count;
    invites[e.applicant.university.index()] += e.label == Decision::kInvite ? 1 : 0;
  }
  report.global_invite_rate = dataset.invite_fraction();
  for (std::size_t i = 0; i < kRosterSize; ++i) {
    UniversityAssociation& u = report.universities[i];
    if (u.count == 0) continue;
    u.invite_rate = static_cast<double>(invites[i]) / static_cast<double>(u.count);
    u.lift = report.global_invite_rate > 0.0 ? u.invite_rate / report.global_invite_rate : 1.0;
  }
  return report;
}

ConfusionBreakdown confusion(const NetworkParams& params, const Dataset& dataset) {
  ConfusionBreakdown c;
  for (const auto& e : dataset.examples) {
    const bool predicted_invite = predict(params, e.applicant) > kDecisionThreshold;
    const bool truth_invite = e.label == Decision::kInvite;
    if (predicted_invite) {
      ++(truth_invite ? c.true_invite : c.false_invite);
    } else {
      ++(truth_invite ? c.false_reject : c.true_reject);
    }
  }
  return c;
}

PieQuadruple imbalance_sweep(double train_ratio, const SweepConfig& config) {
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) {
    throw std::invalid_argument("imbalance_sweep: train_ratio must lie in (0, 1)");
  }
  const Dataset train_set =
      generate(config.train_size, config.train_seed, Imbalance{train_ratio}, SplitTag::kTrain);
  const Dataset test_set = generate(config.test_size, config.test_seed,
                                    Imbalance{kImbalanceTestRatio}, SplitTag::kTest);
  const TrainedModel model = train(train_set, config.train);

  PieQuadruple pie;
  pie.train_invite_ratio = train_set.invite_fraction();
  pie.test_invite_ratio = test_set.invite_fraction();
  pie.breakdown = confusion(model.params, test_set);
  pie.predicted_invite_ratio =
      static_cast<double>(pie.breakdown.true_invite + pie.breakdown.false_invite) /
      static_cast<double>(test_set.size());
  return pie;
}

}  // namespace biaslab
