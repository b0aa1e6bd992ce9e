#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "kmcoach/monitoring.hpp"
#include "kmcoach/pattern.hpp"

namespace kmc {

struct CohortThresholds {
  double perf_median = 0.0;
  double dprime_median = 0.0;
  double sensitivity_median = 0.0;
  double specificity_median = 0.0;
};

struct LearnerStats {
  double perf = 0.0;
  MonitoringMetrics metrics;
};

/// Exact median (mean of the two central values for even counts). Throws
/// "empty_cohort" on empty input.
double median(std::vector<double> values);

/// Throws "empty_cohort" for fewer than two learners.
CohortThresholds cohort_thresholds(std::span<const LearnerStats> cohort);

/// Every comparison that led to a pattern. Comparisons use >= median as High.
struct ClassificationBasis {
  double perf = 0.0;
  double d_prime = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  bool perf_high = false;
  bool dprime_high = false;
  bool sensitivity_high = false;
  bool specificity_high = false;
  CohortThresholds thresholds;
};

struct LearnerPattern {
  Pattern tag = Pattern::kWC;
  ClassificationBasis basis;
};

/// Performance split first, then d'. High performance with low d' is split by
/// sensitivity (LC when high, UC otherwise); low performance with low d' is OC.
LearnerPattern classify(double perf, const MonitoringMetrics& metrics, const CohortThresholds& thresholds);

enum class SdtCategory { kHit, kFalseAlarm, kMiss, kCorrectRejection };
std::string to_string(SdtCategory c);

struct FeedUp {
  std::string current_position;
  std::string goal_statement;
  std::string priority;  // "knowledge gaps" | "knowledge monitoring" | "maintain"
};

struct RelatedError {
  std::string concept_id;    // incorrect concept
  std::string prerequisite;  // incorrectly answered ancestor
  int distance = 1;          // prerequisite hops
  friend bool operator==(const RelatedError&, const RelatedError&) = default;
};

struct ConceptCategory {
  std::string concept_id;
  SdtCategory category = SdtCategory::kHit;
  friend bool operator==(const ConceptCategory&, const ConceptCategory&) = default;
};

struct FeedBack {
  std::vector<std::string> correct_concepts;
  std::vector<std::string> incorrect_concepts;
  std::vector<RelatedError> related_past_errors;
  std::vector<ConceptCategory> sdt_categories;  // one per responded concept
};

struct StrategyEntry {
  std::string theory;
  std::vector<Pattern> targets;
  std::string strategies;
};

/// Theory-to-strategy catalog used for Feed Forward.
std::span<const StrategyEntry> strategy_catalog();

struct FeedForward {
  std::vector<std::string> priority_relearn;  // misses and false alarms, prerequisites first
  std::vector<std::string> review;            // remaining incorrect concepts
  std::vector<std::string> challenge;         // hits with no incorrect descendant
  std::vector<std::string> km_strategies;
  std::string advice;                         // rendered prose
};

enum class GeneratorTag { kTemplate, kExternal };
std::string to_string(GeneratorTag t);

struct FeedbackReport {
  std::string learner;
  Pattern pattern = Pattern::kWC;
  ClassificationBasis basis;
  FeedUp feed_up;
  FeedBack feed_back;
  FeedForward feed_forward;
  GeneratorTag generator_tag = GeneratorTag::kTemplate;
  std::vector<std::string> warnings;
};

FeedUp build_feed_up(const LearnerPattern& pattern);

/// Concept correctness aggregates the learner's items per concept: a concept is
/// correct only when every responded item on it is correct. Related past errors
/// walk prerequisite ancestors up to `max_depth` hops.
FeedBack build_feed_back(const PerceptionProfile& profile, const HeteroGraph& graph, int max_depth = 2);

/// Turns the structured Feed Forward payload into prose. Implementations may
/// throw; the caller then falls back to the template renderer.
class FeedbackGenerator {
 public:
  virtual ~FeedbackGenerator() = default;
  virtual GeneratorTag tag() const = 0;
  virtual std::string render(const FeedbackReport& draft, const HeteroGraph& graph) const = 0;
};

class TemplateGenerator final : public FeedbackGenerator {
 public:
  GeneratorTag tag() const override { return GeneratorTag::kTemplate; }
  std::string render(const FeedbackReport& draft, const HeteroGraph& graph) const override;
};

FeedForward build_feed_forward(const LearnerPattern& pattern, const FeedBack& feed_back, const HeteroGraph& graph);

/// Fills in the prose with `generator` (template when null), falling back to
/// the template renderer with a warning if the generator throws.
FeedbackReport assemble_report(const std::string& learner, const LearnerPattern& pattern, FeedUp feed_up,
                               FeedBack feed_back, FeedForward feed_forward, const HeteroGraph& graph,
                               const FeedbackGenerator* generator = nullptr);

nlohmann::json report_to_json(const FeedbackReport& report);
FeedbackReport report_from_json(const nlohmann::json& doc);
/// Checks the report JSON against the schema; returns the violations found.
std::vector<std::string> validate_report_json(const nlohmann::json& doc);
std::string report_to_markdown(const FeedbackReport& report, const HeteroGraph& graph);

struct CoachedLearner {
  LearnerId learner;
  LearnerPattern pattern;
  double perf = 0.0;
  FeedbackReport report;
};

struct CoachResult {
  CohortThresholds thresholds;
  std::vector<CoachedLearner> learners;
  std::vector<LearnerId> unclassified;  // undefined d' (empty margin)
};

/// Classifies every assessed learner and builds their reports. Thresholds come
/// from the cohort itself unless `reference` is given.
CoachResult coach_cohort(const HeteroGraph& graph, const CohortAssessment& cohort,
                         const std::optional<CohortThresholds>& reference = std::nullopt,
                         const FeedbackGenerator* generator = nullptr, int related_depth = 2);

/// `learner,pattern,perf,d_prime,sensitivity,specificity`
std::string cohort_summary_csv(const CoachResult& result, const HeteroGraph& graph);

std::vector<LearnerStats> learner_stats(const CohortAssessment& cohort);

}  // namespace kmc
