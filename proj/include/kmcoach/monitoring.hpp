#pragma once

#include <map>
#include <string>
#include <vector>

#include "kmcoach/graph.hpp"
#include "kmcoach/scorer.hpp"

namespace kmc {

enum class Provenance { kExplicit, kInferred };

/// A learner's perceived state for every assessed concept.
struct PerceptionProfile {
  struct Entry {
    ConceptId concept_id;
    PerceivedState state = PerceivedState::kKnow;
    Provenance provenance = Provenance::kExplicit;
  };
  LearnerId learner;
  std::vector<Entry> entries;  // sorted by concept, covers K_Q exactly

  const Entry* find(ConceptId k) const;
};

/// Merges explicit reports with inferred states. The inferred sets must cover
/// exactly the learner's latent concepts: overlap with an explicit mention throws
/// "inferred_overlaps_explicit", a gap or an unassessed concept throws "inferred_mismatch".
PerceptionProfile complete_profile(const HeteroGraph& graph, LearnerId learner, const InferredStates& inferred);

/// Hit (A), false alarm (B), miss (C), correct rejection (D).
struct ContingencyTable {
  int a = 0;
  int b = 0;
  int c = 0;
  int d = 0;

  int total() const { return a + b + c + d; }
  friend bool operator==(const ContingencyTable&, const ContingencyTable&) = default;
};

/// One observation per responded item whose concept is in the profile.
/// Throws "no_responses" when the learner has none.
ContingencyTable contingency(const PerceptionProfile& profile, const HeteroGraph& graph);

struct MonitoringMetrics {
  double d_prime = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  bool corrected = false;
};

/// Standard normal quantile: rational approximation plus one Halley step
/// against the erfc-based CDF. Throws "probability_out_of_range" outside (0, 1).
double inverse_normal_cdf(double p);

/// d' = z(h) - z(f). When h or f is 0 or 1 both rates get the log-linear
/// correction (x + 0.5) / (n + 1). Sensitivity and specificity use raw counts.
/// Throws "undefined_margin" when A+C or B+D is zero.
MonitoringMetrics d_prime(const ContingencyTable& table);

/// A / (A + C) and D / (B + D); "undefined_margin" on a zero denominator.
double sensitivity(const ContingencyTable& table);
double specificity(const ContingencyTable& table);

/// Fraction of a learner's responses that are correct; "no_responses" if none.
double performance(const HeteroGraph& graph, LearnerId learner);

struct LearnerAssessment {
  LearnerId learner;
  PerceptionProfile profile;
  ContingencyTable table;
  double perf = 0.0;
  MonitoringMetrics metrics;
  bool defined = true;  // false when a margin is empty; metrics are then unset
};

struct CohortAssessment {
  std::vector<LearnerAssessment> learners;  // learners with at least one response, in id order
  std::vector<LearnerId> skipped;           // learners without responses
};

/// Completes every learner's profile from `inferred` and computes SDT metrics.
CohortAssessment assess_cohort(const HeteroGraph& graph, const std::map<LearnerId, InferredStates>& inferred);

/// `learner,A,B,C,D,d_prime,sensitivity,specificity,corrected`; metric cells
/// are empty for learners with an undefined margin.
std::string metrics_csv(const CohortAssessment& cohort, const HeteroGraph& graph);

std::string to_string(Provenance p);

}  // namespace kmc
