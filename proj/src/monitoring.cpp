#include "kmcoach/monitoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "kmcoach/error.hpp"

namespace kmc {

std::string to_string(Provenance p) { return p == Provenance::kExplicit ? "explicit" : "inferred"; }

const PerceptionProfile::Entry* PerceptionProfile::find(ConceptId k) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), k,
                             [](const Entry& e, ConceptId key) { return e.concept_id < key; });
  return it != entries.end() && it->concept_id == k ? &*it : nullptr;
}

PerceptionProfile complete_profile(const HeteroGraph& graph, LearnerId learner, const InferredStates& inferred) {
  const auto part = mention_partition(graph, learner);
  PerceptionProfile profile;
  profile.learner = learner;
  for (auto k : part.known) profile.entries.push_back({k, PerceivedState::kKnow, Provenance::kExplicit});
  for (auto k : part.unknown) profile.entries.push_back({k, PerceivedState::kDontKnow, Provenance::kExplicit});

  std::vector<ConceptId> covered;
  auto add_inferred = [&](const std::vector<ConceptId>& ks, PerceivedState s) {
    for (auto k : ks) {
      if (graph.perception(learner, k))
        fail(ErrorKind::kDomain, "inferred_overlaps_explicit",
             "inferred state for explicitly reported concept '" + graph.concept_id(k) + "'");
      profile.entries.push_back({k, s, Provenance::kInferred});
      covered.push_back(k);
    }
  };
  add_inferred(inferred.know, PerceivedState::kKnow);
  add_inferred(inferred.dont_know, PerceivedState::kDontKnow);
  std::sort(covered.begin(), covered.end());
  if (covered != part.latent)
    fail(ErrorKind::kDomain, "inferred_mismatch",
         "inferred states for learner '" + graph.learner_id(learner) + "' do not cover exactly the latent concepts");
  std::sort(profile.entries.begin(), profile.entries.end(),
            [](const auto& x, const auto& y) { return x.concept_id < y.concept_id; });
  return profile;
}

ContingencyTable contingency(const PerceptionProfile& profile, const HeteroGraph& graph) {
  const auto responses = graph.responses(profile.learner);
  if (responses.empty())
    fail(ErrorKind::kDomain, "no_responses", "learner '" + graph.learner_id(profile.learner) + "' has no responses");
  ContingencyTable t;
  for (const auto& r : responses) {
    const auto* e = profile.find(graph.item_concept(r.item));
    if (!e) continue;
    const bool know = e->state == PerceivedState::kKnow;
    if (know && r.correct) ++t.a;
    else if (know) ++t.b;
    else if (r.correct) ++t.c;
    else ++t.d;
  }
  return t;
}

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0))
    fail(ErrorKind::kInvalidArgument, "probability_out_of_range", "inverse_normal_cdf needs 0 < p < 1");
  // Acklam's coefficients.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley refinement. Work in the tail nearest to p to keep the residual exact.
  const double e = p < 0.5 ? normal_cdf(x) - p : (1.0 - p) - normal_cdf(-x);
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

double sensitivity(const ContingencyTable& t) {
  if (t.a + t.c == 0) fail(ErrorKind::kDomain, "undefined_margin", "sensitivity needs A + C > 0");
  return static_cast<double>(t.a) / (t.a + t.c);
}

double specificity(const ContingencyTable& t) {
  if (t.b + t.d == 0) fail(ErrorKind::kDomain, "undefined_margin", "specificity needs B + D > 0");
  return static_cast<double>(t.d) / (t.b + t.d);
}

MonitoringMetrics d_prime(const ContingencyTable& t) {
  MonitoringMetrics m;
  m.sensitivity = sensitivity(t);
  m.specificity = specificity(t);
  double h = m.sensitivity;
  double f = static_cast<double>(t.b) / (t.b + t.d);
  if (h == 0.0 || h == 1.0 || f == 0.0 || f == 1.0) {
    h = (t.a + 0.5) / (t.a + t.c + 1.0);
    f = (t.b + 0.5) / (t.b + t.d + 1.0);
    m.corrected = true;
  }
  m.d_prime = inverse_normal_cdf(h) - inverse_normal_cdf(f);
  return m;
}

double performance(const HeteroGraph& graph, LearnerId learner) {
  const auto responses = graph.responses(learner);
  if (responses.empty())
    fail(ErrorKind::kDomain, "no_responses", "learner '" + graph.learner_id(learner) + "' has no responses");
  const auto correct = std::count_if(responses.begin(), responses.end(), [](const Response& r) { return r.correct; });
  return static_cast<double>(correct) / static_cast<double>(responses.size());
}

CohortAssessment assess_cohort(const HeteroGraph& graph, const std::map<LearnerId, InferredStates>& inferred) {
  CohortAssessment out;
  const InferredStates none;
  for (std::uint32_t l = 0; l < graph.num_learners(); ++l) {
    const LearnerId learner{l};
    const auto it = inferred.find(learner);
    LearnerAssessment a;
    a.learner = learner;
    a.profile = complete_profile(graph, learner, it == inferred.end() ? none : it->second);
    if (graph.responses(learner).empty()) {
      out.skipped.push_back(learner);
      continue;
    }
    a.table = contingency(a.profile, graph);
    a.perf = performance(graph, learner);
    a.defined = a.table.a + a.table.c > 0 && a.table.b + a.table.d > 0;
    if (a.defined) a.metrics = d_prime(a.table);
    out.learners.push_back(std::move(a));
  }
  return out;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::string metrics_csv(const CohortAssessment& cohort, const HeteroGraph& graph) {
  std::ostringstream out;
  out << "learner,A,B,C,D,d_prime,sensitivity,specificity,corrected\n";
  for (const auto& a : cohort.learners) {
    out << graph.learner_id(a.learner) << ',' << a.table.a << ',' << a.table.b << ',' << a.table.c << ',' << a.table.d;
    if (a.defined)
      out << ',' << num(a.metrics.d_prime) << ',' << num(a.metrics.sensitivity) << ',' << num(a.metrics.specificity)
          << ',' << (a.metrics.corrected ? "true" : "false") << '\n';
    else
      out << ",,,,\n";
  }
  return out.str();
}

}  // namespace kmc
