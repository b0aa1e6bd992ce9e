#include "kmcoach/coach.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "kmcoach/error.hpp"

namespace kmc {

using nlohmann::json;

double median(std::vector<double> values) {
  if (values.empty()) fail(ErrorKind::kDomain, "empty_cohort", "median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

CohortThresholds cohort_thresholds(std::span<const LearnerStats> cohort) {
  if (cohort.size() < 2) fail(ErrorKind::kDomain, "empty_cohort", "thresholds need at least two learners");
  std::vector<double> perf, dp, sens, spec;
  for (const auto& s : cohort) {
    perf.push_back(s.perf);
    dp.push_back(s.metrics.d_prime);
    sens.push_back(s.metrics.sensitivity);
    spec.push_back(s.metrics.specificity);
  }
  return {median(perf), median(dp), median(sens), median(spec)};
}

LearnerPattern classify(double perf, const MonitoringMetrics& m, const CohortThresholds& t) {
  LearnerPattern p;
  auto& b = p.basis;
  b.perf = perf;
  b.d_prime = m.d_prime;
  b.sensitivity = m.sensitivity;
  b.specificity = m.specificity;
  b.thresholds = t;
  b.perf_high = perf >= t.perf_median;
  b.dprime_high = m.d_prime >= t.dprime_median;
  b.sensitivity_high = m.sensitivity >= t.sensitivity_median;
  b.specificity_high = m.specificity >= t.specificity_median;
  if (b.dprime_high) p.tag = b.perf_high ? Pattern::kWC : Pattern::kAL;
  else if (b.perf_high) p.tag = b.sensitivity_high ? Pattern::kLC : Pattern::kUC;
  else p.tag = Pattern::kOC;
  return p;
}

std::string to_string(SdtCategory c) {
  switch (c) {
    case SdtCategory::kHit: return "Hit";
    case SdtCategory::kFalseAlarm: return "False Alarm";
    case SdtCategory::kMiss: return "Miss";
    case SdtCategory::kCorrectRejection: return "Correct Rejection";
  }
  return "?";
}

namespace {

SdtCategory category_from_string(const std::string& s) {
  for (auto c : {SdtCategory::kHit, SdtCategory::kFalseAlarm, SdtCategory::kMiss, SdtCategory::kCorrectRejection})
    if (to_string(c) == s) return c;
  fail(ErrorKind::kParse, "parse_error", "unknown SDT category '" + s + "'");
}

const char* hl(bool high) { return high ? "high" : "low"; }

}  // namespace

std::string to_string(GeneratorTag t) { return t == GeneratorTag::kTemplate ? "Template" : "External"; }

FeedUp build_feed_up(const LearnerPattern& p) {
  const auto& b = p.basis;
  FeedUp up;
  std::ostringstream pos;
  pos << pattern_name(p.tag) << " (" << to_string(p.tag) << "): performance " << hl(b.perf_high) << ", d' "
      << hl(b.dprime_high);
  if (b.perf_high && !b.dprime_high) pos << ", sensitivity " << hl(b.sensitivity_high);
  if (!b.perf_high && !b.dprime_high) pos << ", specificity " << hl(b.specificity_high);
  pos << " relative to the cohort medians.";
  up.current_position = pos.str();
  if (p.tag == Pattern::kWC)
    up.goal_statement = "You are Well Calibrated. Keep your performance and the accuracy of your self-assessment.";
  else
    up.goal_statement = "Target: Well Calibrated, meaning strong performance together with accurate self-assessment.";
  if (!b.perf_high) up.priority = "knowledge gaps";
  else if (!b.dprime_high) up.priority = "knowledge monitoring";
  else up.priority = "maintain";
  return up;
}

FeedBack build_feed_back(const PerceptionProfile& profile, const HeteroGraph& graph, int max_depth) {
  // Per-concept correctness over the learner's responded items.
  std::map<ConceptId, bool> correct;
  for (const auto& r : graph.responses(profile.learner)) {
    const auto k = graph.item_concept(r.item);
    auto [it, inserted] = correct.emplace(k, r.correct);
    if (!inserted) it->second = it->second && r.correct;
  }
  FeedBack fb;
  std::set<ConceptId> incorrect;
  for (auto [k, ok] : correct) {
    (ok ? fb.correct_concepts : fb.incorrect_concepts).push_back(graph.concept_id(k));
    if (!ok) incorrect.insert(k);
    const auto* e = profile.find(k);
    if (!e) continue;
    const bool know = e->state == PerceivedState::kKnow;
    const auto cat = know ? (ok ? SdtCategory::kHit : SdtCategory::kFalseAlarm)
                          : (ok ? SdtCategory::kMiss : SdtCategory::kCorrectRejection);
    fb.sdt_categories.push_back({graph.concept_id(k), cat});
  }
  for (auto k : incorrect) {
    // Breadth-first over prerequisites, nearest hop count per ancestor.
    std::map<ConceptId, int> seen;
    std::vector<ConceptId> frontier{k};
    for (int depth = 1; depth <= max_depth && !frontier.empty(); ++depth) {
      std::vector<ConceptId> next;
      for (auto c : frontier)
        for (auto parent : graph.parents(c))
          if (seen.emplace(parent, depth).second) next.push_back(parent);
      frontier = std::move(next);
    }
    for (auto [anc, dist] : seen)
      if (incorrect.count(anc)) fb.related_past_errors.push_back({graph.concept_id(k), graph.concept_id(anc), dist});
  }
  return fb;
}

std::span<const StrategyEntry> strategy_catalog() {
  using P = Pattern;
  static const std::vector<StrategyEntry> catalog{
      {"Self-regulated learning", {P::kWC, P::kAL, P::kUC, P::kOC, P::kLC}, "planning, monitoring, reflective regulation"},
      {"Anxiety-cognitive capacity", {P::kWC, P::kAL, P::kUC, P::kOC, P::kLC}, "low-stakes assessment, self-pacing"},
      {"Knowledge monitoring", {P::kUC, P::kOC, P::kLC}, "strategic help seeking, fading scaffolding"},
      {"Self-verification", {P::kOC}, "self-explanation, expectation-outcome comparison"},
      {"Cognitive load theory", {P::kUC, P::kOC, P::kLC}, "attention guidance, prioritized feedback cues"},
      {"Depth of processing", {P::kWC, P::kAL}, "apply to new problems, why-and-how question"},
  };
  return catalog;
}

FeedForward build_feed_forward(const LearnerPattern& pattern, const FeedBack& fb, const HeteroGraph& graph) {
  FeedForward ff;
  auto id_of = [&](const std::string& s) { return *graph.find_concept(s); };
  std::vector<ConceptId> relearn;
  std::vector<ConceptId> hits;
  std::set<ConceptId> in_relearn;
  for (const auto& c : fb.sdt_categories) {
    const auto k = id_of(c.concept_id);
    if (c.category == SdtCategory::kMiss || c.category == SdtCategory::kFalseAlarm) {
      relearn.push_back(k);
      in_relearn.insert(k);
    } else if (c.category == SdtCategory::kHit) {
      hits.push_back(k);
    }
  }
  auto by_depth = [&](ConceptId x, ConceptId y) {
    return std::pair(graph.depth(x), x) < std::pair(graph.depth(y), y);
  };
  std::sort(relearn.begin(), relearn.end(), by_depth);
  for (auto k : relearn) ff.priority_relearn.push_back(graph.concept_id(k));

  std::vector<ConceptId> review;
  std::set<ConceptId> incorrect;
  for (const auto& s : fb.incorrect_concepts) {
    const auto k = id_of(s);
    incorrect.insert(k);
    if (!in_relearn.count(k)) review.push_back(k);
  }
  std::sort(review.begin(), review.end(), by_depth);
  for (auto k : review) ff.review.push_back(graph.concept_id(k));

  auto has_incorrect_descendant = [&](ConceptId k) {
    std::vector<ConceptId> stack{k};
    std::set<ConceptId> seen{k};
    while (!stack.empty()) {
      const auto c = stack.back();
      stack.pop_back();
      for (auto child : graph.children(c)) {
        if (incorrect.count(child)) return true;
        if (seen.insert(child).second) stack.push_back(child);
      }
    }
    return false;
  };
  std::sort(hits.begin(), hits.end(), by_depth);
  for (auto k : hits)
    if (!has_incorrect_descendant(k)) ff.challenge.push_back(graph.concept_id(k));

  for (const auto& entry : strategy_catalog())
    if (std::find(entry.targets.begin(), entry.targets.end(), pattern.tag) != entry.targets.end())
      ff.km_strategies.push_back(entry.theory + ": " + entry.strategies);
  return ff;
}

namespace {

std::string label_list(const std::vector<std::string>& ids, const HeteroGraph& graph, std::size_t limit = 8) {
  std::string out;
  for (std::size_t i = 0; i < ids.size() && i < limit; ++i) {
    if (i) out += ", ";
    const auto k = graph.find_concept(ids[i]);
    out += k ? graph.concept_label(*k) : ids[i];
  }
  if (ids.size() > limit) out += " and " + std::to_string(ids.size() - limit) + " more";
  return out;
}

}  // namespace

std::string TemplateGenerator::render(const FeedbackReport& r, const HeteroGraph& graph) const {
  const auto& ff = r.feed_forward;
  std::ostringstream out;
  if (!ff.priority_relearn.empty())
    out << "Start by relearning " << label_list(ff.priority_relearn, graph)
        << "; your sense of these concepts did not match your results, and they are listed foundations first. ";
  if (!ff.review.empty()) out << "Then review " << label_list(ff.review, graph) << ". ";
  if (ff.priority_relearn.empty() && ff.review.empty()) out << "No answers need correcting. ";
  if (!ff.challenge.empty())
    out << "To extend what you have mastered, take on harder problems built on " << label_list(ff.challenge, graph)
        << ". ";
  switch (r.pattern) {
    case Pattern::kWC:
      out << "Keep checking your understanding by explaining why and how each method works.";
      break;
    case Pattern::kAL:
      out << "You judge your gaps well; use that awareness to plan study time on the concepts above.";
      break;
    case Pattern::kUC:
      out << "You know more than you think: before marking a concept as unknown, try a quick problem on it.";
      break;
    case Pattern::kOC:
      out << "Before an assessment, predict your answer and compare it with the outcome to check your confidence.";
      break;
    case Pattern::kLC:
      out << "Be stricter about what counts as known: only mark a concept known once you can solve a problem on it.";
      break;
  }
  return out.str();
}

FeedbackReport assemble_report(const std::string& learner, const LearnerPattern& pattern, FeedUp feed_up,
                               FeedBack feed_back, FeedForward feed_forward, const HeteroGraph& graph,
                               const FeedbackGenerator* generator) {
  FeedbackReport r;
  r.learner = learner;
  r.pattern = pattern.tag;
  r.basis = pattern.basis;
  r.feed_up = std::move(feed_up);
  r.feed_back = std::move(feed_back);
  r.feed_forward = std::move(feed_forward);
  const TemplateGenerator fallback;
  if (generator && generator->tag() == GeneratorTag::kExternal) {
    try {
      r.feed_forward.advice = generator->render(r, graph);
      r.generator_tag = GeneratorTag::kExternal;
      return r;
    } catch (const std::exception& e) {
      r.warnings.push_back(std::string("external generator failed, used template: ") + e.what());
    }
  }
  r.feed_forward.advice = fallback.render(r, graph);
  r.generator_tag = GeneratorTag::kTemplate;
  return r;
}

// ---------------------------------------------------------------------------
// Serialization

json report_to_json(const FeedbackReport& r) {
  const auto& b = r.basis;
  json related = json::array();
  for (const auto& e : r.feed_back.related_past_errors)
    related.push_back({{"concept", e.concept_id}, {"prerequisite", e.prerequisite}, {"distance", e.distance}});
  json categories = json::array();
  for (const auto& c : r.feed_back.sdt_categories)
    categories.push_back({{"concept", c.concept_id}, {"category", to_string(c.category)}});
  return {
      {"learner", r.learner},
      {"pattern", to_string(r.pattern)},
      {"basis",
       {{"perf", b.perf},
        {"d_prime", b.d_prime},
        {"sensitivity", b.sensitivity},
        {"specificity", b.specificity},
        {"perf_high", b.perf_high},
        {"dprime_high", b.dprime_high},
        {"sensitivity_high", b.sensitivity_high},
        {"specificity_high", b.specificity_high},
        {"thresholds",
         {{"perf_median", b.thresholds.perf_median},
          {"dprime_median", b.thresholds.dprime_median},
          {"sensitivity_median", b.thresholds.sensitivity_median},
          {"specificity_median", b.thresholds.specificity_median}}}}},
      {"feed_up",
       {{"current_position", r.feed_up.current_position},
        {"goal_statement", r.feed_up.goal_statement},
        {"priority", r.feed_up.priority}}},
      {"feed_back",
       {{"correct_concepts", r.feed_back.correct_concepts},
        {"incorrect_concepts", r.feed_back.incorrect_concepts},
        {"related_past_errors", related},
        {"sdt_category", categories}}},
      {"feed_forward",
       {{"priority_relearn", r.feed_forward.priority_relearn},
        {"review", r.feed_forward.review},
        {"challenge", r.feed_forward.challenge},
        {"km_strategies", r.feed_forward.km_strategies},
        {"advice", r.feed_forward.advice}}},
      {"generator_tag", to_string(r.generator_tag)},
      {"warnings", r.warnings},
  };
}

FeedbackReport report_from_json(const json& doc) {
  if (auto errors = validate_report_json(doc); !errors.empty())
    fail(ErrorKind::kParse, "schema_violation", "report JSON: " + errors.front());
  FeedbackReport r;
  r.learner = doc["learner"].get<std::string>();
  r.pattern = pattern_from_string(doc["pattern"].get<std::string>());
  const auto& b = doc["basis"];
  r.basis.perf = b["perf"].get<double>();
  r.basis.d_prime = b["d_prime"].get<double>();
  r.basis.sensitivity = b["sensitivity"].get<double>();
  r.basis.specificity = b["specificity"].get<double>();
  r.basis.perf_high = b["perf_high"].get<bool>();
  r.basis.dprime_high = b["dprime_high"].get<bool>();
  r.basis.sensitivity_high = b["sensitivity_high"].get<bool>();
  r.basis.specificity_high = b["specificity_high"].get<bool>();
  const auto& t = b["thresholds"];
  r.basis.thresholds = {t["perf_median"].get<double>(), t["dprime_median"].get<double>(),
                        t["sensitivity_median"].get<double>(), t["specificity_median"].get<double>()};
  const auto& up = doc["feed_up"];
  r.feed_up = {up["current_position"].get<std::string>(), up["goal_statement"].get<std::string>(),
               up["priority"].get<std::string>()};
  const auto& fb = doc["feed_back"];
  r.feed_back.correct_concepts = fb["correct_concepts"].get<std::vector<std::string>>();
  r.feed_back.incorrect_concepts = fb["incorrect_concepts"].get<std::vector<std::string>>();
  for (const auto& e : fb["related_past_errors"])
    r.feed_back.related_past_errors.push_back(
        {e["concept"].get<std::string>(), e["prerequisite"].get<std::string>(), e["distance"].get<int>()});
  for (const auto& c : fb["sdt_category"])
    r.feed_back.sdt_categories.push_back(
        {c["concept"].get<std::string>(), category_from_string(c["category"].get<std::string>())});
  const auto& ff = doc["feed_forward"];
  r.feed_forward.priority_relearn = ff["priority_relearn"].get<std::vector<std::string>>();
  r.feed_forward.review = ff["review"].get<std::vector<std::string>>();
  r.feed_forward.challenge = ff["challenge"].get<std::vector<std::string>>();
  r.feed_forward.km_strategies = ff["km_strategies"].get<std::vector<std::string>>();
  r.feed_forward.advice = ff["advice"].get<std::string>();
  r.generator_tag = doc["generator_tag"] == "External" ? GeneratorTag::kExternal : GeneratorTag::kTemplate;
  r.warnings = doc["warnings"].get<std::vector<std::string>>();
  return r;
}

namespace {

struct SchemaChecker {
  std::vector<std::string> errors;

  const json* field(const json& obj, const std::string& path, const char* key, json::value_t type) {
    if (!obj.is_object()) {
      errors.push_back(path + " is not an object");
      return nullptr;
    }
    auto it = obj.find(key);
    if (it == obj.end()) {
      errors.push_back(path + "." + key + " is missing");
      return nullptr;
    }
    bool ok = it->type() == type;
    if (type == json::value_t::number_float) ok = it->is_number();
    if (type == json::value_t::number_unsigned) ok = it->is_number_integer() && it->get<long long>() >= 0;
    if (!ok) {
      errors.push_back(path + "." + key + " has the wrong type");
      return nullptr;
    }
    return &*it;
  }

  void strings(const json& obj, const std::string& path, const char* key) {
    if (const auto* a = field(obj, path, key, json::value_t::array))
      for (const auto& v : *a)
        if (!v.is_string()) errors.push_back(path + "." + key + " must hold strings");
  }
};

}  // namespace

std::vector<std::string> validate_report_json(const json& doc) {
  using V = json::value_t;
  SchemaChecker c;
  c.field(doc, "$", "learner", V::string);
  if (const auto* p = c.field(doc, "$", "pattern", V::string)) {
    static const std::set<std::string> tags{"WC", "AL", "UC", "OC", "LC"};
    if (!tags.count(p->get<std::string>())) c.errors.push_back("$.pattern is not a known pattern");
  }
  if (const auto* b = c.field(doc, "$", "basis", V::object)) {
    for (const char* k : {"perf", "d_prime", "sensitivity", "specificity"}) c.field(*b, "$.basis", k, V::number_float);
    for (const char* k : {"perf_high", "dprime_high", "sensitivity_high", "specificity_high"})
      c.field(*b, "$.basis", k, V::boolean);
    if (const auto* t = c.field(*b, "$.basis", "thresholds", V::object))
      for (const char* k : {"perf_median", "dprime_median", "sensitivity_median", "specificity_median"})
        c.field(*t, "$.basis.thresholds", k, V::number_float);
  }
  if (const auto* up = c.field(doc, "$", "feed_up", V::object)) {
    for (const char* k : {"current_position", "goal_statement"}) c.field(*up, "$.feed_up", k, V::string);
    if (const auto* p = c.field(*up, "$.feed_up", "priority", V::string)) {
      const auto s = p->get<std::string>();
      if (s != "knowledge gaps" && s != "knowledge monitoring" && s != "maintain")
        c.errors.push_back("$.feed_up.priority has an unknown value");
    }
  }
  if (const auto* fb = c.field(doc, "$", "feed_back", V::object)) {
    c.strings(*fb, "$.feed_back", "correct_concepts");
    c.strings(*fb, "$.feed_back", "incorrect_concepts");
    if (const auto* rel = c.field(*fb, "$.feed_back", "related_past_errors", V::array))
      for (const auto& e : *rel) {
        c.field(e, "$.feed_back.related_past_errors[]", "concept", V::string);
        c.field(e, "$.feed_back.related_past_errors[]", "prerequisite", V::string);
        c.field(e, "$.feed_back.related_past_errors[]", "distance", V::number_unsigned);
      }
    if (const auto* cats = c.field(*fb, "$.feed_back", "sdt_category", V::array))
      for (const auto& e : *cats) {
        c.field(e, "$.feed_back.sdt_category[]", "concept", V::string);
        if (const auto* cat = c.field(e, "$.feed_back.sdt_category[]", "category", V::string)) {
          const auto s = cat->get<std::string>();
          if (s != "Hit" && s != "False Alarm" && s != "Miss" && s != "Correct Rejection")
            c.errors.push_back("$.feed_back.sdt_category[].category has an unknown value");
        }
      }
  }
  if (const auto* ff = c.field(doc, "$", "feed_forward", V::object)) {
    for (const char* k : {"priority_relearn", "review", "challenge", "km_strategies"}) c.strings(*ff, "$.feed_forward", k);
    c.field(*ff, "$.feed_forward", "advice", V::string);
  }
  if (const auto* g = c.field(doc, "$", "generator_tag", V::string))
    if (*g != "Template" && *g != "External") c.errors.push_back("$.generator_tag has an unknown value");
  c.strings(doc, "$", "warnings");
  return c.errors;
}

namespace {

std::string fixed(double v, int digits = 3) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void bullet_list(std::ostringstream& out, const std::vector<std::string>& ids, const HeteroGraph& graph) {
  if (ids.empty()) {
    out << "- (none)\n";
    return;
  }
  for (const auto& id : ids) {
    const auto k = graph.find_concept(id);
    out << "- " << (k ? graph.concept_label(*k) : id) << " (`" << id << "`)\n";
  }
}

}  // namespace

std::string report_to_markdown(const FeedbackReport& r, const HeteroGraph& graph) {
  std::ostringstream out;
  out << "# Feedback for " << r.learner << "\n\n";
  out << "## Where am I going?\n\n";
  out << "**Pattern:** " << pattern_name(r.pattern) << " (" << to_string(r.pattern) << ")\n\n";
  out << r.feed_up.current_position << "\n\n";
  out << r.feed_up.goal_statement << "\n\n";
  out << "**Priority:** " << r.feed_up.priority << "\n\n";
  out << "| Metric | Value | Cohort median |\n|---|---:|---:|\n";
  out << "| Performance | " << fixed(r.basis.perf) << " | " << fixed(r.basis.thresholds.perf_median) << " |\n";
  out << "| d' | " << fixed(r.basis.d_prime) << " | " << fixed(r.basis.thresholds.dprime_median) << " |\n";
  out << "| Sensitivity | " << fixed(r.basis.sensitivity) << " | " << fixed(r.basis.thresholds.sensitivity_median)
      << " |\n";
  out << "| Specificity | " << fixed(r.basis.specificity) << " | " << fixed(r.basis.thresholds.specificity_median)
      << " |\n\n";

  out << "## How am I going?\n\n";
  out << "### Correct concepts\n\n";
  bullet_list(out, r.feed_back.correct_concepts, graph);
  out << "\n### Incorrect concepts\n\n";
  bullet_list(out, r.feed_back.incorrect_concepts, graph);
  out << "\n### Related past errors\n\n";
  if (r.feed_back.related_past_errors.empty()) out << "- (none)\n";
  for (const auto& e : r.feed_back.related_past_errors)
    out << "- `" << e.concept_id << "` builds on `" << e.prerequisite << "` (" << e.distance << " step"
        << (e.distance == 1 ? "" : "s") << " back), also answered incorrectly\n";
  out << "\n### Self-assessment vs. results\n\n| Concept | Category |\n|---|---|\n";
  for (const auto& c : r.feed_back.sdt_categories) out << "| `" << c.concept_id << "` | " << to_string(c.category) << " |\n";

  out << "\n## Where to next?\n\n";
  out << "### Relearn first\n\n";
  bullet_list(out, r.feed_forward.priority_relearn, graph);
  out << "\n### Review\n\n";
  bullet_list(out, r.feed_forward.review, graph);
  out << "\n### Challenge\n\n";
  bullet_list(out, r.feed_forward.challenge, graph);
  out << "\n### Knowledge-monitoring strategies\n\n";
  for (const auto& s : r.feed_forward.km_strategies) out << "- " << s << "\n";
  out << "\n" << r.feed_forward.advice << "\n";
  if (!r.warnings.empty()) {
    out << "\n> Warnings:\n";
    for (const auto& w : r.warnings) out << "> - " << w << "\n";
  }
  out << "\n_Generated by: " << to_string(r.generator_tag) << "_\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Cohort

std::vector<LearnerStats> learner_stats(const CohortAssessment& cohort) {
  std::vector<LearnerStats> out;
  for (const auto& a : cohort.learners)
    if (a.defined) out.push_back({a.perf, a.metrics});
  return out;
}

CoachResult coach_cohort(const HeteroGraph& graph, const CohortAssessment& cohort,
                         const std::optional<CohortThresholds>& reference, const FeedbackGenerator* generator,
                         int related_depth) {
  CoachResult result;
  const auto stats = learner_stats(cohort);
  result.thresholds = reference ? *reference : cohort_thresholds(stats);
  for (const auto& a : cohort.learners) {
    if (!a.defined) {
      result.unclassified.push_back(a.learner);
      continue;
    }
    CoachedLearner c;
    c.learner = a.learner;
    c.perf = a.perf;
    c.pattern = classify(a.perf, a.metrics, result.thresholds);
    auto up = build_feed_up(c.pattern);
    auto back = build_feed_back(a.profile, graph, related_depth);
    auto forward = build_feed_forward(c.pattern, back, graph);
    c.report = assemble_report(graph.learner_id(a.learner), c.pattern, std::move(up), std::move(back),
                               std::move(forward), graph, generator);
    result.learners.push_back(std::move(c));
  }
  return result;
}

std::string cohort_summary_csv(const CoachResult& result, const HeteroGraph& graph) {
  std::ostringstream out;
  out << "learner,pattern,perf,d_prime,sensitivity,specificity\n";
  for (const auto& c : result.learners) {
    char buf[160];
    std::snprintf(buf, sizeof buf, ",%.10g,%.10g,%.10g,%.10g", c.perf, c.pattern.basis.d_prime,
                  c.pattern.basis.sensitivity, c.pattern.basis.specificity);
    out << graph.learner_id(c.learner) << ',' << to_string(c.pattern.tag) << buf << '\n';
  }
  return out.str();
}

}  // namespace kmc
