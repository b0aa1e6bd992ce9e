#include <set>

#include "doctest.h"
#include "kmcoach/error.hpp"
#include "kmcoach/monitoring.hpp"
#include "kmcoach/synth.hpp"

using namespace kmc;

namespace {

SynthConfig small(std::uint64_t seed = 1) {
  SynthConfig c;
  c.n_learners = 30;
  c.n_concepts = 20;
  c.n_items = 12;
  c.seed = seed;
  return c;
}

std::array<double, 5> only(Pattern p) {
  std::array<double, 5> w{};
  w[static_cast<std::size_t>(p)] = 1.0;
  return w;
}

}  // namespace

TEST_SUITE("synth") {
  TEST_CASE("concept DAG shapes") {
    SynthConfig c;
    c.n_concepts = 12;
    c.dag_layers = 1;
    c.prereq_prob = 1.0;
    CHECK(gen_concept_dag(c, 3).edges.empty());

    c.n_concepts = 7;
    c.dag_layers = 2;  // layer sizes 4 and 3
    auto dag = gen_concept_dag(c, 3);
    CHECK(dag.edges.size() == 4 * 3);

    c = SynthConfig{};
    c.max_layer_gap = 0;
    c.prereq_prob = 1.0;
    dag = gen_concept_dag(c, 3);
    // Every cross-layer pair with equal layer sizes of 10: C(5,2) * 100.
    CHECK(dag.edges.size() == 10 * 100);
    c.max_layer_gap = 1;
    CHECK(gen_concept_dag(c, 3).edges.size() == 4 * 100);
    for (auto [from, to] : gen_concept_dag(SynthConfig{}, 9).edges) CHECK(from < to);
  }

  TEST_CASE("generated graphs validate") {
    for (std::uint64_t seed : {0, 1, 2, 3}) {
      auto cohort = gen_cohort(small(seed));
      CHECK(validate(cohort.records).empty());
      auto g = HeteroGraph::build(cohort.records);
      CHECK(g.num_learners() == 30);
      CHECK(g.num_concepts() == 20);
      CHECK(g.num_assessments() == 12);
      CHECK(g.num_responses() == 30 * 12);
    }
    auto def = gen_cohort(SynthConfig{});
    CHECK(validate(def.records).empty());
  }

  TEST_CASE("config validation") {
    auto bad = [](auto mutate) {
      SynthConfig c;
      mutate(c);
      CHECK_THROWS_AS(c.validate(), Error);
    };
    bad([](SynthConfig& c) { c.n_items = c.n_concepts + 1; });
    bad([](SynthConfig& c) { c.n_learners = 0; });
    bad([](SynthConfig& c) { c.prereq_prob = 1.5; });
    bad([](SynthConfig& c) { c.mention_prob = -0.1; });
    bad([](SynthConfig& c) { c.persona_mix = {0.5, 0.5, 0.5, 0, 0}; });
    bad([](SynthConfig& c) { c.dag_layers = 0; });
    bad([](SynthConfig& c) { c.personas[0].specificity = 2; });
    SynthConfig{}.validate();
  }

  TEST_CASE("full disclosure leaves no latent states") {
    auto c = small();
    c.mention_prob = 1.0;
    auto cohort = gen_cohort(c);
    CHECK(cohort.truth.latent_labels.empty());
    CHECK(count_latent(HeteroGraph::build(cohort.records)) == 0);
  }

  TEST_CASE("noise-free responses equal mastery") {
    auto c = small();
    c.slip = 0;
    c.guess = 0;
    auto cohort = gen_cohort(c);
    auto g = HeteroGraph::build(cohort.records);
    for (std::uint32_t l = 0; l < g.num_learners(); ++l)
      for (const auto& r : g.responses(LearnerId{l}))
        CHECK(r.correct == (cohort.truth.true_mastery[l][g.item_concept(r.item).value] != 0));
  }

  TEST_CASE("same seed gives the same cohort") {
    auto a = gen_cohort(small(5)), b = gen_cohort(small(5)), other = gen_cohort(small(6));
    auto ga = HeteroGraph::build(a.records), gb = HeteroGraph::build(b.records);
    CHECK(ga.fingerprint() == gb.fingerprint());
    CHECK(ground_truth_to_json(a.truth, ga) == ground_truth_to_json(b.truth, gb));
    CHECK(ga.fingerprint() != HeteroGraph::build(other.records).fingerprint());
  }

  TEST_CASE("learner settings do not change the curriculum") {
    auto a = small(5);
    auto b = a;
    b.persona_mix = only(Pattern::kOC);
    b.mention_prob = 0.3;
    auto ra = gen_cohort(a).records, rb = gen_cohort(b).records;
    CHECK(ra.prerequisites == rb.prerequisites);
    CHECK(ra.assessments.size() == rb.assessments.size());
    for (std::size_t i = 0; i < ra.assessments.size(); ++i)
      CHECK(ra.assessments[i].concept_id == rb.assessments[i].concept_id);
  }

  TEST_CASE("latent labels and disclosures cover every assessed pair") {
    auto cohort = gen_cohort(small(8));
    auto g = HeteroGraph::build(cohort.records);
    std::set<LearnerConcept> latent;
    for (const auto& lab : cohort.truth.latent_labels) {
      CHECK(latent.insert({lab.learner, lab.concept_id}).second);
      CHECK(lab.perceived_know == (cohort.truth.true_perceived[lab.learner.value][lab.concept_id.value] != 0));
    }
    std::size_t expected = 0;
    for (std::uint32_t l = 0; l < g.num_learners(); ++l) {
      auto part = mention_partition(g, LearnerId{l});
      expected += part.latent.size();
      for (auto k : part.latent) CHECK(latent.count({LearnerId{l}, k}));
      for (auto k : g.assessed_concepts()) {
        const bool mentioned = g.perception(LearnerId{l}, k).has_value();
        CHECK(mentioned != (latent.count({LearnerId{l}, k}) > 0));
      }
    }
    CHECK(latent.size() == expected);
  }

  TEST_CASE("sidecar round trip") {
    auto cohort = gen_cohort(small(8));
    auto g = HeteroGraph::build(cohort.records);
    auto doc = ground_truth_to_json(cohort.truth, g);
    auto labels = parse_latent_labels(doc, g);
    REQUIRE(labels.size() == cohort.truth.latent_labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      CHECK(labels[i].learner == cohort.truth.latent_labels[i].learner);
      CHECK(labels[i].concept_id == cohort.truth.latent_labels[i].concept_id);
      CHECK(labels[i].perceived_know == cohort.truth.latent_labels[i].perceived_know);
    }
    doc["latent_labels"][0]["learner"] = "nobody";
    CHECK_THROWS_AS(parse_latent_labels(doc, g), Error);
  }

  TEST_CASE("perception follows prerequisite structure") {
    SynthConfig c;
    c.persona_mix = only(Pattern::kWC);
    c.mention_prob = 0.5;
    c.seed = 12;
    auto cohort = gen_cohort(c);
    auto g = HeteroGraph::build(cohort.records);
    int all_n = 0, all_know = 0, none_n = 0, none_know = 0;
    for (std::size_t l = 0; l < c.n_learners; ++l) {
      const auto& p = cohort.truth.true_perceived[l];
      for (std::uint32_t k = 0; k < c.n_concepts; ++k) {
        auto parents = g.parents(ConceptId{k});
        if (parents.empty()) continue;
        std::size_t known = 0;
        for (auto j : parents) known += p[j.value];
        if (known == parents.size()) ++all_n, all_know += p[k];
        if (known == 0) ++none_n, none_know += p[k];
      }
    }
    REQUIRE(all_n > 0);
    REQUIRE(none_n > 0);
    CHECK(static_cast<double>(all_know) / all_n > static_cast<double>(none_know) / none_n);
  }

  TEST_CASE("overconfident cohorts have low specificity") {
    SynthConfig c;
    c.persona_mix = only(Pattern::kOC);
    c.mention_prob = 1.0;
    c.seed = 4;
    auto g = HeteroGraph::build(gen_cohort(c).records);
    auto cohort = assess_cohort(g, {});
    double total = 0;
    int n = 0;
    for (const auto& l : cohort.learners)
      if (l.defined) total += l.metrics.specificity, ++n;
    REQUIRE(n > 0);
    CHECK(total / n < 0.5);
  }

  TEST_CASE("paper-scale preset") {
    auto c = SynthConfig::paper_scale();
    CHECK(c.n_concepts == 211);
    CHECK(c.n_learners == 150);
    CHECK(c.n_items == 45);
    auto g = HeteroGraph::build(gen_cohort(c).records);
    CHECK(g.num_concepts() == 211);
    CHECK(g.assessed_concepts().size() == 45);
  }

  TEST_CASE("unassessed disclosures can be switched off") {
    auto c = small(2);
    c.mention_unassessed = false;
    auto g = HeteroGraph::build(gen_cohort(c).records);
    for (auto [l, k] : g.know_edges()) CHECK(g.is_assessed(k));
    for (auto [l, k] : g.dontknow_edges()) CHECK(g.is_assessed(k));
  }
}
