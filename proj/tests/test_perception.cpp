#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "kmcoach/error.hpp"
#include "kmcoach/perception.hpp"

using namespace kmc;
using fixtures::Builder;

namespace {

// One learner with `neg` dont-know concepts, `pos` know concepts and `latent`
// unmentioned assessed concepts; all concepts are assessed.
HeteroGraph pools_graph(int pos, int neg, int latent) {
  Builder b;
  b.learners({"s"});
  int k = 0;
  auto add = [&](auto&& mention) {
    const std::string id = "k" + std::to_string(k++);
    b.r.concepts.push_back({id, id});
    b.item("q" + id, id);
    mention(id);
  };
  for (int i = 0; i < pos; ++i) add([&](const std::string& id) { b.know("s", id); });
  for (int i = 0; i < neg; ++i) add([&](const std::string& id) { b.dont_know("s", id); });
  for (int i = 0; i < latent; ++i) add([](const std::string&) {});
  return b.build();
}

// Learners s0..s9 each knowing concepts k0..k9: 100 know edges.
HeteroGraph hundred_edges() {
  Builder b;
  for (int i = 0; i < 10; ++i) b.r.learners.push_back("s" + std::to_string(i));
  for (int k = 0; k < 12; ++k) b.r.concepts.push_back({"k" + std::to_string(k), ""});
  for (int i = 0; i < 10; ++i) {
    for (int k = 0; k < 10; ++k) b.know("s" + std::to_string(i), "k" + std::to_string(k));
    b.dont_know("s" + std::to_string(i), "k10");
    b.dont_know("s" + std::to_string(i), "k11");
  }
  return b.build();
}

}  // namespace

TEST_SUITE("perception") {
  TEST_CASE("subgraph keeps know and prereq edges only") {
    Builder b;
    b.learners({"s1", "s2"}).concepts({"A", "B", "C", "D"}).prereq("A", "B");
    b.know("s1", "A").know("s1", "B").know("s2", "A").know("s2", "C").know("s2", "D");
    b.dont_know("s1", "C").dont_know("s1", "D").dont_know("s2", "B");
    auto g = b.build();
    auto s = build_perception_subgraph(g);
    CHECK(s.know_edges.size() == 5);
    CHECK(s.prereq_edges.size() == 1);
    for (auto e : s.know_edges) CHECK(g.perception(e.first, e.second) == PerceivedState::kKnow);
  }

  TEST_CASE("no know edges leaves prereqs only; split then fails") {
    Builder b;
    b.learners({"s1"}).concepts({"A", "B"}).prereq("A", "B").dont_know("s1", "A");
    auto g = b.build();
    auto s = build_perception_subgraph(g);
    CHECK(s.know_edges.empty());
    CHECK(s.prereq_edges.size() == 1);
    CHECK_THROWS_AS(split_edges(s, g, 0.8, 1), Error);
  }

  TEST_CASE("class-shaped fixture subgraph sizes") {
    auto g = HeteroGraph::build(fixtures::class_shaped_records());
    auto s = build_perception_subgraph(g);
    CHECK(s.know_edges.size() == 6349);
    CHECK(s.prereq_edges.size() == 226);
  }

  TEST_CASE("split sizes, partition and determinism") {
    Builder b;
    b.learners({"s1", "s2"}).concepts({"k0", "k1", "k2", "k3", "k4", "k5", "k6"});
    for (int k = 0; k < 5; ++k) b.know("s1", "k" + std::to_string(k)), b.know("s2", "k" + std::to_string(k));
    b.dont_know("s1", "k5").dont_know("s2", "k6");
    auto g = b.build();
    auto s = build_perception_subgraph(g);
    auto split = split_edges(s, g, 0.8, 7);
    CHECK(split.train_pos.size() == 8);
    CHECK(split.test_pos.size() == 2);
    CHECK(split.test_neg.size() == 2);
    std::set<LearnerConcept> all(split.train_pos.begin(), split.train_pos.end());
    for (auto e : split.test_pos) CHECK(all.insert(e).second);
    CHECK(all == std::set<LearnerConcept>(s.know_edges.begin(), s.know_edges.end()));
    auto again = split_edges(s, g, 0.8, 7);
    CHECK(again.train_pos == split.train_pos);
    CHECK(again.test_pos == split.test_pos);
    CHECK(again.test_neg == split.test_neg);
    auto train = training_subgraph(s, split);
    CHECK(train.know_edges == split.train_pos);
    CHECK_THROWS_AS(split_edges(s, g, 1.0, 7), Error);
    CHECK_THROWS_AS(split_edges(s, g, 0.0, 7), Error);
  }

  TEST_CASE("test set size follows round((1 - ratio) * |know|)") {
    auto g = hundred_edges();
    auto s = build_perception_subgraph(g);
    for (double ratio : {0.5, 0.8, 0.75, 0.9, 0.33}) {
      auto split = split_edges(s, g, ratio, 3);
      CHECK(split.test_pos.size() == static_cast<std::size_t>(std::llround((1 - ratio) * 100)));
      CHECK(split.test_neg.size() == std::min<std::size_t>(split.test_pos.size(), 20));
    }
  }

  TEST_CASE("thirty seeds give distinct splits covering most edges") {
    auto g = hundred_edges();
    auto s = build_perception_subgraph(g);
    std::set<std::vector<LearnerConcept>> distinct;
    std::set<LearnerConcept> covered;
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
      auto split = split_edges(s, g, 0.8, seed);
      auto test = split.test_pos;
      std::sort(test.begin(), test.end());
      distinct.insert(test);
      covered.insert(test.begin(), test.end());
    }
    CHECK(distinct.size() == 30);
    // Each edge is missed by all 30 draws with probability 0.8^30 ~ 0.1%.
    CHECK(covered.size() >= 90);
  }

  TEST_CASE("split manifest JSON round-trips") {
    auto g = hundred_edges();
    auto s = build_perception_subgraph(g);
    auto split = split_edges(s, g, 0.8, 11);
    auto back = split_from_json(split_to_json(split, g), g);
    CHECK(back.train_pos == split.train_pos);
    CHECK(back.test_pos == split.test_pos);
    CHECK(back.test_neg == split.test_neg);
    CHECK(back.seed == 11);
    CHECK(back.ratio == 0.8);
  }

  TEST_CASE("EINS caps explicit negatives at the pool") {
    auto g = pools_graph(2, 8, 10);
    auto batch = eins_sample(g, LearnerId{0}, 10, 0.5, 1);
    CHECK(batch.explicit_negs.size() == 8);
    CHECK(batch.implicit_negs.size() == 5);
    CHECK(batch.size() == 13);
  }

  TEST_CASE("EINS with a large explicit pool") {
    auto g = pools_graph(2, 20, 10);
    auto batch = eins_sample(g, LearnerId{0}, 4, 0.5, 1);
    CHECK(batch.explicit_negs.size() == 4);
    CHECK(batch.implicit_negs.size() == 2);
  }

  TEST_CASE("rho zero samples explicit only") {
    auto g = pools_graph(2, 5, 5);
    auto batch = eins_sample(g, LearnerId{0}, 3, 0.0, 1);
    CHECK(batch.explicit_negs.size() == 3);
    CHECK(batch.implicit_negs.empty());
  }

  TEST_CASE("no negatives available") {
    auto g = pools_graph(3, 0, 0);
    try {
      eins_sample(g, LearnerId{0}, 3, 0.5, 1);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.tag() == "no_negatives_available");
    }
    CHECK_THROWS_AS(eins_sample(pools_graph(1, 1, 1), LearnerId{0}, 0, 0.5, 1), Error);
    CHECK_THROWS_AS(eins_sample(pools_graph(1, 1, 1), LearnerId{0}, 1, -0.5, 1), Error);
  }

  TEST_CASE("pools are disjoint from positives and from each other") {
    auto g = pools_graph(4, 6, 6);
    auto pools = negative_pools(g, LearnerId{0});
    std::set<ConceptId> known(g.known(LearnerId{0}).begin(), g.known(LearnerId{0}).end());
    for (auto k : pools.explicit_pool) CHECK(!known.count(k));
    for (auto k : pools.implicit_pool) CHECK(!known.count(k));
    std::set<ConceptId> e(pools.explicit_pool.begin(), pools.explicit_pool.end());
    for (auto k : pools.implicit_pool) CHECK(!e.count(k));
    CHECK(pools.explicit_pool.size() == 6);
    CHECK(pools.implicit_pool.size() == 6);
  }

  TEST_CASE("implicit pool is restricted to assessed concepts") {
    Builder b;
    b.learners({"s"}).concepts({"a", "b", "c"}).item("q", "a").dont_know("s", "b");
    auto pools = negative_pools(b.build(), LearnerId{0});
    CHECK(pools.implicit_pool.size() == 1);  // only "a"; "c" is unassessed
  }

  TEST_CASE("held-out test negatives leave the explicit pool") {
    auto g = pools_graph(2, 4, 0);
    const auto dk = g.dont_know(LearnerId{0});
    std::vector<LearnerConcept> held{{LearnerId{0}, dk[0]}};
    auto pools = negative_pools(g, LearnerId{0}, held);
    CHECK(pools.explicit_pool.size() == 3);
    CHECK(std::find(pools.explicit_pool.begin(), pools.explicit_pool.end(), dk[0]) == pools.explicit_pool.end());
  }

  TEST_CASE("ablation sampler draws from the implicit pool only") {
    auto g = pools_graph(2, 5, 4);
    auto pools = negative_pools(g, LearnerId{0});
    Rng rng(3);
    auto batch = uniform_unmentioned_sample(pools, LearnerId{0}, 10, rng);
    CHECK(batch.explicit_negs.empty());
    CHECK(batch.implicit_negs.size() == 4);
  }

  TEST_CASE("eins sampling is deterministic per seed") {
    auto g = pools_graph(3, 10, 10);
    auto a = eins_sample(g, LearnerId{0}, 5, 0.5, 9);
    auto b = eins_sample(g, LearnerId{0}, 5, 0.5, 9);
    CHECK(a.explicit_negs == b.explicit_negs);
    CHECK(a.implicit_negs == b.implicit_negs);
    CHECK(implicit_quota(5, 0.5) == 2);
    CHECK(implicit_quota(7, 1.0) == 7);
  }
}
