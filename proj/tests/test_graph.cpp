#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "kmcoach/error.hpp"
#include "kmcoach/graph.hpp"

using namespace kmc;
using fixtures::Builder;

namespace {

Builder chain() {
  Builder b;
  b.learners({"s1", "s2"}).concepts({"A", "B", "C"}).prereq("A", "B").prereq("B", "C");
  b.item("q1", "A").item("q2", "C");
  b.know("s1", "A").dont_know("s1", "C").know("s2", "B");
  b.response("s1", "q1", true).response("s1", "q2", false).response("s2", "q1", true);
  return b;
}

bool has_code(const std::vector<Diagnostic>& d, const std::string& code) {
  return std::any_of(d.begin(), d.end(), [&](const Diagnostic& x) { return x.code == code; });
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("kmcoach_test_" + name);
}

}  // namespace

TEST_SUITE("graph") {
  TEST_CASE("small chain loads with forced counts") {
    auto g = chain().build();
    CHECK(g.num_learners() == 2);
    CHECK(g.num_concepts() == 3);
    CHECK(g.num_assessments() == 2);
    CHECK(g.prerequisites().size() == 2);
    CHECK(g.know_edges().size() == 2);
    CHECK(g.dontknow_edges().size() == 1);
    CHECK(g.num_responses() == 3);
    CHECK(validate(chain().r).empty());
  }

  TEST_CASE("topological order and depth") {
    auto g = chain().build();
    const auto a = *g.find_concept("A"), b = *g.find_concept("B"), c = *g.find_concept("C");
    CHECK(g.depth(a) == 0);
    CHECK(g.depth(b) == 1);
    CHECK(g.depth(c) == 2);
    auto topo = g.topological_order();
    auto pos = [&](ConceptId k) { return std::find(topo.begin(), topo.end(), k) - topo.begin(); };
    for (auto [from, to] : g.prerequisites()) CHECK(pos(from) < pos(to));
  }

  TEST_CASE("two-cycle is reported as cycle") {
    Builder b;
    b.learners({"s1"}).concepts({"A", "B"}).prereq("A", "B").prereq("B", "A");
    auto d = validate(b.r);
    CHECK(has_code(d, "cycle"));
    try {
      b.build();
      FAIL("expected a validation error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kValidation);
      CHECK(e.tag() == "cycle");
    }
  }

  TEST_CASE("cycle reported iff no topological order exists") {
    std::mt19937 gen(3);
    for (int trial = 0; trial < 200; ++trial) {
      Builder b;
      b.learners({"s"});
      const int n = 6;
      for (int i = 0; i < n; ++i) b.r.concepts.push_back({"k" + std::to_string(i), ""});
      std::vector<std::vector<int>> adj(n);
      std::set<std::pair<int, int>> seen;
      for (int e = 0; e < 7; ++e) {
        const int u = static_cast<int>(gen() % n), v = static_cast<int>(gen() % n);
        if (u == v || !seen.insert({u, v}).second) continue;
        b.prereq("k" + std::to_string(u), "k" + std::to_string(v));
        adj[static_cast<std::size_t>(u)].push_back(v);
      }
      // Kahn's algorithm as an independent acyclicity oracle.
      std::vector<int> indeg(n, 0);
      for (auto& a : adj)
        for (int v : a) ++indeg[static_cast<std::size_t>(v)];
      std::vector<int> queue;
      for (int i = 0; i < n; ++i)
        if (!indeg[static_cast<std::size_t>(i)]) queue.push_back(i);
      int removed = 0;
      while (!queue.empty()) {
        const int u = queue.back();
        queue.pop_back();
        ++removed;
        for (int v : adj[static_cast<std::size_t>(u)])
          if (--indeg[static_cast<std::size_t>(v)] == 0) queue.push_back(v);
      }
      CHECK(has_code(validate(b.r), "cycle") == (removed < n));
    }
  }

  TEST_CASE("item mapped to two concepts") {
    Builder b;
    b.learners({"s1"}).concepts({"A", "B"}).item("q1", "A").item("q1", "B");
    auto d = validate(b.r);
    REQUIRE(has_code(d, "duplicate_item_mapping"));
    auto it = std::find_if(d.begin(), d.end(), [](auto& x) { return x.code == "duplicate_item_mapping"; });
    CHECK(std::find(it->ids.begin(), it->ids.end(), "q1") != it->ids.end());
  }

  TEST_CASE("know and dont-know on the same concept conflict") {
    Builder b;
    b.learners({"s1"}).concepts({"k3"}).know("s1", "k3").dont_know("s1", "k3");
    auto d = validate(b.r);
    REQUIRE(has_code(d, "perception_conflict"));
    auto it = std::find_if(d.begin(), d.end(), [](auto& x) { return x.code == "perception_conflict"; });
    CHECK(it->ids == std::vector<std::string>{"s1", "k3"});
  }

  TEST_CASE("dangling endpoints are rejected") {
    Builder b;
    b.learners({"s1"}).concepts({"A"}).prereq("A", "Z");
    CHECK(has_code(validate(b.r), "dangling_endpoint"));
    Builder c;
    c.learners({"s1"}).concepts({"A"}).item("q1", "A").response("s9", "q1", true);
    CHECK(has_code(validate(c.r), "dangling_endpoint"));
    Builder d;
    d.learners({"s1"}).concepts({"A"}).item("q1", "Q");
    CHECK(has_code(validate(d.r), "dangling_endpoint"));
  }

  TEST_CASE("mention partition splits assessed concepts") {
    Builder b;
    b.learners({"s1"}).concepts({"k1", "k2", "k3", "k4", "k5"});
    b.item("q1", "k1").item("q2", "k2").item("q3", "k3").item("q4", "k4");
    b.know("s1", "k1").dont_know("s1", "k2").know("s1", "k5");
    auto g = b.build();
    auto p = mention_partition(g, LearnerId{0});
    auto ids = [&](const std::vector<ConceptId>& v) {
      std::vector<std::string> out;
      for (auto k : v) out.push_back(g.concept_id(k));
      return out;
    };
    CHECK(ids(p.known) == std::vector<std::string>{"k1"});
    CHECK(ids(p.unknown) == std::vector<std::string>{"k2"});
    CHECK(ids(p.latent) == std::vector<std::string>{"k3", "k4"});
    CHECK(count_latent(g) == 2);
    CHECK_THROWS_AS(mention_partition(g, LearnerId{5}), Error);
  }

  TEST_CASE("fully mentioned learner has no latent concepts") {
    Builder b;
    b.learners({"s1"}).concepts({"k1", "k2"}).item("q1", "k1").item("q2", "k2").know("s1", "k1").dont_know("s1", "k2");
    CHECK(mention_partition(b.build(), LearnerId{0}).latent.empty());
  }

  TEST_CASE("class-shaped fixture loads with its statistics") {
    auto g = HeteroGraph::build(fixtures::class_shaped_records());
    CHECK(g.num_learners() == 109);
    CHECK(g.num_concepts() == 211);
    CHECK(g.num_assessments() == 48);
    CHECK(g.prerequisites().size() == 226);
    CHECK(g.know_edges().size() == 6349);
    CHECK(count_latent(g) == 2187);
    for (std::uint32_t l = 0; l < g.num_learners(); ++l) {
      auto p = mention_partition(g, LearnerId{l});
      CHECK(p.known.size() + p.unknown.size() + p.latent.size() == g.assessed_concepts().size());
    }
  }

  TEST_CASE("save and load round-trip, fingerprint ignores record order") {
    auto g = chain().build();
    const auto path = temp_path("roundtrip.json");
    save_graph(g, path);
    auto h = load_graph(path);
    CHECK(h.fingerprint() == g.fingerprint());
    CHECK(graph_to_json(h) == graph_to_json(g));

    auto shuffled = chain().r;
    std::reverse(shuffled.learners.begin(), shuffled.learners.end());
    std::reverse(shuffled.concepts.begin(), shuffled.concepts.end());
    std::reverse(shuffled.perceptions.begin(), shuffled.perceptions.end());
    std::reverse(shuffled.responses.begin(), shuffled.responses.end());
    CHECK(HeteroGraph::build(shuffled).fingerprint() == g.fingerprint());

    auto changed = chain().r;
    changed.responses[0].correct = !changed.responses[0].correct;
    CHECK(HeteroGraph::build(changed).fingerprint() != g.fingerprint());
    std::filesystem::remove(path);
  }

  TEST_CASE("responses CSV is merged at load") {
    auto b = chain();
    b.r.responses.clear();
    const auto gpath = temp_path("noresp.json");
    const auto cpath = temp_path("resp.csv");
    save_graph(b.build(), gpath);
    {
      std::ofstream out(cpath);
      out << "learner,assessment,correct\ns1,q1,1\ns1,q2,0\ns2,q1,1\n";
    }
    auto g = load_graph(gpath, cpath);
    CHECK(g.num_responses() == 3);
    CHECK(g.fingerprint() == chain().build().fingerprint());
    std::filesystem::remove(gpath);
    std::filesystem::remove(cpath);
  }

  TEST_CASE("missing file is an I/O error, malformed JSON a parse error") {
    try {
      load_graph(temp_path("does_not_exist.json"));
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kIo);
    }
    const auto path = temp_path("bad.json");
    {
      std::ofstream out(path);
      out << "{\"learners\": [";
    }
    try {
      load_graph(path);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kParse);
    }
    std::filesystem::remove(path);
  }

  TEST_CASE("learner without responses is legal at load") {
    Builder b;
    b.learners({"s1", "s2"}).concepts({"A"}).item("q1", "A").response("s1", "q1", true);
    auto g = b.build();
    CHECK(g.responses(LearnerId{1}).empty());
  }
}
