#pragma once

#include <string>
#include <vector>

#include "kmcoach/graph.hpp"

namespace fixtures {

// Small hand-written graph builder.
struct Builder {
  kmc::GraphRecords r;

  Builder& learners(std::initializer_list<std::string> ids) {
    for (const auto& id : ids) r.learners.push_back(id);
    return *this;
  }
  Builder& concepts(std::initializer_list<std::string> ids) {
    for (const auto& id : ids) r.concepts.push_back({id, "Concept " + id});
    return *this;
  }
  Builder& item(const std::string& id, const std::string& concept_id) {
    r.assessments.push_back({id, "Item " + id, concept_id});
    return *this;
  }
  Builder& prereq(const std::string& from, const std::string& to) {
    r.prerequisites.emplace_back(from, to);
    return *this;
  }
  Builder& know(const std::string& l, const std::string& k) {
    r.perceptions.push_back({l, k, kmc::PerceivedState::kKnow});
    return *this;
  }
  Builder& dont_know(const std::string& l, const std::string& k) {
    r.perceptions.push_back({l, k, kmc::PerceivedState::kDontKnow});
    return *this;
  }
  Builder& response(const std::string& l, const std::string& q, bool correct) {
    r.responses.push_back({l, q, correct});
    return *this;
  }
  kmc::HeteroGraph build() const { return kmc::HeteroGraph::build(r); }
};

// Records shaped like a real class: 109 learners, 211 concepts, 48 items,
// 226 prerequisite edges, 6349 know edges and 2187 latent pairs.
inline kmc::GraphRecords class_shaped_records() {
  kmc::GraphRecords r;
  const int nl = 109, nk = 211, nq = 48;
  for (int i = 0; i < nl; ++i) r.learners.push_back("s" + std::to_string(i));
  for (int k = 0; k < nk; ++k) r.concepts.push_back({"k" + std::to_string(k), "concept " + std::to_string(k)});
  for (int q = 0; q < nq; ++q) r.assessments.push_back({"q" + std::to_string(q), "item", "k" + std::to_string(q)});
  // 226 forward edges i -> j (i < j) are acyclic by construction.
  int edges = 0;
  for (int gap = 1; edges < 226; ++gap)
    for (int i = 0; i + gap < nk && edges < 226; i += 3, ++edges)
      r.prerequisites.emplace_back("k" + std::to_string(i), "k" + std::to_string(i + gap));
  // Assessed concepts are k0..k47. 2187 latent pairs = 109 * 48 - 3045 mentioned assessed pairs.
  const int latent_total = 2187;
  const int mentioned_assessed = nl * nq - latent_total;
  int mentioned = 0, know = 0;
  for (int i = 0; i < nl; ++i)
    for (int q = 0; q < nq; ++q)
      if (mentioned < mentioned_assessed && (i * nq + q) % 12 < 4) {
        r.perceptions.push_back({r.learners[i], "k" + std::to_string(q), kmc::PerceivedState::kKnow});
        ++mentioned;
        ++know;
      }
  for (int i = 0; i < nl && mentioned < mentioned_assessed; ++i)
    for (int q = 0; q < nq && mentioned < mentioned_assessed; ++q)
      if ((i * nq + q) % 12 >= 4) {
        r.perceptions.push_back({r.learners[i], "k" + std::to_string(q), kmc::PerceivedState::kDontKnow});
        ++mentioned;
      }
  // Remaining know edges go to unassessed concepts.
  for (int i = 0; i < nl && know < 6349; ++i)
    for (int k = nq; k < nk && know < 6349; ++k)
      if ((i + k) % 3 != 0) {
        r.perceptions.push_back({r.learners[i], "k" + std::to_string(k), kmc::PerceivedState::kKnow});
        ++know;
      }
  for (int i = 0; i < nl; ++i)
    for (int q = 0; q < nq; ++q) r.responses.push_back({r.learners[i], "q" + std::to_string(q), (i + q) % 2 == 0});
  return r;
}

}  // namespace fixtures
