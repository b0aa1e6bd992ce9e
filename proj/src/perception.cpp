#include "kmcoach/perception.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "kmcoach/error.hpp"

namespace kmc {

PerceptionSubgraph build_perception_subgraph(const HeteroGraph& graph) {
  PerceptionSubgraph sub;
  sub.num_learners = graph.num_learners();
  sub.num_concepts = graph.num_concepts();
  sub.know_edges.assign(graph.know_edges().begin(), graph.know_edges().end());
  sub.prereq_edges.assign(graph.prerequisites().begin(), graph.prerequisites().end());
  return sub;
}

EdgeSplit split_edges(const PerceptionSubgraph& subgraph, const HeteroGraph& graph, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0))
    fail(ErrorKind::kInvalidArgument, "invalid_ratio", "split ratio must lie in (0, 1)");
  if (subgraph.know_edges.empty())
    fail(ErrorKind::kDomain, "no_know_edges", "cannot split a perception subgraph without know edges");

  auto rng = Rng::derive(seed, "split");
  std::vector<LearnerConcept> edges = subgraph.know_edges;
  std::sort(edges.begin(), edges.end());
  rng.shuffle(edges);
  const auto n_test = static_cast<std::size_t>(std::llround((1.0 - ratio) * static_cast<double>(edges.size())));

  EdgeSplit split;
  split.seed = seed;
  split.ratio = ratio;
  split.test_pos.assign(edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(n_test));
  split.train_pos.assign(edges.begin() + static_cast<std::ptrdiff_t>(n_test), edges.end());
  std::sort(split.train_pos.begin(), split.train_pos.end());
  split.test_neg = rng.sample(graph.dontknow_edges(), n_test);
  return split;
}

PerceptionSubgraph training_subgraph(const PerceptionSubgraph& subgraph, const EdgeSplit& split) {
  PerceptionSubgraph sub = subgraph;
  sub.know_edges = split.train_pos;
  return sub;
}

namespace {

nlohmann::json pairs_to_json(std::span<const LearnerConcept> pairs, const HeteroGraph& graph) {
  auto arr = nlohmann::json::array();
  for (auto [l, k] : pairs) arr.push_back({graph.learner_id(l), graph.concept_id(k)});
  return arr;
}

std::vector<LearnerConcept> pairs_from_json(const nlohmann::json& arr, const HeteroGraph& graph) {
  std::vector<LearnerConcept> out;
  if (!arr.is_array()) fail(ErrorKind::kParse, "parse_error", "split manifest: expected array of pairs");
  for (const auto& p : arr) {
    if (!p.is_array() || p.size() != 2) fail(ErrorKind::kParse, "parse_error", "split manifest: malformed pair");
    auto l = graph.find_learner(p[0].get<std::string>());
    auto k = graph.find_concept(p[1].get<std::string>());
    if (!l || !k) fail(ErrorKind::kDomain, "dangling_endpoint", "split manifest references unknown ids");
    out.emplace_back(*l, *k);
  }
  return out;
}

}  // namespace

nlohmann::json split_to_json(const EdgeSplit& split, const HeteroGraph& graph) {
  return {{"seed", split.seed},
          {"ratio", split.ratio},
          {"train_pos", pairs_to_json(split.train_pos, graph)},
          {"test_pos", pairs_to_json(split.test_pos, graph)},
          {"test_neg", pairs_to_json(split.test_neg, graph)}};
}

EdgeSplit split_from_json(const nlohmann::json& doc, const HeteroGraph& graph) {
  try {
    EdgeSplit split;
    split.seed = doc.at("seed").get<std::uint64_t>();
    split.ratio = doc.at("ratio").get<double>();
    split.train_pos = pairs_from_json(doc.at("train_pos"), graph);
    split.test_pos = pairs_from_json(doc.at("test_pos"), graph);
    split.test_neg = pairs_from_json(doc.at("test_neg"), graph);
    return split;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, "parse_error", std::string("split manifest: ") + e.what());
  }
}

NegativePools negative_pools(const HeteroGraph& graph, LearnerId learner, std::span<const LearnerConcept> held_out) {
  NegativePools pools;
  std::set<ConceptId> excluded;
  for (auto [l, k] : held_out)
    if (l == learner) excluded.insert(k);
  for (auto k : graph.dont_know(learner))
    if (!excluded.contains(k)) pools.explicit_pool.push_back(k);
  for (auto k : graph.assessed_concepts())
    if (!graph.perception(learner, k)) pools.implicit_pool.push_back(k);
  return pools;
}

std::size_t implicit_quota(std::size_t n_e, double rho) {
  return static_cast<std::size_t>(std::floor(rho * static_cast<double>(n_e)));
}

NegativeBatch eins_sample(const NegativePools& pools, LearnerId learner, std::size_t n_e, double rho, Rng& rng) {
  if (n_e < 1) fail(ErrorKind::kInvalidArgument, "invalid_n_e", "n_e must be at least 1");
  if (!(rho >= 0.0)) fail(ErrorKind::kInvalidArgument, "invalid_rho", "rho must be non-negative");
  if (pools.explicit_pool.empty() && pools.implicit_pool.empty())
    fail(ErrorKind::kDomain, "no_negatives_available", "learner has neither explicit nor implicit negatives");
  NegativeBatch batch;
  batch.learner = learner;
  batch.n_e = n_e;
  batch.rho = rho;
  batch.explicit_negs = rng.sample(std::span<const ConceptId>(pools.explicit_pool), n_e);
  batch.implicit_negs = rng.sample(std::span<const ConceptId>(pools.implicit_pool), implicit_quota(n_e, rho));
  return batch;
}

NegativeBatch eins_sample(const HeteroGraph& graph, LearnerId learner, std::size_t n_e, double rho, std::uint64_t seed) {
  if (learner.value >= graph.num_learners())
    fail(ErrorKind::kInvalidArgument, "unknown_learner", "learner index out of range");
  auto rng = Rng::derive(seed, "eins", learner.value);
  return eins_sample(negative_pools(graph, learner), learner, n_e, rho, rng);
}

NegativeBatch uniform_unmentioned_sample(const NegativePools& pools, LearnerId learner, std::size_t count, Rng& rng) {
  NegativeBatch batch;
  batch.learner = learner;
  batch.n_e = 0;
  batch.implicit_negs = rng.sample(std::span<const ConceptId>(pools.implicit_pool), count);
  return batch;
}

}  // namespace kmc
