#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "kmcoach/graph.hpp"
#include "kmcoach/rng.hpp"

namespace kmc {

/// Learner and concept nodes joined by know-edges and prerequisite edges.
/// Dont-know perceptions are deliberately absent.
struct PerceptionSubgraph {
  std::size_t num_learners = 0;
  std::size_t num_concepts = 0;
  std::vector<LearnerConcept> know_edges;  // sorted
  std::vector<std::pair<ConceptId, ConceptId>> prereq_edges;
};

PerceptionSubgraph build_perception_subgraph(const HeteroGraph& graph);

struct EdgeSplit {
  std::vector<LearnerConcept> train_pos;  // sorted
  std::vector<LearnerConcept> test_pos;   // in draw order
  std::vector<LearnerConcept> test_neg;   // explicit dont-know pairs, in draw order
  std::uint64_t seed = 0;
  double ratio = 0.8;
};

/// Holds out round((1 - ratio) * |know|) know-edges and an equally sized (capped)
/// uniform subset of the explicit dont-know edges. Deterministic in seed.
EdgeSplit split_edges(const PerceptionSubgraph& subgraph, const HeteroGraph& graph, double ratio, std::uint64_t seed);

/// The subgraph restricted to the split's training positives.
PerceptionSubgraph training_subgraph(const PerceptionSubgraph& subgraph, const EdgeSplit& split);

nlohmann::json split_to_json(const EdgeSplit& split, const HeteroGraph& graph);
EdgeSplit split_from_json(const nlohmann::json& doc, const HeteroGraph& graph);

struct NegativeBatch {
  LearnerId learner;
  std::vector<ConceptId> explicit_negs;
  std::vector<ConceptId> implicit_negs;
  std::size_t n_e = 0;
  double rho = 0.0;

  std::size_t size() const { return explicit_negs.size() + implicit_negs.size(); }
};

/// Per-learner candidate pools for negative sampling.
struct NegativePools {
  std::vector<ConceptId> explicit_pool;  // K- minus held-out test negatives
  std::vector<ConceptId> implicit_pool;  // K_Q \ (K+ ∪ K-)
};

/// `held_out` dont-know pairs (a split's test_neg) are removed from the explicit pool.
NegativePools negative_pools(const HeteroGraph& graph, LearnerId learner,
                             std::span<const LearnerConcept> held_out = {});

/// Explicit-informed negative sampling: min(n_e, |explicit|) explicit negatives
/// plus min(floor(rho * n_e), |implicit|) implicit ones, each drawn uniformly
/// without replacement. Throws "no_negatives_available" when both pools are empty.
NegativeBatch eins_sample(const NegativePools& pools, LearnerId learner, std::size_t n_e, double rho, Rng& rng);
NegativeBatch eins_sample(const HeteroGraph& graph, LearnerId learner, std::size_t n_e, double rho, std::uint64_t seed);

/// Ablation sampler: `count` negatives drawn uniformly from the implicit pool only.
NegativeBatch uniform_unmentioned_sample(const NegativePools& pools, LearnerId learner, std::size_t count, Rng& rng);

/// Implicit negatives requested per learner: floor(rho * n_e).
std::size_t implicit_quota(std::size_t n_e, double rho);

}  // namespace kmc
