#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "kmcoach/graph.hpp"
#include "kmcoach/pattern.hpp"

namespace kmc {

/// Self-perception behaviour of a simulated learner: P(perceive know | mastered)
/// and P(perceive dont-know | not mastered), plus the ability distribution.
struct Persona {
  double sensitivity = 0.9;
  double specificity = 0.9;
  double ability_alpha = 18.0;  // ability ~ Beta(alpha, beta)
  double ability_beta = 2.0;
};

struct SynthConfig {
  std::size_t n_learners = 100;
  std::size_t n_concepts = 50;
  std::size_t n_items = 40;
  int dag_layers = 5;
  double prereq_prob = 0.3;
  /// Largest layer distance an edge may span; 0 means unlimited.
  int max_layer_gap = 1;
  double mastery_base = 0.8;
  double mastery_penalty = 0.1;
  double slip = 0.1;
  double guess = 0.2;
  double mention_prob = 0.8;
  /// Also disclose perceptions of unassessed concepts (with mention_prob).
  bool mention_unassessed = true;
  std::array<double, 5> persona_mix{0.2, 0.2, 0.2, 0.2, 0.2};  // WC AL UC OC LC
  std::array<Persona, 5> personas = default_personas();
  std::uint64_t seed = 0;

  static std::array<Persona, 5> default_personas();
  /// Class-sized cohort: 150 learners, 211 concepts, 45 items.
  static SynthConfig paper_scale();

  /// Throws Error(kInvalidArgument) naming the offending field.
  void validate() const;
};

struct ConceptDag {
  std::vector<int> layer;  // per concept
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // (from, to), from in a lower layer
};

/// Concepts are spread evenly over dag_layers (concept i sits in layer
/// floor(i * layers / n)); every pair from a lower to a higher layer (at most
/// max_layer_gap apart when set) becomes an edge with probability prereq_prob.
ConceptDag gen_concept_dag(const SynthConfig& config, std::uint64_t seed);

struct LatentLabel {
  LearnerId learner;
  ConceptId concept_id;
  bool perceived_know = false;
};

struct GroundTruth {
  std::vector<std::vector<std::uint8_t>> true_mastery;    // [learner][concept]
  std::vector<std::vector<std::uint8_t>> true_perceived;  // [learner][concept], 1 = know
  std::vector<Pattern> persona;                           // [learner]
  std::vector<double> ability;                            // [learner]
  std::vector<LatentLabel> latent_labels;                 // sorted by (learner, concept)
};

struct SynthCohort {
  GraphRecords records;
  GroundTruth truth;
};

/// Deterministic in config.seed. The DAG and item set use a stream independent
/// of the learner streams, so cohorts that differ only in learner settings share
/// one curriculum.
SynthCohort gen_cohort(const SynthConfig& config);

nlohmann::json ground_truth_to_json(const GroundTruth& truth, const HeteroGraph& graph);
/// Reads a `latent_labels` sidecar against `graph`; unknown ids throw kParse.
std::vector<LatentLabel> read_latent_labels(const std::filesystem::path& path, const HeteroGraph& graph);
std::vector<LatentLabel> parse_latent_labels(const nlohmann::json& doc, const HeteroGraph& graph);

}  // namespace kmc
