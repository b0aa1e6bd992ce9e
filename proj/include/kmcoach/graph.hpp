#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"

namespace kmc {

enum class NodeKind : std::uint8_t { kLearner, kConcept, kAssessment };

/// Dense per-kind index. Distinct tags keep learner, concept and assessment
/// indices from being mixed up.
template <class Tag>
struct Index {
  std::uint32_t value = 0;
  friend auto operator<=>(Index, Index) = default;
};

using LearnerId = Index<struct LearnerTag>;
using ConceptId = Index<struct ConceptTag>;
using AssessmentId = Index<struct AssessmentTag>;

struct NodeId {
  NodeKind kind = NodeKind::kLearner;
  std::uint32_t index = 0;
  friend auto operator<=>(NodeId, NodeId) = default;
};

enum class PerceivedState : std::uint8_t { kKnow, kDontKnow };

using LearnerConcept = std::pair<LearnerId, ConceptId>;

// Raw records as they appear in a graph file. May violate invariants.
struct ConceptRecord {
  std::string id;
  std::string label;
};

struct AssessmentRecord {
  std::string id;
  std::string label;
  std::string concept_id;
};

struct PerceptionRecord {
  std::string learner;
  std::string concept_id;
  PerceivedState state = PerceivedState::kKnow;
};

struct ResponseRecord {
  std::string learner;
  std::string assessment;
  bool correct = false;
};

struct GraphRecords {
  std::vector<std::string> learners;
  std::vector<ConceptRecord> concepts;
  std::vector<AssessmentRecord> assessments;
  std::vector<std::pair<std::string, std::string>> prerequisites;
  std::vector<PerceptionRecord> perceptions;
  std::vector<ResponseRecord> responses;
};

struct Diagnostic {
  std::string code;  // cycle, duplicate_item_mapping, dangling_endpoint, ...
  std::vector<std::string> ids;
  std::string message;
};

/// Returns an empty list iff the records form a valid heterogeneous graph.
std::vector<Diagnostic> validate(const GraphRecords& records);

struct Response {
  AssessmentId item;
  bool correct = false;
};

/// Validated, immutable learner/concept/assessment graph. Internal ids are
/// dense and assigned in record order.
class HeteroGraph {
 public:
  /// Throws Error(kValidation) whose tag is the first diagnostic code.
  static HeteroGraph build(const GraphRecords& records);

  std::size_t num_learners() const { return learner_ids_.size(); }
  std::size_t num_concepts() const { return concept_ids_.size(); }
  std::size_t num_assessments() const { return item_concept_.size(); }

  const std::string& learner_id(LearnerId l) const { return learner_ids_[l.value]; }
  const std::string& concept_id(ConceptId k) const { return concept_ids_[k.value]; }
  const std::string& concept_label(ConceptId k) const { return concept_labels_[k.value]; }
  const std::string& assessment_id(AssessmentId q) const { return item_ids_[q.value]; }
  const std::string& assessment_label(AssessmentId q) const { return item_labels_[q.value]; }

  std::optional<LearnerId> find_learner(const std::string& id) const;
  std::optional<ConceptId> find_concept(const std::string& id) const;
  std::optional<AssessmentId> find_assessment(const std::string& id) const;

  /// M(q): the concept an item primarily assesses.
  ConceptId item_concept(AssessmentId q) const { return item_concept_[q.value]; }

  /// Sorted (from, to) pairs; from is a prerequisite of to.
  std::span<const std::pair<ConceptId, ConceptId>> prerequisites() const { return prereqs_; }
  std::span<const ConceptId> parents(ConceptId k) const { return parents_[k.value]; }
  std::span<const ConceptId> children(ConceptId k) const { return children_[k.value]; }
  /// Concepts in a topological order of the prerequisite DAG (smallest id first among ties).
  std::span<const ConceptId> topological_order() const { return topo_; }
  /// Longest prerequisite chain ending at k (roots have depth 0).
  int depth(ConceptId k) const { return depth_[k.value]; }

  /// Sorted learner-concept pairs.
  std::span<const LearnerConcept> know_edges() const { return know_edges_; }
  std::span<const LearnerConcept> dontknow_edges() const { return dontknow_edges_; }
  std::span<const ConceptId> known(LearnerId l) const { return known_[l.value]; }
  std::span<const ConceptId> dont_know(LearnerId l) const { return dont_know_[l.value]; }
  std::optional<PerceivedState> perception(LearnerId l, ConceptId k) const;

  /// Responses of a learner, sorted by item.
  std::span<const Response> responses(LearnerId l) const { return responses_[l.value]; }
  std::size_t num_responses() const;

  /// K_Q, sorted.
  std::span<const ConceptId> assessed_concepts() const { return assessed_; }
  bool is_assessed(ConceptId k) const { return assessed_mask_[k.value] != 0; }

  /// Content hash over the canonical (id-sorted) form; stable under record reordering.
  std::string fingerprint() const;

  GraphRecords to_records() const;

 private:
  std::vector<std::string> learner_ids_;
  std::vector<std::string> concept_ids_;
  std::vector<std::string> concept_labels_;
  std::vector<std::string> item_ids_;
  std::vector<std::string> item_labels_;
  std::vector<ConceptId> item_concept_;
  std::unordered_map<std::string, std::uint32_t> learner_index_;
  std::unordered_map<std::string, std::uint32_t> concept_index_;
  std::unordered_map<std::string, std::uint32_t> item_index_;

  std::vector<std::pair<ConceptId, ConceptId>> prereqs_;
  std::vector<std::vector<ConceptId>> parents_;
  std::vector<std::vector<ConceptId>> children_;
  std::vector<ConceptId> topo_;
  std::vector<int> depth_;

  std::vector<LearnerConcept> know_edges_;
  std::vector<LearnerConcept> dontknow_edges_;
  std::vector<std::vector<ConceptId>> known_;
  std::vector<std::vector<ConceptId>> dont_know_;
  std::vector<std::vector<Response>> responses_;

  std::vector<ConceptId> assessed_;
  std::vector<std::uint8_t> assessed_mask_;
};

struct MentionPartition {
  std::vector<ConceptId> known;    // K+ ∩ K_Q
  std::vector<ConceptId> unknown;  // K- ∩ K_Q
  std::vector<ConceptId> latent;   // K_Q \ (K+ ∪ K-)
};

/// Throws Error(kInvalidArgument, "unknown_learner") for an out-of-range id.
MentionPartition mention_partition(const HeteroGraph& graph, LearnerId learner);

/// Sum over learners of |latent|.
std::size_t count_latent(const HeteroGraph& graph);

// Graph file I/O (JSON). Parse errors throw kParse, missing files kIo.
GraphRecords parse_graph_json(const nlohmann::json& doc);
GraphRecords read_graph_records(const std::filesystem::path& path);
/// Appends rows of a `learner,assessment,correct` CSV (header optional).
void merge_responses_csv(GraphRecords& records, const std::filesystem::path& path);
HeteroGraph load_graph(const std::filesystem::path& path,
                       const std::optional<std::filesystem::path>& responses_csv = std::nullopt);
nlohmann::json graph_to_json(const HeteroGraph& graph);
void save_graph(const HeteroGraph& graph, const std::filesystem::path& path);

std::string to_string(PerceivedState s);

}  // namespace kmc

template <class Tag>
struct std::hash<kmc::Index<Tag>> {
  std::size_t operator()(kmc::Index<Tag> i) const noexcept { return std::hash<std::uint32_t>{}(i.value); }
};
