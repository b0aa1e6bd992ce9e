#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "kmcoach/autodiff.hpp"
#include "kmcoach/graph.hpp"

namespace kmc {

enum class Method { kRG, kGCN, kGAT, kLP, kHGNN, kHGNNNoEins };

std::string to_string(Method m);
Method method_from_string(const std::string& name);

/// Probability that a learner perceives a concept as known. Implementations
/// are immutable once built and safe to share across threads.
class LinkScorer {
 public:
  virtual ~LinkScorer() = default;
  virtual Method method() const = 0;
  virtual double score(LearnerId learner, ConceptId concept_id) const = 0;
};

/// sigmoid(<h_s, h_k>) over frozen final embeddings (learners first, then concepts).
class EmbeddingScorer final : public LinkScorer {
 public:
  EmbeddingScorer(Method method, ad::Matrix embeddings, std::size_t num_learners)
      : method_(method), embeddings_(std::move(embeddings)), num_learners_(num_learners) {}

  Method method() const override { return method_; }
  double score(LearnerId learner, ConceptId concept_id) const override;
  const ad::Matrix& embeddings() const { return embeddings_; }

 private:
  Method method_;
  ad::Matrix embeddings_;
  std::size_t num_learners_;
};

struct InferredStates {
  std::vector<ConceptId> know;       // K̂+
  std::vector<ConceptId> dont_know;  // K̂-
};

/// Thresholds the scores of every learner's latent concepts: score >= theta is know.
std::map<LearnerId, InferredStates> infer_lps(const LinkScorer& scorer, const HeteroGraph& graph, double theta);

}  // namespace kmc
