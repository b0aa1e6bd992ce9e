#pragma once

#include <cstdint>
#include <memory>

#include "kmcoach/hgnn.hpp"

namespace kmc {

/// Uniform [0,1) scores keyed by (seed, learner, concept); repeated queries agree.
class RandomScorer final : public LinkScorer {
 public:
  explicit RandomScorer(std::uint64_t seed) : seed_(seed) {}
  Method method() const override { return Method::kRG; }
  double score(LearnerId learner, ConceptId concept_id) const override;

 private:
  std::uint64_t seed_;
};

std::unique_ptr<RandomScorer> rg_score(std::uint64_t seed);

/// GCN / GAT over know edges only, trained with the same loss, optimizer and
/// negative sampler as the HGNN. `history` receives the per-epoch stats if set.
std::unique_ptr<EmbeddingScorer> gcn_train(const HeteroGraph& graph, const EdgeSplit& split, const TrainOptions& options,
                                           TrainHistory* history = nullptr);
std::unique_ptr<EmbeddingScorer> gat_train(const HeteroGraph& graph, const EdgeSplit& split, const TrainOptions& options,
                                           TrainHistory* history = nullptr);
std::unique_ptr<EmbeddingScorer> hgnn_train(const HeteroGraph& graph, const EdgeSplit& split, const TrainOptions& options,
                                            TrainHistory* history = nullptr);

struct LpConfig {
  int iterations = 1000;
  double damping = 0.9;
  double tolerance = 1e-9;
};

struct LpReport {
  bool converged = false;
  int sweeps = 0;          // largest sweep count over learners
  double max_delta = 0.0;  // largest final per-sweep change over learners
};

/// Per-learner propagation over undirected prerequisite neighbours. Train
/// positives are clamped at 1, explicit dont-know concepts (minus the split's
/// test negatives) at 0, everything else starts at 0.5 and is updated as
///   s(k) <- damping * mean_{j in N(k)} s(j) + (1 - damping) * 0.5.
/// Concepts without neighbours keep their initial value.
class LabelPropagationScorer final : public LinkScorer {
 public:
  LabelPropagationScorer(Eigen::MatrixXd scores, LpReport report) : scores_(std::move(scores)), report_(report) {}
  Method method() const override { return Method::kLP; }
  double score(LearnerId learner, ConceptId concept_id) const override {
    return scores_(learner.value, concept_id.value);
  }
  const LpReport& report() const { return report_; }

 private:
  Eigen::MatrixXd scores_;  // learners x concepts
  LpReport report_;
};

/// Throws Error(kInvalidArgument) for iterations < 1 or damping outside (0, 1).
std::unique_ptr<LabelPropagationScorer> label_propagation(const HeteroGraph& graph, const EdgeSplit& split,
                                                          const LpConfig& config = {});

}  // namespace kmc
