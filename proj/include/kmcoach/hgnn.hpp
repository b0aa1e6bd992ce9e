#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "kmcoach/encoders.hpp"
#include "kmcoach/scorer.hpp"

namespace kmc {

inline constexpr double kProbabilityEps = 1e-7;

/// sigmoid(<h_s, h_k>). Throws "dimension_mismatch" on unequal lengths.
double score(std::span<const double> h_s, std::span<const double> h_k);

/// Mean binary cross-entropy with probabilities clamped to [1e-7, 1 - 1e-7].
double bce_loss(std::span<const double> preds, std::span<const int> labels);

struct EpochStats {
  double loss = 0.0;
  double train_auc = 0.5;
  std::int64_t wall_ms = 0;
};

using TrainHistory = std::vector<EpochStats>;

enum class NegativeStrategy {
  kEins,                // explicit dont-know first, implicit extras
  kUniformUnmentioned,  // ablation: unmentioned assessed concepts only
};

struct TrainOptions {
  HgnnConfig config;
  NegativeStrategy strategy = NegativeStrategy::kEins;
  /// Explicit negatives per learner; unset means the cohort mean size of the
  /// explicit dont-know pool (rounded, at least 1), shared by every learner.
  std::optional<std::size_t> n_e;
  double rho = 0.5;
  /// Called after every epoch's update, e.g. for progress reporting.
  std::function<void(int epoch, const EpochStats&)> on_epoch;
};

/// One learner-concept pair with its target label for a loss evaluation.
struct LabeledPair {
  LearnerId learner;
  ConceptId concept_id;
  double label = 0.0;
};

/// Builds the structure from model.bind()'s subgraph, scores the pairs and
/// returns the mean BCE. With `with_grad`, parameter grads are overwritten
/// with d(loss)/d(param).
double objective(EmbeddingModel& model, std::span<const LabeledPair> pairs, bool with_grad);

/// Positives of the split plus one sampled NegativeBatch per learner, sorted.
std::vector<LabeledPair> training_batch(const HeteroGraph& graph, const EdgeSplit& split, const TrainOptions& options,
                                        Rng& rng);

/// Full-batch training with Adam (0.9 / 0.999 / 1e-8). The model is bound to
/// the split's training subgraph on return.
TrainHistory train(EmbeddingModel& model, const HeteroGraph& graph, const EdgeSplit& split, const TrainOptions& options);

/// Final embeddings for the currently bound structure.
ad::Matrix embeddings(EmbeddingModel& model);

/// Binds `subgraph` and returns the final embeddings.
ad::Matrix forward(EmbeddingModel& model, const PerceptionSubgraph& subgraph);

/// A split that trains on every know edge and holds nothing out.
EdgeSplit full_training_split(const PerceptionSubgraph& subgraph);

std::unique_ptr<EmbeddingScorer> make_scorer(EmbeddingModel& model, Method method);

// Checkpoints: JSON container with format tag, version, config, the trained
// graph's fingerprint and row-major float64 parameter tensors.
struct Checkpoint {
  HgnnConfig config;
  std::string fingerprint;
  std::size_t num_learners = 0;
  std::size_t num_concepts = 0;
  std::vector<ad::Parameter> parameters;
};

void save_checkpoint(const HgnnModel& model, const HgnnConfig& config, const HeteroGraph& graph,
                     const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);
/// Restores a model and verifies the checkpoint was trained on `graph`
/// (Error kFingerprint otherwise). The model is bound to graph's perception subgraph.
std::unique_ptr<HgnnModel> load_checkpoint(const std::filesystem::path& path, const HeteroGraph& graph);

}  // namespace kmc
