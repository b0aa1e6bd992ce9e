#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kmcoach/autodiff.hpp"
#include "kmcoach/perception.hpp"

namespace kmc {

struct HgnnConfig {
  int embed_dim = 32;
  int layers = 2;
  double learning_rate = 0.01;
  int epochs = 30;
  double threshold = 0.5;
  double weight_decay = 3.0;  // decoupled: p *= 1 - lr * weight_decay after each step
  std::uint64_t seed = 0;

  /// Throws Error(kInvalidArgument) naming the offending field.
  void validate() const;
};

/// Node embedding model over a perception subgraph. Node rows are ordered
/// learners first, then concepts (row num_learners + k for concept k).
class EmbeddingModel {
 public:
  virtual ~EmbeddingModel() = default;

  virtual std::string method() const = 0;
  virtual std::vector<ad::Parameter*> parameters() = 0;
  std::vector<const ad::Parameter*> parameters() const;

  /// Fixes the message-passing structure used by encode().
  virtual void bind(const PerceptionSubgraph& structure) = 0;
  /// Final node embeddings, |V| x embed_dim.
  virtual ad::Var encode(ad::Tape& tape) = 0;

  std::size_t num_learners() const { return num_learners_; }
  std::size_t num_concepts() const { return num_concepts_; }
  int embed_dim() const { return embed_dim_; }

  void zero_grad();

 protected:
  std::size_t num_learners_ = 0;
  std::size_t num_concepts_ = 0;
  int embed_dim_ = 0;
};

/// Relations of the heterogeneous model. Every edge type is also traversed in
/// reverse so learners receive concept information and vice versa.
enum class Relation : int { kKnow = 0, kKnowReverse, kPrereq, kPrereqReverse, kSelf };
inline constexpr int kNumRelations = 5;
inline constexpr int kNumEdgeRelations = 4;
std::string to_string(Relation r);

/// Heterogeneous attention network:
///   z_r = h W_r;  e_uv = LeakyReLU_0.2(a_r,dst . z_r[v] + a_r,src . z_r[u])
///   alpha = softmax of e over N_r(v);  m_r(v) = sum_u alpha_uv z_r[u]
///   h'(v) = silu( mean_{r present at v} m_r(v) + h(v) W_self )
/// Attention parameters are stored as embed_dim x 2 (column 0 = dst half, 1 = src half).
class HgnnModel final : public EmbeddingModel {
 public:
  struct Layer {
    std::array<ad::Parameter, kNumRelations> weights;      // embed_dim x embed_dim
    std::array<ad::Parameter, kNumEdgeRelations> attention;  // embed_dim x 2
  };

  HgnnModel(const HgnnConfig& config, std::size_t num_learners, std::size_t num_concepts);

  std::string method() const override { return "HGNN"; }
  using EmbeddingModel::parameters;
  std::vector<ad::Parameter*> parameters() override;
  void bind(const PerceptionSubgraph& structure) override;
  ad::Var encode(ad::Tape& tape) override;

  ad::Parameter learner_embeddings;
  ad::Parameter concept_embeddings;
  std::vector<Layer> layers;

  /// Attention coefficients of relation r from the most recent encode() in the
  /// given layer, aligned with relation_src(r) / relation_dst(r).
  const std::vector<double>& last_attention(int layer, Relation r) const;
  const std::vector<int>& relation_src(Relation r) const { return topo_.src[static_cast<int>(r)]; }
  const std::vector<int>& relation_dst(Relation r) const { return topo_.dst[static_cast<int>(r)]; }

 private:
  struct Topology {
    std::array<std::vector<int>, kNumEdgeRelations> src;
    std::array<std::vector<int>, kNumEdgeRelations> dst;
    std::vector<double> inv_relation_count;  // per node, 0 when no relation has neighbors
  };
  Topology topo_;
  std::vector<std::array<std::vector<double>, kNumEdgeRelations>> attention_cache_;
};

/// Homogeneous graph convolution over the bipartite know-edge graph with
/// self-loops: H' = silu(D^-1/2 (A + I) D^-1/2 H W).
class GcnModel final : public EmbeddingModel {
 public:
  GcnModel(const HgnnConfig& config, std::size_t num_learners, std::size_t num_concepts);

  std::string method() const override { return "GCN"; }
  using EmbeddingModel::parameters;
  std::vector<ad::Parameter*> parameters() override;
  void bind(const PerceptionSubgraph& structure) override;
  ad::Var encode(ad::Tape& tape) override;

  ad::Parameter embeddings;  // |V| x embed_dim
  std::vector<ad::Parameter> weights;

 private:
  std::vector<int> src_;
  std::vector<int> dst_;
  std::vector<double> norm_;
};

/// Single-head graph attention over the bipartite know-edge graph with self-loops.
class GatModel final : public EmbeddingModel {
 public:
  GatModel(const HgnnConfig& config, std::size_t num_learners, std::size_t num_concepts);

  std::string method() const override { return "GAT"; }
  using EmbeddingModel::parameters;
  std::vector<ad::Parameter*> parameters() override;
  void bind(const PerceptionSubgraph& structure) override;
  ad::Var encode(ad::Tape& tape) override;

  /// Attention coefficients of the last encode() for a layer, aligned with edge_src() / edge_dst().
  const std::vector<double>& last_attention(int layer) const { return attention_cache_.at(static_cast<std::size_t>(layer)); }
  const std::vector<int>& edge_src() const { return src_; }
  const std::vector<int>& edge_dst() const { return dst_; }

  ad::Parameter embeddings;
  std::vector<ad::Parameter> weights;
  std::vector<ad::Parameter> attention;  // embed_dim x 2

 private:
  std::vector<int> src_;
  std::vector<int> dst_;
  std::vector<std::vector<double>> attention_cache_;
};

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
ad::Matrix glorot_uniform(Eigen::Index rows, Eigen::Index cols, double fan_in, double fan_out, Rng& rng);

}  // namespace kmc
