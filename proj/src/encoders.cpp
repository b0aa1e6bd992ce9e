#include "kmcoach/encoders.hpp"

#include <cmath>

#include "kmcoach/error.hpp"

namespace kmc {

void HgnnConfig::validate() const {
  auto bad = [](const std::string& field, const std::string& why) {
    fail(ErrorKind::kInvalidArgument, "invalid_config", "config." + field + " " + why);
  };
  if (embed_dim <= 0) bad("embed_dim", "must be positive");
  if (layers <= 0) bad("layers", "must be positive");
  if (!(learning_rate >= 0.0)) bad("learning_rate", "must be non-negative");
  if (epochs <= 0) bad("epochs", "must be positive");
  if (!(threshold > 0.0 && threshold <= 1.0)) bad("threshold", "must lie in (0, 1]");
  if (!(weight_decay >= 0.0)) bad("weight_decay", "must be non-negative");
}

std::string to_string(Relation r) {
  switch (r) {
    case Relation::kKnow: return "know";
    case Relation::kKnowReverse: return "know_rev";
    case Relation::kPrereq: return "prereq";
    case Relation::kPrereqReverse: return "prereq_rev";
    case Relation::kSelf: return "self";
  }
  return "?";
}

std::vector<const ad::Parameter*> EmbeddingModel::parameters() const {
  auto params = const_cast<EmbeddingModel*>(this)->parameters();
  return {params.begin(), params.end()};
}

void EmbeddingModel::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

ad::Matrix glorot_uniform(Eigen::Index rows, Eigen::Index cols, double fan_in, double fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  ad::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = (2.0 * rng.uniform() - 1.0) * bound;
  return m;
}

namespace {

void check_sizes(const EmbeddingModel& m, const PerceptionSubgraph& s) {
  if (s.num_learners != m.num_learners() || s.num_concepts != m.num_concepts())
    fail(ErrorKind::kInvalidArgument, "shape_mismatch", "model was built for a graph of a different size");
}

// Bipartite know-graph, both directions, plus one self-loop per node.
void bipartite_with_self_loops(const PerceptionSubgraph& s, std::vector<int>& src, std::vector<int>& dst) {
  const int nl = static_cast<int>(s.num_learners);
  const int n = nl + static_cast<int>(s.num_concepts);
  src.clear();
  dst.clear();
  for (auto [l, k] : s.know_edges) {
    src.push_back(static_cast<int>(l.value));
    dst.push_back(nl + static_cast<int>(k.value));
    src.push_back(nl + static_cast<int>(k.value));
    dst.push_back(static_cast<int>(l.value));
  }
  for (int v = 0; v < n; ++v) {
    src.push_back(v);
    dst.push_back(v);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// HGNN

HgnnModel::HgnnModel(const HgnnConfig& config, std::size_t num_learners, std::size_t num_concepts) {
  config.validate();
  num_learners_ = num_learners;
  num_concepts_ = num_concepts;
  embed_dim_ = config.embed_dim;
  const auto d = static_cast<Eigen::Index>(config.embed_dim);
  auto rng = Rng::derive(config.seed, "init/hgnn");
  learner_embeddings = ad::Parameter("learner_embeddings",
                                     glorot_uniform(static_cast<Eigen::Index>(num_learners), d,
                                                    static_cast<double>(num_learners), static_cast<double>(d), rng));
  concept_embeddings = ad::Parameter("concept_embeddings",
                                     glorot_uniform(static_cast<Eigen::Index>(num_concepts), d,
                                                    static_cast<double>(num_concepts), static_cast<double>(d), rng));
  layers.resize(static_cast<std::size_t>(config.layers));
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string prefix = "layer" + std::to_string(l) + ".";
    for (int r = 0; r < kNumRelations; ++r)
      layers[l].weights[r] = ad::Parameter(prefix + "W." + to_string(static_cast<Relation>(r)),
                                           glorot_uniform(d, d, static_cast<double>(d), static_cast<double>(d), rng));
    for (int r = 0; r < kNumEdgeRelations; ++r)
      layers[l].attention[r] = ad::Parameter(prefix + "a." + to_string(static_cast<Relation>(r)),
                                             glorot_uniform(d, 2, 2.0 * static_cast<double>(d), 1.0, rng));
  }
}

std::vector<ad::Parameter*> HgnnModel::parameters() {
  std::vector<ad::Parameter*> out{&learner_embeddings, &concept_embeddings};
  for (auto& layer : layers) {
    for (auto& w : layer.weights) out.push_back(&w);
    for (auto& a : layer.attention) out.push_back(&a);
  }
  return out;
}

void HgnnModel::bind(const PerceptionSubgraph& s) {
  check_sizes(*this, s);
  const int nl = static_cast<int>(s.num_learners);
  const std::size_t n = s.num_learners + s.num_concepts;
  Topology t;
  auto add = [&t](Relation r, int u, int v) {
    t.src[static_cast<int>(r)].push_back(u);
    t.dst[static_cast<int>(r)].push_back(v);
  };
  for (auto [l, k] : s.know_edges) {
    add(Relation::kKnow, static_cast<int>(l.value), nl + static_cast<int>(k.value));
    add(Relation::kKnowReverse, nl + static_cast<int>(k.value), static_cast<int>(l.value));
  }
  for (auto [from, to] : s.prereq_edges) {
    add(Relation::kPrereq, nl + static_cast<int>(from.value), nl + static_cast<int>(to.value));
    add(Relation::kPrereqReverse, nl + static_cast<int>(to.value), nl + static_cast<int>(from.value));
  }
  std::vector<std::array<bool, kNumEdgeRelations>> present(n);
  for (auto& p : present) p.fill(false);
  for (int r = 0; r < kNumEdgeRelations; ++r)
    for (int v : t.dst[r]) present[static_cast<std::size_t>(v)][r] = true;
  t.inv_relation_count.assign(n, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    int c = 0;
    for (bool b : present[v]) c += b ? 1 : 0;
    t.inv_relation_count[v] = c ? 1.0 / c : 0.0;
  }
  topo_ = std::move(t);
}

ad::Var HgnnModel::encode(ad::Tape& tape) {
  if (topo_.inv_relation_count.size() != num_learners_ + num_concepts_)
    fail(ErrorKind::kInvalidArgument, "unbound_model", "bind() must be called before encode()");
  const int n = static_cast<int>(num_learners_ + num_concepts_);
  attention_cache_.assign(layers.size(), {});
  ad::Var h = tape.concat_rows(tape.parameter(learner_embeddings), tape.parameter(concept_embeddings));
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& layer = layers[l];
    ad::Var self = tape.matmul(h, tape.parameter(layer.weights[static_cast<int>(Relation::kSelf)]));
    std::optional<ad::Var> agg;
    for (int r = 0; r < kNumEdgeRelations; ++r) {
      const auto& src = topo_.src[r];
      const auto& dst = topo_.dst[r];
      if (src.empty()) continue;
      ad::Var z = tape.matmul(h, tape.parameter(layer.weights[r]));
      ad::Var s = tape.matmul(z, tape.parameter(layer.attention[r]));
      ad::Var e = tape.add(tape.gather_entries(s, dst, 0), tape.gather_entries(s, src, 1));
      ad::Var alpha = tape.segment_softmax(tape.leaky_relu(e, 0.2), dst, n);
      const auto& av = tape.value(alpha);
      attention_cache_[l][r].assign(av.data(), av.data() + av.size());
      ad::Var msg = tape.scatter_rows(tape.mul_rows(tape.gather_rows(z, src), alpha), dst, n);
      agg = agg ? tape.add(*agg, msg) : msg;
    }
    ad::Var pre = agg ? tape.add(tape.scale_rows(*agg, topo_.inv_relation_count), self) : self;
    h = tape.silu(pre);
  }
  return h;
}

const std::vector<double>& HgnnModel::last_attention(int layer, Relation r) const {
  return attention_cache_.at(static_cast<std::size_t>(layer)).at(static_cast<std::size_t>(r));
}

// ---------------------------------------------------------------------------
// GCN

GcnModel::GcnModel(const HgnnConfig& config, std::size_t num_learners, std::size_t num_concepts) {
  config.validate();
  num_learners_ = num_learners;
  num_concepts_ = num_concepts;
  embed_dim_ = config.embed_dim;
  const auto d = static_cast<Eigen::Index>(config.embed_dim);
  const auto n = static_cast<Eigen::Index>(num_learners + num_concepts);
  auto rng = Rng::derive(config.seed, "init/gcn");
  embeddings = ad::Parameter("embeddings", glorot_uniform(n, d, static_cast<double>(n), static_cast<double>(d), rng));
  for (int l = 0; l < config.layers; ++l)
    weights.emplace_back("layer" + std::to_string(l) + ".W",
                         glorot_uniform(d, d, static_cast<double>(d), static_cast<double>(d), rng));
}

std::vector<ad::Parameter*> GcnModel::parameters() {
  std::vector<ad::Parameter*> out{&embeddings};
  for (auto& w : weights) out.push_back(&w);
  return out;
}

void GcnModel::bind(const PerceptionSubgraph& s) {
  check_sizes(*this, s);
  bipartite_with_self_loops(s, src_, dst_);
  std::vector<double> degree(s.num_learners + s.num_concepts, 0.0);
  for (int v : dst_) degree[static_cast<std::size_t>(v)] += 1.0;
  norm_.resize(src_.size());
  for (std::size_t i = 0; i < src_.size(); ++i)
    norm_[i] = 1.0 / std::sqrt(degree[static_cast<std::size_t>(src_[i])] * degree[static_cast<std::size_t>(dst_[i])]);
}

ad::Var GcnModel::encode(ad::Tape& tape) {
  if (src_.empty()) fail(ErrorKind::kInvalidArgument, "unbound_model", "bind() must be called before encode()");
  const int n = static_cast<int>(num_learners_ + num_concepts_);
  ad::Var h = tape.parameter(embeddings);
  for (auto& w : weights) {
    ad::Var z = tape.matmul(h, tape.parameter(w));
    h = tape.silu(tape.scatter_rows(tape.scale_rows(tape.gather_rows(z, src_), norm_), dst_, n));
  }
  return h;
}

// ---------------------------------------------------------------------------
// GAT

GatModel::GatModel(const HgnnConfig& config, std::size_t num_learners, std::size_t num_concepts) {
  config.validate();
  num_learners_ = num_learners;
  num_concepts_ = num_concepts;
  embed_dim_ = config.embed_dim;
  const auto d = static_cast<Eigen::Index>(config.embed_dim);
  const auto n = static_cast<Eigen::Index>(num_learners + num_concepts);
  auto rng = Rng::derive(config.seed, "init/gat");
  embeddings = ad::Parameter("embeddings", glorot_uniform(n, d, static_cast<double>(n), static_cast<double>(d), rng));
  for (int l = 0; l < config.layers; ++l) {
    weights.emplace_back("layer" + std::to_string(l) + ".W",
                         glorot_uniform(d, d, static_cast<double>(d), static_cast<double>(d), rng));
    attention.emplace_back("layer" + std::to_string(l) + ".a",
                           glorot_uniform(d, 2, 2.0 * static_cast<double>(d), 1.0, rng));
  }
}

std::vector<ad::Parameter*> GatModel::parameters() {
  std::vector<ad::Parameter*> out{&embeddings};
  for (auto& w : weights) out.push_back(&w);
  for (auto& a : attention) out.push_back(&a);
  return out;
}

void GatModel::bind(const PerceptionSubgraph& s) {
  check_sizes(*this, s);
  bipartite_with_self_loops(s, src_, dst_);
}

ad::Var GatModel::encode(ad::Tape& tape) {
  if (src_.empty()) fail(ErrorKind::kInvalidArgument, "unbound_model", "bind() must be called before encode()");
  const int n = static_cast<int>(num_learners_ + num_concepts_);
  attention_cache_.assign(weights.size(), {});
  ad::Var h = tape.parameter(embeddings);
  for (std::size_t l = 0; l < weights.size(); ++l) {
    ad::Var z = tape.matmul(h, tape.parameter(weights[l]));
    ad::Var s = tape.matmul(z, tape.parameter(attention[l]));
    ad::Var e = tape.add(tape.gather_entries(s, dst_, 0), tape.gather_entries(s, src_, 1));
    ad::Var alpha = tape.segment_softmax(tape.leaky_relu(e, 0.2), dst_, n);
    const auto& av = tape.value(alpha);
    attention_cache_[l].assign(av.data(), av.data() + av.size());
    h = tape.silu(tape.scatter_rows(tape.mul_rows(tape.gather_rows(z, src_), alpha), dst_, n));
  }
  return h;
}

}  // namespace kmc
