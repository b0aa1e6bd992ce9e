#include "kmcoach/hgnn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "kmcoach/auc.hpp"
#include "kmcoach/error.hpp"

namespace kmc {

using nlohmann::json;

double score(std::span<const double> h_s, std::span<const double> h_k) {
  if (h_s.size() != h_k.size())
    fail(ErrorKind::kInvalidArgument, "dimension_mismatch", "embeddings have different dimensions");
  double dot = 0.0;
  for (std::size_t i = 0; i < h_s.size(); ++i) dot += h_s[i] * h_k[i];
  return ad::sigmoid(dot);
}

double bce_loss(std::span<const double> preds, std::span<const int> labels) {
  if (preds.empty()) fail(ErrorKind::kInvalidArgument, "empty_input", "bce_loss needs at least one prediction");
  if (preds.size() != labels.size())
    fail(ErrorKind::kInvalidArgument, "length_mismatch", "bce_loss: predictions and labels differ in length");
  double total = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double p = std::clamp(preds[i], kProbabilityEps, 1.0 - kProbabilityEps);
    total -= labels[i] ? std::log(p) : std::log(1.0 - p);
  }
  return total / static_cast<double>(preds.size());
}

double EmbeddingScorer::score(LearnerId learner, ConceptId concept_id) const {
  const auto hs = embeddings_.row(learner.value);
  const auto hk = embeddings_.row(static_cast<Eigen::Index>(num_learners_ + concept_id.value));
  return ad::sigmoid(hs.dot(hk));
}

namespace {

struct LossEval {
  double loss = 0.0;
  std::vector<double> preds;
};

LossEval evaluate(EmbeddingModel& model, std::span<const LabeledPair> pairs, bool with_grad) {
  if (pairs.empty()) fail(ErrorKind::kInvalidArgument, "empty_input", "objective needs at least one pair");
  const int nl = static_cast<int>(model.num_learners());
  std::vector<int> learners;
  std::vector<int> concepts;
  std::vector<double> labels;
  learners.reserve(pairs.size());
  concepts.reserve(pairs.size());
  labels.reserve(pairs.size());
  for (const auto& p : pairs) {
    learners.push_back(static_cast<int>(p.learner.value));
    concepts.push_back(nl + static_cast<int>(p.concept_id.value));
    labels.push_back(p.label);
  }
  ad::Tape tape;
  ad::Var h = model.encode(tape);
  ad::Var logits = tape.row_dot(tape.gather_rows(h, learners), tape.gather_rows(h, concepts));
  ad::Var probs = tape.sigmoid(logits);
  ad::Var loss = tape.bce(probs, labels, kProbabilityEps);
  if (with_grad) {
    model.zero_grad();
    tape.backward(loss);
  }
  const auto& pv = tape.value(probs);
  return LossEval{tape.value(loss)(0, 0), std::vector<double>(pv.data(), pv.data() + pv.size())};
}

// Per-learner positives and negative pools, fixed for a training run.
class BatchSampler {
 public:
  BatchSampler(const HeteroGraph& graph, const EdgeSplit& split, const TrainOptions& options)
      : options_(options), positives_(graph.num_learners()) {
    for (auto [l, k] : split.train_pos) positives_[l.value].push_back(k);
    pools_.reserve(graph.num_learners());
    for (std::uint32_t l = 0; l < graph.num_learners(); ++l)
      pools_.push_back(negative_pools(graph, LearnerId{l}, split.test_neg));
    if (options_.n_e) {
      n_e_ = *options_.n_e;
    } else {
      std::size_t total = 0;
      for (const auto& p : pools_) total += p.explicit_pool.size();
      const double mean = pools_.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(pools_.size());
      n_e_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(mean)));
    }
  }

  std::size_t n_e() const { return n_e_; }

  std::vector<LabeledPair> sample(Rng& rng) const {
    std::vector<LabeledPair> pairs;
    for (std::uint32_t l = 0; l < positives_.size(); ++l) {
      const LearnerId learner{l};
      for (auto k : positives_[l]) pairs.push_back({learner, k, 1.0});
      const auto& pools = pools_[l];
      const std::size_t n_e = n_e_;
      std::vector<ConceptId> negs;
      if (options_.strategy == NegativeStrategy::kEins) {
        if (pools.explicit_pool.empty() && pools.implicit_pool.empty()) continue;
        auto batch = eins_sample(pools, learner, n_e, options_.rho, rng);
        negs = std::move(batch.explicit_negs);
        negs.insert(negs.end(), batch.implicit_negs.begin(), batch.implicit_negs.end());
      } else {
        const std::size_t count = std::min(n_e, pools.explicit_pool.size()) +
                                  std::min(implicit_quota(n_e, options_.rho), pools.implicit_pool.size());
        negs = uniform_unmentioned_sample(pools, learner, count, rng).implicit_negs;
      }
      std::sort(negs.begin(), negs.end());
      for (auto k : negs) pairs.push_back({learner, k, 0.0});
    }
    return pairs;
  }

 private:
  const TrainOptions& options_;
  std::vector<std::vector<ConceptId>> positives_;
  std::vector<NegativePools> pools_;
  std::size_t n_e_ = 1;
};

struct AdamState {
  ad::Matrix m;
  ad::Matrix v;
};

bool all_finite(const ad::Matrix& m) { return m.allFinite(); }

}  // namespace

double objective(EmbeddingModel& model, std::span<const LabeledPair> pairs, bool with_grad) {
  return evaluate(model, pairs, with_grad).loss;
}

std::vector<LabeledPair> training_batch(const HeteroGraph& graph, const EdgeSplit& split, const TrainOptions& options,
                                        Rng& rng) {
  return BatchSampler(graph, split, options).sample(rng);
}

TrainHistory train(EmbeddingModel& model, const HeteroGraph& graph, const EdgeSplit& split, const TrainOptions& options) {
  const auto& config = options.config;
  config.validate();
  model.bind(training_subgraph(build_perception_subgraph(graph), split));
  const BatchSampler sampler(graph, split, options);
  auto rng = Rng::derive(config.seed, "negatives");

  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kAdamEps = 1e-8;
  auto params = model.parameters();
  std::vector<AdamState> state;
  for (auto* p : params)
    state.push_back({ad::Matrix::Zero(p->value.rows(), p->value.cols()), ad::Matrix::Zero(p->value.rows(), p->value.cols())});

  TrainHistory history;
  history.reserve(static_cast<std::size_t>(config.epochs));
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const auto pairs = sampler.sample(rng);
    if (pairs.empty()) fail(ErrorKind::kDomain, "empty_batch", "no training pairs available");
    const auto eval = evaluate(model, pairs, true);

    const double c1 = 1.0 - std::pow(kBeta1, epoch);
    const double c2 = 1.0 - std::pow(kBeta2, epoch);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = *params[i];
      auto& s = state[i];
      s.m = kBeta1 * s.m + (1.0 - kBeta1) * p.grad;
      s.v = kBeta2 * s.v + (1.0 - kBeta2) * p.grad.cwiseProduct(p.grad);
      p.value.array() -= config.learning_rate * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + kAdamEps);
      if (config.weight_decay > 0.0) p.value *= 1.0 - config.learning_rate * config.weight_decay;
      if (!all_finite(p.value))
        fail(ErrorKind::kDomain, "non_finite", "parameter " + p.name + " became non-finite at epoch " + std::to_string(epoch));
    }

    EpochStats stats;
    stats.loss = eval.loss;
    std::vector<int> labels;
    labels.reserve(pairs.size());
    bool pos = false;
    bool neg = false;
    for (const auto& p : pairs) {
      labels.push_back(p.label > 0.5 ? 1 : 0);
      (p.label > 0.5 ? pos : neg) = true;
    }
    stats.train_auc = pos && neg ? auc(eval.preds, labels) : 0.5;
    stats.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    history.push_back(stats);
    if (options.on_epoch) options.on_epoch(epoch, stats);
  }
  return history;
}

ad::Matrix embeddings(EmbeddingModel& model) {
  ad::Tape tape;
  ad::Var h = model.encode(tape);
  return tape.value(h);
}

ad::Matrix forward(EmbeddingModel& model, const PerceptionSubgraph& subgraph) {
  model.bind(subgraph);
  auto h = embeddings(model);
  if (!h.allFinite()) fail(ErrorKind::kDomain, "non_finite", "forward produced non-finite embeddings");
  return h;
}

EdgeSplit full_training_split(const PerceptionSubgraph& subgraph) {
  EdgeSplit split;
  split.train_pos = subgraph.know_edges;
  split.ratio = 1.0;
  return split;
}

std::unique_ptr<EmbeddingScorer> make_scorer(EmbeddingModel& model, Method method) {
  return std::make_unique<EmbeddingScorer>(method, embeddings(model), model.num_learners());
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr const char* kCheckpointFormat = "kmcoach-checkpoint";
constexpr int kCheckpointVersion = 1;

json config_to_json(const HgnnConfig& c) {
  return {{"embed_dim", c.embed_dim},         {"layers", c.layers},
          {"learning_rate", c.learning_rate}, {"epochs", c.epochs},
          {"threshold", c.threshold},         {"weight_decay", c.weight_decay},
          {"seed", c.seed}};
}

HgnnConfig config_from_json(const json& j) {
  HgnnConfig c;
  c.embed_dim = j.at("embed_dim").get<int>();
  c.layers = j.at("layers").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.threshold = j.at("threshold").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

void save_checkpoint(const HgnnModel& model, const HgnnConfig& config, const HeteroGraph& graph,
                     const std::filesystem::path& path) {
  json doc;
  doc["format"] = kCheckpointFormat;
  doc["version"] = kCheckpointVersion;
  doc["method"] = model.method();
  doc["config"] = config_to_json(config);
  doc["fingerprint"] = graph.fingerprint();
  doc["num_learners"] = model.num_learners();
  doc["num_concepts"] = model.num_concepts();
  doc["parameters"] = json::array();
  for (const auto* p : model.parameters()) {
    std::vector<double> data(p->value.data(), p->value.data() + p->value.size());
    doc["parameters"].push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}, {"data", data}});
  }
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "io_error", "cannot write checkpoint '" + path.string() + "'");
  out << doc.dump() << '\n';
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "io_error", "cannot open checkpoint '" + path.string() + "'");
  try {
    const json doc = json::parse(in);
    if (doc.at("format") != kCheckpointFormat) fail(ErrorKind::kParse, "parse_error", "not a kmcoach checkpoint");
    if (doc.at("version").get<int>() != kCheckpointVersion)
      fail(ErrorKind::kParse, "unsupported_version", "unsupported checkpoint version");
    Checkpoint ck;
    ck.config = config_from_json(doc.at("config"));
    ck.fingerprint = doc.at("fingerprint").get<std::string>();
    ck.num_learners = doc.at("num_learners").get<std::size_t>();
    ck.num_concepts = doc.at("num_concepts").get<std::size_t>();
    for (const auto& p : doc.at("parameters")) {
      const auto rows = p.at("rows").get<Eigen::Index>();
      const auto cols = p.at("cols").get<Eigen::Index>();
      const auto data = p.at("data").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(data.size()) != rows * cols)
        fail(ErrorKind::kParse, "parse_error", "checkpoint tensor size does not match its shape");
      ad::Matrix m = Eigen::Map<const ad::Matrix>(data.data(), rows, cols);
      ck.parameters.emplace_back(p.at("name").get<std::string>(), std::move(m));
    }
    return ck;
  } catch (const json::exception& e) {
    fail(ErrorKind::kParse, "parse_error", std::string("malformed checkpoint: ") + e.what());
  }
}

std::unique_ptr<HgnnModel> load_checkpoint(const std::filesystem::path& path, const HeteroGraph& graph) {
  auto ck = read_checkpoint(path);
  if (ck.fingerprint != graph.fingerprint())
    fail(ErrorKind::kFingerprint, "fingerprint_mismatch",
         "checkpoint was trained on graph " + ck.fingerprint + " but the input graph is " + graph.fingerprint());
  auto model = std::make_unique<HgnnModel>(ck.config, ck.num_learners, ck.num_concepts);
  auto params = model->parameters();
  if (params.size() != ck.parameters.size())
    fail(ErrorKind::kParse, "parse_error", "checkpoint parameter count does not match the model");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& src = ck.parameters[i];
    if (src.name != params[i]->name || src.value.rows() != params[i]->value.rows() ||
        src.value.cols() != params[i]->value.cols())
      fail(ErrorKind::kParse, "parse_error", "checkpoint tensor '" + src.name + "' does not match the model");
    params[i]->value = src.value;
    params[i]->zero_grad();
  }
  model->bind(build_perception_subgraph(graph));
  return model;
}

}  // namespace kmc
