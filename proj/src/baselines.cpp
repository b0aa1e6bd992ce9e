#include "kmcoach/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "kmcoach/error.hpp"

namespace kmc {

double RandomScorer::score(LearnerId learner, ConceptId concept_id) const {
  return hashed_uniform(seed_, learner.value, concept_id.value);
}

std::unique_ptr<RandomScorer> rg_score(std::uint64_t seed) { return std::make_unique<RandomScorer>(seed); }

namespace {

template <class Model>
std::unique_ptr<EmbeddingScorer> fit(Method method, const HeteroGraph& graph, const EdgeSplit& split,
                                     const TrainOptions& options, TrainHistory* history) {
  Model model(options.config, graph.num_learners(), graph.num_concepts());
  auto h = train(model, graph, split, options);
  if (history) *history = std::move(h);
  return make_scorer(model, method);
}

}  // namespace

std::unique_ptr<EmbeddingScorer> gcn_train(const HeteroGraph& graph, const EdgeSplit& split, const TrainOptions& options,
                                           TrainHistory* history) {
  return fit<GcnModel>(Method::kGCN, graph, split, options, history);
}

std::unique_ptr<EmbeddingScorer> gat_train(const HeteroGraph& graph, const EdgeSplit& split, const TrainOptions& options,
                                           TrainHistory* history) {
  return fit<GatModel>(Method::kGAT, graph, split, options, history);
}

std::unique_ptr<EmbeddingScorer> hgnn_train(const HeteroGraph& graph, const EdgeSplit& split, const TrainOptions& options,
                                            TrainHistory* history) {
  const Method m = options.strategy == NegativeStrategy::kEins ? Method::kHGNN : Method::kHGNNNoEins;
  return fit<HgnnModel>(m, graph, split, options, history);
}

std::unique_ptr<LabelPropagationScorer> label_propagation(const HeteroGraph& graph, const EdgeSplit& split,
                                                          const LpConfig& config) {
  if (config.iterations < 1) fail(ErrorKind::kInvalidArgument, "invalid_iterations", "LP needs at least one iteration");
  if (!(config.damping > 0.0 && config.damping < 1.0))
    fail(ErrorKind::kInvalidArgument, "invalid_damping", "LP damping must lie in (0, 1)");

  const std::size_t nl = graph.num_learners();
  const std::size_t nk = graph.num_concepts();
  std::vector<std::vector<std::uint32_t>> neighbours(nk);
  for (auto [from, to] : graph.prerequisites()) {
    neighbours[from.value].push_back(to.value);
    neighbours[to.value].push_back(from.value);
  }
  const std::set<LearnerConcept> held_out(split.test_neg.begin(), split.test_neg.end());

  Eigen::MatrixXd scores(nl, nk);
  LpReport report;
  report.converged = true;
  std::vector<double> init(nk);
  std::vector<char> clamped(nk);
  std::vector<double> cur(nk);
  std::vector<double> next(nk);
  auto pos = split.train_pos.begin();
  for (std::uint32_t l = 0; l < nl; ++l) {
    const LearnerId learner{l};
    std::fill(init.begin(), init.end(), 0.5);
    std::fill(clamped.begin(), clamped.end(), 0);
    for (auto k : graph.dont_know(learner)) {
      if (held_out.count({learner, k})) continue;
      init[k.value] = 0.0;
      clamped[k.value] = 1;
    }
    for (; pos != split.train_pos.end() && pos->first == learner; ++pos) {
      init[pos->second.value] = 1.0;
      clamped[pos->second.value] = 1;
    }
    cur = init;
    int sweep = 0;
    double delta = 0.0;
    while (sweep < config.iterations) {
      ++sweep;
      delta = 0.0;
      for (std::size_t k = 0; k < nk; ++k) {
        if (clamped[k] || neighbours[k].empty()) {
          next[k] = cur[k];
          continue;
        }
        double sum = 0.0;
        for (auto j : neighbours[k]) sum += cur[j];
        next[k] = config.damping * sum / static_cast<double>(neighbours[k].size()) + (1.0 - config.damping) * init[k];
        delta = std::max(delta, std::abs(next[k] - cur[k]));
      }
      std::swap(cur, next);
      if (delta < config.tolerance) break;
    }
    if (delta >= config.tolerance) report.converged = false;
    report.sweeps = std::max(report.sweeps, sweep);
    report.max_delta = std::max(report.max_delta, delta);
    for (std::size_t k = 0; k < nk; ++k) scores(l, static_cast<Eigen::Index>(k)) = cur[k];
  }
  return std::make_unique<LabelPropagationScorer>(std::move(scores), report);
}

}  // namespace kmc
