#include "kmcoach/scorer.hpp"

#include <array>

#include "kmcoach/error.hpp"

namespace kmc {

namespace {
constexpr std::array<std::pair<Method, const char*>, 6> kMethodNames{{
    {Method::kRG, "RG"},
    {Method::kGCN, "GCN"},
    {Method::kGAT, "GAT"},
    {Method::kLP, "LP"},
    {Method::kHGNN, "HGNN"},
    {Method::kHGNNNoEins, "HGNN-noEINS"},
}};
}  // namespace

std::string to_string(Method m) {
  for (auto [method, name] : kMethodNames)
    if (method == m) return name;
  return "?";
}

Method method_from_string(const std::string& name) {
  for (auto [method, n] : kMethodNames)
    if (name == n) return method;
  fail(ErrorKind::kInvalidArgument, "unknown_method", "unknown method '" + name + "'");
}

std::map<LearnerId, InferredStates> infer_lps(const LinkScorer& scorer, const HeteroGraph& graph, double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) fail(ErrorKind::kInvalidArgument, "invalid_threshold", "theta must lie in (0, 1]");
  std::map<LearnerId, InferredStates> out;
  for (std::uint32_t l = 0; l < graph.num_learners(); ++l) {
    const LearnerId learner{l};
    auto& states = out[learner];
    for (auto k : mention_partition(graph, learner).latent)
      (scorer.score(learner, k) >= theta ? states.know : states.dont_know).push_back(k);
  }
  return out;
}

}  // namespace kmc
