#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "kmcoach/baselines.hpp"
#include "kmcoach/synth.hpp"

namespace kmc {

enum class EvalMode { kHeldOutExplicit, kTrueLatent };
std::string to_string(EvalMode m);
EvalMode eval_mode_from_string(const std::string& name);

struct ExperimentSpec {
  std::vector<Method> methods{Method::kRG, Method::kGCN, Method::kGAT, Method::kLP, Method::kHGNN, Method::kHGNNNoEins};
  int trials = 30;
  double ratio = 0.8;
  std::uint64_t base_seed = 0;
  EvalMode eval_mode = EvalMode::kHeldOutExplicit;
  HgnnConfig model;  // seed is overridden per trial
  LpConfig lp;
  std::optional<std::size_t> n_e;
  double rho = 0.5;
  int jobs = 1;

  void validate() const;
};

struct MethodResult {
  Method method = Method::kRG;
  std::vector<double> aucs;  // per trial
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation, 0 for one trial
};

struct ResultTable {
  std::string dataset;  // label used for the Markdown column
  EvalMode eval_mode = EvalMode::kHeldOutExplicit;
  std::vector<std::uint64_t> seeds;  // per trial
  std::vector<MethodResult> results;
  int lp_nonconverged = 0;  // trials where LP hit its iteration budget

  const MethodResult& at(Method m) const;
};

/// Trial t uses seed base_seed + t for its split, initialization and sampling.
/// Scores held-out positives against held-out explicit negatives (balanced by
/// truncating the larger class) or, in TrueLatent mode, the supplied latent labels.
ResultTable run_experiment(const HeteroGraph& graph, const std::vector<LatentLabel>* ground_truth,
                           const ExperimentSpec& spec, const std::string& dataset = "synthetic");

/// Aggregates per-trial AUCs into mean and sample SD.
void summarize(MethodResult& r);

enum class TableFormat { kCsv, kMarkdown, kJson };
std::string emit_table(const ResultTable& table, TableFormat format);
/// Inverse of the CSV emitter (`method,mean,sd,auc_1..auc_T`).
ResultTable parse_table_csv(const std::string& csv);

nlohmann::json run_manifest(const ExperimentSpec& spec, const ResultTable& table, const HeteroGraph& graph);

}  // namespace kmc
