#include "kmcoach/eval.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <sstream>
#include <thread>

#include "kmcoach/auc.hpp"
#include "kmcoach/error.hpp"

namespace kmc {

using nlohmann::json;

std::string to_string(EvalMode m) { return m == EvalMode::kTrueLatent ? "TrueLatent" : "HeldOutExplicit"; }

EvalMode eval_mode_from_string(const std::string& name) {
  if (name == "TrueLatent" || name == "true-latent") return EvalMode::kTrueLatent;
  if (name == "HeldOutExplicit" || name == "held-out") return EvalMode::kHeldOutExplicit;
  fail(ErrorKind::kInvalidArgument, "unknown_eval_mode", "unknown eval mode '" + name + "'");
}

void ExperimentSpec::validate() const {
  if (methods.empty()) fail(ErrorKind::kInvalidArgument, "no_methods", "experiment needs at least one method");
  if (trials < 1) fail(ErrorKind::kInvalidArgument, "invalid_trials", "trials must be positive");
  if (!(ratio > 0.0 && ratio < 1.0)) fail(ErrorKind::kInvalidArgument, "invalid_ratio", "ratio must lie in (0, 1)");
  if (jobs < 1) fail(ErrorKind::kInvalidArgument, "invalid_jobs", "jobs must be positive");
  model.validate();
}

const MethodResult& ResultTable::at(Method m) const {
  for (const auto& r : results)
    if (r.method == m) return r;
  fail(ErrorKind::kInvalidArgument, "unknown_method", "method " + to_string(m) + " is not in the table");
}

void summarize(MethodResult& r) {
  const double n = static_cast<double>(r.aucs.size());
  r.mean = 0.0;
  for (double a : r.aucs) r.mean += a;
  r.mean /= n;
  double ss = 0.0;
  for (double a : r.aucs) ss += (a - r.mean) * (a - r.mean);
  r.sd = r.aucs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
}

namespace {

struct TestSet {
  std::vector<LearnerConcept> pairs;
  std::vector<int> labels;
};

TestSet held_out_pairs(const EdgeSplit& split) {
  const std::size_t n = std::min(split.test_pos.size(), split.test_neg.size());
  TestSet t;
  for (std::size_t i = 0; i < n; ++i) {
    t.pairs.push_back(split.test_pos[i]);
    t.labels.push_back(1);
  }
  for (std::size_t i = 0; i < n; ++i) {
    t.pairs.push_back(split.test_neg[i]);
    t.labels.push_back(0);
  }
  return t;
}

struct TrialOutcome {
  double auc = 0.0;
  bool lp_nonconverged = false;
};

TrialOutcome run_trial(const HeteroGraph& graph, const PerceptionSubgraph& subgraph, const TestSet* latent,
                       const ExperimentSpec& spec, Method method, std::uint64_t seed) {
  const auto split = split_edges(subgraph, graph, spec.ratio, seed);
  const TestSet test = latent ? *latent : held_out_pairs(split);

  TrainOptions options;
  options.config = spec.model;
  options.config.seed = seed;
  options.n_e = spec.n_e;
  options.rho = spec.rho;

  std::unique_ptr<LinkScorer> scorer;
  TrialOutcome out;
  switch (method) {
    case Method::kRG:
      scorer = rg_score(seed);
      break;
    case Method::kGCN:
      scorer = gcn_train(graph, split, options);
      break;
    case Method::kGAT:
      scorer = gat_train(graph, split, options);
      break;
    case Method::kLP: {
      auto lp = label_propagation(graph, split, spec.lp);
      out.lp_nonconverged = !lp->report().converged;
      scorer = std::move(lp);
      break;
    }
    case Method::kHGNN:
      scorer = hgnn_train(graph, split, options);
      break;
    case Method::kHGNNNoEins:
      options.strategy = NegativeStrategy::kUniformUnmentioned;
      scorer = hgnn_train(graph, split, options);
      break;
  }
  std::vector<double> scores;
  scores.reserve(test.pairs.size());
  for (auto [l, k] : test.pairs) scores.push_back(scorer->score(l, k));
  out.auc = auc(scores, test.labels);
  return out;
}

}  // namespace

ResultTable run_experiment(const HeteroGraph& graph, const std::vector<LatentLabel>* ground_truth,
                           const ExperimentSpec& spec, const std::string& dataset) {
  spec.validate();
  if (spec.eval_mode == EvalMode::kTrueLatent && !ground_truth)
    fail(ErrorKind::kInvalidArgument, "missing_ground_truth", "TrueLatent evaluation needs a ground-truth sidecar");

  const auto subgraph = build_perception_subgraph(graph);
  std::optional<TestSet> latent;
  if (spec.eval_mode == EvalMode::kTrueLatent) {
    latent.emplace();
    for (const auto& lab : *ground_truth) {
      latent->pairs.emplace_back(lab.learner, lab.concept_id);
      latent->labels.push_back(lab.perceived_know ? 1 : 0);
    }
  }

  ResultTable table;
  table.dataset = dataset;
  table.eval_mode = spec.eval_mode;
  for (int t = 0; t < spec.trials; ++t) table.seeds.push_back(spec.base_seed + static_cast<std::uint64_t>(t));

  const std::size_t nm = spec.methods.size();
  const std::size_t total = nm * static_cast<std::size_t>(spec.trials);
  std::vector<TrialOutcome> outcomes(total);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t job; (job = next.fetch_add(1)) < total;) {
      try {
        const std::size_t trial = job / nm;
        outcomes[job] = run_trial(graph, subgraph, latent ? &*latent : nullptr, spec, spec.methods[job % nm],
                                  table.seeds[trial]);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = total;
      }
    }
  };
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(spec.jobs), total);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  for (std::size_t m = 0; m < nm; ++m) {
    MethodResult r;
    r.method = spec.methods[m];
    for (int t = 0; t < spec.trials; ++t) {
      const auto& o = outcomes[static_cast<std::size_t>(t) * nm + m];
      r.aucs.push_back(o.auc);
      table.lp_nonconverged += o.lp_nonconverged ? 1 : 0;
    }
    summarize(r);
    table.results.push_back(std::move(r));
  }
  return table;
}

namespace {

std::string fmt(double v, const char* spec = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

std::string emit_table(const ResultTable& table, TableFormat format) {
  std::ostringstream out;
  switch (format) {
    case TableFormat::kCsv: {
      out << "method,mean,sd";
      for (std::size_t t = 0; t < table.seeds.size(); ++t) out << ",auc_" << (t + 1);
      out << '\n';
      for (const auto& r : table.results) {
        out << to_string(r.method) << ',' << fmt(r.mean) << ',' << fmt(r.sd);
        for (double a : r.aucs) out << ',' << fmt(a);
        out << '\n';
      }
      break;
    }
    case TableFormat::kMarkdown: {
      out << "| Method | " << table.dataset << " (AUC %) | Mean | SD |\n";
      out << "|---|---:|---:|---:|\n";
      for (const auto& r : table.results)
        out << "| " << to_string(r.method) << " | " << fmt(100.0 * r.mean, "%.2f") << " | " << fmt(100.0 * r.mean, "%.2f")
            << " | " << fmt(100.0 * r.sd, "%.2f") << " |\n";
      break;
    }
    case TableFormat::kJson: {
      json doc;
      doc["dataset"] = table.dataset;
      doc["eval_mode"] = to_string(table.eval_mode);
      doc["seeds"] = table.seeds;
      doc["lp_nonconverged"] = table.lp_nonconverged;
      doc["methods"] = json::array();
      for (const auto& r : table.results)
        doc["methods"].push_back({{"method", to_string(r.method)}, {"mean", r.mean}, {"sd", r.sd}, {"aucs", r.aucs}});
      out << doc.dump(2) << '\n';
      break;
    }
  }
  return out.str();
}

ResultTable parse_table_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line.rfind("method,mean,sd", 0) != 0)
    fail(ErrorKind::kParse, "parse_error", "result CSV lacks the method,mean,sd header");
  ResultTable table;
  std::size_t trials = 0;
  for (std::size_t pos = 0; (pos = line.find(",auc_", pos)) != std::string::npos; ++pos) ++trials;
  for (std::size_t t = 0; t < trials; ++t) table.seeds.push_back(t);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream row(line);
    for (std::string cell; std::getline(row, cell, ',');) cells.push_back(cell);
    if (cells.size() != 3 + trials) fail(ErrorKind::kParse, "parse_error", "result CSV row has the wrong width");
    MethodResult r;
    r.method = method_from_string(cells[0]);
    try {
      r.mean = std::stod(cells[1]);
      r.sd = std::stod(cells[2]);
      for (std::size_t t = 0; t < trials; ++t) r.aucs.push_back(std::stod(cells[3 + t]));
    } catch (const std::exception&) {
      fail(ErrorKind::kParse, "parse_error", "result CSV has a non-numeric cell");
    }
    table.results.push_back(std::move(r));
  }
  return table;
}

json run_manifest(const ExperimentSpec& spec, const ResultTable& table, const HeteroGraph& graph) {
  json methods = json::array();
  for (auto m : spec.methods) methods.push_back(to_string(m));
  json doc;
  doc["graph_fingerprint"] = graph.fingerprint();
  doc["spec"] = {{"methods", methods},
                 {"trials", spec.trials},
                 {"ratio", spec.ratio},
                 {"base_seed", spec.base_seed},
                 {"eval_mode", to_string(spec.eval_mode)},
                 {"embed_dim", spec.model.embed_dim},
                 {"layers", spec.model.layers},
                 {"learning_rate", spec.model.learning_rate},
                 {"epochs", spec.model.epochs},
                 {"weight_decay", spec.model.weight_decay},
                 {"lp_iterations", spec.lp.iterations},
                 {"lp_damping", spec.lp.damping},
                 {"rho", spec.rho}};
  doc["spec"]["n_e"] = spec.n_e ? json(*spec.n_e) : json("cohort mean explicit pool");
  doc["trial_seeds"] = table.seeds;
  return doc;
}

}  // namespace kmc
