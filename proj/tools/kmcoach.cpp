// kmcoach command-line front end. Links only the C API.

#include <malloc.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kmcoach/kmcoach.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kDomainError = 1, kIoError = 2 };

// Carries a process exit code out of a subcommand.
struct CliFailure {
  int code;
};

int exit_code(kmc_status s) {
  if (s == KMC_OK) return kOk;
  return s == KMC_ERR_IO ? kIoError : kDomainError;
}

void check(kmc_status s, const std::string& what) {
  if (s == KMC_OK) return;
  std::cerr << "error: " << what << ": " << kmc_last_error() << " [" << kmc_last_error_tag() << "]\n";
  throw CliFailure{exit_code(s)};
}

struct CString {
  char* p = nullptr;
  ~CString() { kmc_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  ~Handle() { Free(p); }
};
using Graph = Handle<kmc_graph, kmc_graph_free>;
using Model = Handle<kmc_model, kmc_model_free>;
using Assessment = Handle<kmc_assessment, kmc_assessment_free>;
using Coaching = Handle<kmc_coaching, kmc_coaching_free>;
using Table = Handle<kmc_table, kmc_table_free>;

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  out << content;
  out.close();
  if (!out) {
    std::cerr << "error: cannot write " << path.string() << "\n";
    throw CliFailure{kIoError};
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot read " << path.string() << "\n";
    throw CliFailure{kIoError};
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_config(const std::string& command, const json& config) {
  std::cout << "resolved config (" << command << "): " << config.dump() << "\n";
}

// ---- shared option groups

struct GraphArgs {
  std::string graph;
  std::string responses;

  void add(CLI::App* app) {
    app->add_option("graph", graph, "Graph JSON file")->required();
    app->add_option("--responses", responses, "Extra responses CSV (learner,assessment,correct)");
  }
  json to_json() const { return {{"graph", graph}, {"responses", responses}}; }
  void load(Graph& g) const {
    check(kmc_graph_load(graph.c_str(), responses.empty() ? nullptr : responses.c_str(), &g.p), "loading graph");
  }
};

struct ModelArgs {
  kmc_model_config c{};
  bool no_eins = false;

  ModelArgs() { kmc_model_config_default(&c); }
  void add(CLI::App* app, bool with_seed) {
    app->add_option("--dim", c.embed_dim, "Embedding dimension")->capture_default_str();
    app->add_option("--layers", c.layers, "Message-passing layers")->capture_default_str();
    app->add_option("--lr", c.learning_rate, "Learning rate")->capture_default_str();
    app->add_option("--epochs", c.epochs, "Training epochs")->capture_default_str();
    app->add_option("--threshold", c.threshold, "Decision threshold stored with the model")->capture_default_str();
    app->add_option("--weight-decay", c.weight_decay, "Decoupled weight decay")->capture_default_str();
    app->add_option("--n-e", c.n_e, "Explicit negatives per learner (0 = cohort mean pool size)")->capture_default_str();
    app->add_option("--rho", c.rho, "Implicit negative ratio")->capture_default_str();
    app->add_flag("--no-eins", no_eins, "Ablation: sample negatives from unmentioned concepts only");
    if (with_seed) app->add_option("--seed", c.seed, "Initialization and sampling seed")->capture_default_str();
  }
  void finish() {
    if (no_eins) c.strategy = KMC_NEG_UNIFORM_UNMENTIONED;
  }
  json to_json() const {
    return {{"embed_dim", c.embed_dim},
            {"layers", c.layers},
            {"learning_rate", c.learning_rate},
            {"epochs", c.epochs},
            {"threshold", c.threshold},
            {"weight_decay", c.weight_decay},
            {"seed", c.seed},
            {"n_e", c.n_e},
            {"rho", c.rho},
            {"negatives", c.strategy == KMC_NEG_EINS ? "EINS" : "uniform-unmentioned"}};
  }
};

// ---- subcommands

int cmd_validate(const GraphArgs& args) {
  print_config("validate", args.to_json());
  CString diags;
  const auto s = kmc_graph_validate_file(args.graph.c_str(), &diags.p);
  if (s != KMC_OK && s != KMC_ERR_VALIDATION) check(s, "reading graph");
  const auto list = json::parse(diags.str());
  for (const auto& d : list) {
    std::cerr << d["code"].get<std::string>() << ": " << d["message"].get<std::string>();
    if (!d["ids"].empty()) std::cerr << " (" << d["ids"].dump() << ")";
    std::cerr << "\n";
  }
  if (!list.empty()) return kDomainError;
  if (!args.responses.empty()) {
    Graph g;
    args.load(g);
  }
  std::cout << "valid\n";
  return kOk;
}

struct SynthArgs {
  kmc_synth_config c{};
  bool paper_scale = false;
  std::vector<double> mix;
  std::string out;
  std::string truth;
  CLI::Option* sizes[3]{};

  SynthArgs() { kmc_synth_config_default(&c); }
  void add(CLI::App* app) {
    app->add_option("--out,-o", out, "Output graph JSON")->required();
    app->add_option("--truth", truth, "Ground-truth sidecar (default: <out stem>.truth.json)");
    app->add_option("--seed", c.seed, "Generator seed")->capture_default_str();
    sizes[0] = app->add_option("--learners", c.n_learners, "Number of learners")->capture_default_str();
    sizes[1] = app->add_option("--concepts", c.n_concepts, "Number of concepts")->capture_default_str();
    sizes[2] = app->add_option("--items", c.n_items, "Assessment items per cohort")->capture_default_str();
    app->add_option("--layers", c.dag_layers, "Concept DAG layers")->capture_default_str();
    app->add_option("--prereq-prob", c.prereq_prob, "Edge probability between eligible layers")->capture_default_str();
    app->add_option("--max-layer-gap", c.max_layer_gap, "Largest layer span of an edge (0 = unlimited)")
        ->capture_default_str();
    app->add_option("--mastery-base", c.mastery_base, "Mastery probability scale")->capture_default_str();
    app->add_option("--mastery-penalty", c.mastery_penalty, "Mastery drop per unmastered prerequisite")
        ->capture_default_str();
    app->add_option("--slip", c.slip, "Slip probability")->capture_default_str();
    app->add_option("--guess", c.guess, "Guess probability")->capture_default_str();
    app->add_option("--mention-prob", c.mention_prob, "Probability a perception is disclosed")->capture_default_str();
    app->add_option("--mention-unassessed", c.mention_unassessed, "Also disclose unassessed concepts (0/1)")
        ->capture_default_str();
    app->add_option("--persona-mix", mix, "Weights for WC,AL,UC,OC,LC")->delimiter(',')->expected(5);
    app->add_flag("--paper-scale", paper_scale, "Class-sized cohort (150 learners, 211 concepts, 45 items)");
  }
  void finish() {
    if (paper_scale) {
      kmc_synth_config p;
      kmc_synth_config_paper_scale(&p);
      if (!sizes[0]->count()) c.n_learners = p.n_learners;
      if (!sizes[1]->count()) c.n_concepts = p.n_concepts;
      if (!sizes[2]->count()) c.n_items = p.n_items;
    }
    if (!mix.empty())
      for (int i = 0; i < 5; ++i) c.persona_mix[i] = mix[static_cast<std::size_t>(i)];
    if (truth.empty()) {
      fs::path p(out);
      truth = (p.parent_path() / (p.stem().string() + ".truth.json")).string();
    }
  }
  json to_json() const {
    return {{"out", out},
            {"truth", truth},
            {"seed", c.seed},
            {"learners", c.n_learners},
            {"concepts", c.n_concepts},
            {"items", c.n_items},
            {"layers", c.dag_layers},
            {"prereq_prob", c.prereq_prob},
            {"max_layer_gap", c.max_layer_gap},
            {"mastery_base", c.mastery_base},
            {"mastery_penalty", c.mastery_penalty},
            {"slip", c.slip},
            {"guess", c.guess},
            {"mention_prob", c.mention_prob},
            {"mention_unassessed", c.mention_unassessed != 0},
            {"persona_mix", std::vector<double>(c.persona_mix, c.persona_mix + 5)}};
  }
};

int cmd_synth(const SynthArgs& args) {
  print_config("synth", args.to_json());
  Graph g;
  CString truth;
  check(kmc_synth(&args.c, &g.p, &truth.p), "generating cohort");
  check(kmc_graph_save(g.p, args.out.c_str()), "writing graph");
  write_file(args.truth, truth.str() + "\n");
  CString stats;
  check(kmc_graph_stats_json(g.p, &stats.p), "graph statistics");
  std::cout << stats.str() << "\n";
  return kOk;
}

struct TrainArgs {
  GraphArgs graph;
  ModelArgs model;
  std::string out;
  std::string history;
  bool quiet = false;
};

void print_epoch(int epoch, double loss, double train_auc, std::int64_t wall_ms, void* user) {
  const int total = *static_cast<const int*>(user);
  std::fprintf(stderr, "epoch %d/%d loss %.6f train_auc %.4f (%lld ms)\n", epoch, total, loss, train_auc,
               static_cast<long long>(wall_ms));
}

int cmd_train(TrainArgs& args) {
  args.model.finish();
  json cfg = args.graph.to_json();
  cfg["out"] = args.out;
  cfg["model"] = args.model.to_json();
  print_config("train", cfg);
  Graph g;
  args.graph.load(g);
  Model m;
  CString history;
  int total = args.model.c.epochs;
  check(kmc_train(g.p, &args.model.c, args.quiet ? nullptr : print_epoch, &total, &m.p, &history.p), "training");
  check(kmc_model_save(m.p, g.p, args.out.c_str()), "writing checkpoint");
  if (!args.history.empty()) write_file(args.history, history.str() + "\n");
  return kOk;
}

struct EvalArgs {
  GraphArgs graph;
  ModelArgs model;
  kmc_eval_spec spec{};
  std::string truth;
  std::string out_dir;
  std::string mode;  // empty: TrueLatent when --truth is given
  std::string dataset = "synthetic";
  std::vector<std::string> methods;

  EvalArgs() { kmc_eval_spec_default(&spec); }
};

int cmd_eval(EvalArgs& args) {
  args.model.finish();
  auto& s = args.spec;
  s.model = args.model.c;
  if (args.mode.empty()) args.mode = args.truth.empty() ? "HeldOutExplicit" : "TrueLatent";
  if (args.mode == "TrueLatent") s.mode = KMC_EVAL_TRUE_LATENT;
  else if (args.mode == "HeldOutExplicit") s.mode = KMC_EVAL_HELD_OUT_EXPLICIT;
  else {
    std::cerr << "error: unknown --mode " << args.mode << " (TrueLatent or HeldOutExplicit)\n";
    return kDomainError;
  }
  static const std::vector<std::string> names{"RG", "GCN", "GAT", "LP", "HGNN", "HGNN-noEINS"};
  if (!args.methods.empty()) {
    s.methods = 0;
    for (const auto& m : args.methods) {
      auto it = std::find(names.begin(), names.end(), m);
      if (it == names.end()) {
        std::cerr << "error: unknown method " << m << "\n";
        return kDomainError;
      }
      s.methods |= 1u << (it - names.begin());
    }
  }
  std::vector<std::string> selected;
  for (std::size_t i = 0; i < names.size(); ++i)
    if (s.methods & (1u << i)) selected.push_back(names[i]);
  json cfg = args.graph.to_json();
  cfg.update({{"truth", args.truth},
              {"out_dir", args.out_dir},
              {"methods", selected},
              {"trials", s.trials},
              {"ratio", s.ratio},
              {"seed", s.base_seed},
              {"mode", args.mode},
              {"jobs", s.jobs},
              {"lp_iterations", s.lp_iterations},
              {"lp_damping", s.lp_damping},
              {"lp_tolerance", s.lp_tolerance},
              {"model", args.model.to_json()}});
  print_config("eval", cfg);

  Graph g;
  args.graph.load(g);
  std::string truth;
  if (!args.truth.empty()) truth = read_file(args.truth);
  Table t;
  check(kmc_eval(g.p, args.truth.empty() ? nullptr : truth.c_str(), &s, args.dataset.c_str(), &t.p), "evaluation");
  const fs::path dir(args.out_dir);
  CString csv, md, js, manifest;
  check(kmc_table_emit(t.p, KMC_TABLE_CSV, &csv.p), "emitting CSV");
  check(kmc_table_emit(t.p, KMC_TABLE_MARKDOWN, &md.p), "emitting Markdown");
  check(kmc_table_emit(t.p, KMC_TABLE_JSON, &js.p), "emitting JSON");
  check(kmc_table_manifest(t.p, g.p, &manifest.p), "building manifest");
  write_file(dir / "results.csv", csv.str());
  write_file(dir / "results.md", md.str());
  write_file(dir / "results.json", js.str());
  write_file(dir / "manifest.json", manifest.str());
  std::cout << md.str();
  return kOk;
}

struct AssessArgs {
  GraphArgs graph;
  std::string checkpoint;
  std::string out;
  std::optional<double> theta;
};

double resolve_theta(const std::optional<double>& theta, const kmc_model* m) {
  if (theta) return *theta;
  kmc_model_config c;
  check(kmc_model_config_get(m, &c), "reading model config");
  return c.threshold;
}

int cmd_assess(const AssessArgs& args) {
  Graph g;
  args.graph.load(g);
  Model m;
  check(kmc_model_load(args.checkpoint.c_str(), g.p, &m.p), "loading checkpoint");
  const double theta = resolve_theta(args.theta, m.p);
  json cfg = args.graph.to_json();
  cfg.update({{"checkpoint", args.checkpoint}, {"out", args.out}, {"theta", theta}});
  print_config("assess", cfg);
  Assessment a;
  check(kmc_assess(g.p, m.p, theta, &a.p), "assessment");
  CString csv;
  check(kmc_assessment_metrics_csv(a.p, g.p, &csv.p), "metrics CSV");
  write_file(args.out, csv.str());
  std::cout << "assessed " << kmc_assessment_num_learners(a.p) << " learners\n";
  return kOk;
}

struct CoachArgs {
  GraphArgs graph;
  std::string checkpoint;
  std::string out_dir;
  std::string thresholds;
  std::optional<double> theta;
  int related_depth = 2;
};

int cmd_coach(const CoachArgs& args) {
  Graph g;
  args.graph.load(g);
  Model m;
  check(kmc_model_load(args.checkpoint.c_str(), g.p, &m.p), "loading checkpoint");
  const double theta = resolve_theta(args.theta, m.p);
  json cfg = args.graph.to_json();
  cfg.update({{"checkpoint", args.checkpoint},
              {"out_dir", args.out_dir},
              {"theta", theta},
              {"related_depth", args.related_depth},
              {"thresholds", args.thresholds}});
  print_config("coach", cfg);

  std::optional<kmc_thresholds> reference;
  if (!args.thresholds.empty()) {
    try {
      const auto doc = json::parse(read_file(args.thresholds));
      reference = kmc_thresholds{doc.at("perf_median").get<double>(), doc.at("dprime_median").get<double>(),
                                 doc.at("sensitivity_median").get<double>(),
                                 doc.at("specificity_median").get<double>()};
    } catch (const json::exception& e) {
      std::cerr << "error: thresholds file: " << e.what() << "\n";
      return kDomainError;
    }
  }
  Assessment a;
  check(kmc_assess(g.p, m.p, theta, &a.p), "assessment");
  Coaching c;
  check(kmc_coach(g.p, a.p, reference ? &*reference : nullptr, args.related_depth, &c.p), "coaching");

  const fs::path dir(args.out_dir);
  const auto n = kmc_coaching_num_reports(c.p);
  for (std::size_t i = 0; i < n; ++i) {
    CString id, js, md;
    check(kmc_coaching_learner(c.p, i, &id.p), "report learner");
    check(kmc_coaching_report_json(c.p, i, &js.p), "report JSON");
    check(kmc_coaching_report_markdown(c.p, g.p, i, &md.p), "report Markdown");
    write_file(dir / "reports" / (id.str() + ".json"), js.str());
    write_file(dir / "reports" / (id.str() + ".md"), md.str());
  }
  CString summary, unclassified;
  check(kmc_coaching_summary_csv(c.p, g.p, &summary.p), "cohort summary");
  check(kmc_coaching_unclassified_json(c.p, g.p, &unclassified.p), "unclassified list");
  kmc_thresholds t;
  check(kmc_coaching_thresholds(c.p, &t), "thresholds");
  const json tj{{"perf_median", t.perf_median},
                {"dprime_median", t.dprime_median},
                {"sensitivity_median", t.sensitivity_median},
                {"specificity_median", t.specificity_median}};
  write_file(dir / "summary.csv", summary.str());
  write_file(dir / "thresholds.json", tj.dump(2) + "\n");
  write_file(dir / "unclassified.json", unclassified.str() + "\n");
  const auto skipped = json::parse(unclassified.str());
  if (!skipped.empty())
    std::cerr << "warning: " << skipped.size() << " learner(s) left unclassified (undefined d'): " << skipped.dump()
              << "\n";
  std::cout << "wrote " << n << " reports to " << (dir / "reports").string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  // Training allocates many short-lived matrices; keep freed memory in the heap.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);

  CLI::App app{"kmcoach: knowledge-monitoring coach"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI config file; command-line flags take precedence");
  app.set_version_flag("--version", kmc_version());

  GraphArgs validate_args;
  auto* validate = app.add_subcommand("validate", "Check a graph file and list diagnostics");
  validate_args.add(validate);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort with ground truth");
  synth_args.add(synth);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train the HGNN on all know edges and save a checkpoint");
  train_args.graph.add(train);
  train_args.model.add(train, true);
  train->add_option("--out,-o", train_args.out, "Checkpoint path")->required();
  train->add_option("--history", train_args.history, "Per-epoch history JSON");
  train->add_flag("--quiet,-q", train_args.quiet, "No per-epoch progress");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Run the multi-trial AUC comparison");
  eval_args.graph.add(eval);
  eval_args.model.add(eval, false);
  eval->add_option("--truth", eval_args.truth, "Ground-truth sidecar (needed for TrueLatent)");
  eval->add_option("--out-dir,-o", eval_args.out_dir, "Directory for result tables")->required();
  eval->add_option("--methods", eval_args.methods, "Subset of RG,GCN,GAT,LP,HGNN,HGNN-noEINS")->delimiter(',');
  eval->add_option("--trials", eval_args.spec.trials, "Trials")->capture_default_str();
  eval->add_option("--ratio", eval_args.spec.ratio, "Training fraction of know edges")->capture_default_str();
  eval->add_option("--seed", eval_args.spec.base_seed, "Base seed (trial t uses seed + t)")->capture_default_str();
  eval->add_option("--mode", eval_args.mode, "TrueLatent or HeldOutExplicit (default: TrueLatent iff --truth)");
  eval->add_option("--jobs,-j", eval_args.spec.jobs, "Worker threads")->capture_default_str();
  eval->add_option("--lp-iterations", eval_args.spec.lp_iterations, "Label propagation sweeps")
      ->capture_default_str();
  eval->add_option("--lp-damping", eval_args.spec.lp_damping, "Label propagation damping")->capture_default_str();
  eval->add_option("--lp-tolerance", eval_args.spec.lp_tolerance, "Label propagation tolerance")
      ->capture_default_str();
  eval->add_option("--dataset", eval_args.dataset, "Dataset label for the Markdown table")->capture_default_str();

  AssessArgs assess_args;
  auto* assess = app.add_subcommand("assess", "Complete profiles and compute knowledge-monitoring metrics");
  assess_args.graph.add(assess);
  assess->add_option("--checkpoint,-c", assess_args.checkpoint, "Trained checkpoint")->required();
  assess->add_option("--out,-o", assess_args.out, "Metrics CSV")->required();
  assess->add_option("--theta", assess_args.theta, "Know threshold (default: the checkpoint's)");

  CoachArgs coach_args;
  auto* coach = app.add_subcommand("coach", "Classify learners and write feedback reports");
  coach_args.graph.add(coach);
  coach->add_option("--checkpoint,-c", coach_args.checkpoint, "Trained checkpoint")->required();
  coach->add_option("--out-dir,-o", coach_args.out_dir, "Output directory")->required();
  coach->add_option("--theta", coach_args.theta, "Know threshold (default: the checkpoint's)");
  coach->add_option("--related-depth", coach_args.related_depth, "Prerequisite hops for related errors")
      ->capture_default_str();
  coach->add_option("--thresholds", coach_args.thresholds, "Reference cohort medians JSON (default: this cohort)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kDomainError;
  }

  try {
    if (*validate) return cmd_validate(validate_args);
    if (*synth) {
      synth_args.finish();
      return cmd_synth(synth_args);
    }
    if (*train) return cmd_train(train_args);
    if (*eval) return cmd_eval(eval_args);
    if (*assess) return cmd_assess(assess_args);
    if (*coach) return cmd_coach(coach_args);
  } catch (const CliFailure& f) {
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomainError;
  }
  return kDomainError;
}
