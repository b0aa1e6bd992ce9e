#include "kmcoach/kmcoach.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "json.hpp"
#include "kmcoach/coach.hpp"
#include "kmcoach/error.hpp"
#include "kmcoach/eval.hpp"
#include "kmcoach/hgnn.hpp"
#include "kmcoach/monitoring.hpp"
#include "kmcoach/synth.hpp"

using nlohmann::json;

struct kmc_graph {
  kmc::HeteroGraph graph;
};

struct kmc_model {
  std::unique_ptr<kmc::HgnnModel> model;
  kmc::HgnnConfig config;
  kmc::TrainOptions options;
  std::unique_ptr<kmc::EmbeddingScorer> scorer;  // embeddings over the full perception subgraph
};

struct kmc_assessment {
  kmc::CohortAssessment cohort;
};

struct kmc_coaching {
  kmc::CoachResult result;
};

struct kmc_table {
  kmc::ExperimentSpec spec;
  kmc::ResultTable table;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_tag;

kmc_status status_of(kmc::ErrorKind kind) {
  switch (kind) {
    case kmc::ErrorKind::kInvalidArgument: return KMC_ERR_INVALID_ARGUMENT;
    case kmc::ErrorKind::kParse: return KMC_ERR_PARSE;
    case kmc::ErrorKind::kValidation: return KMC_ERR_VALIDATION;
    case kmc::ErrorKind::kIo: return KMC_ERR_IO;
    case kmc::ErrorKind::kDomain: return KMC_ERR_DOMAIN;
    case kmc::ErrorKind::kFingerprint: return KMC_ERR_FINGERPRINT;
  }
  return KMC_ERR_INTERNAL;
}

kmc_status set_error(kmc_status status, std::string tag, std::string message) {
  g_tag = std::move(tag);
  g_error = std::move(message);
  return status;
}

// Runs `body`, translating exceptions into status codes and the thread-local error.
template <class F>
kmc_status guarded(F&& body) {
  g_error.clear();
  g_tag.clear();
  try {
    body();
    return KMC_OK;
  } catch (const kmc::Error& e) {
    return set_error(status_of(e.kind()), e.tag(), e.what());
  } catch (const json::exception& e) {
    return set_error(KMC_ERR_PARSE, "parse_error", e.what());
  } catch (const std::bad_alloc&) {
    return set_error(KMC_ERR_INTERNAL, "out_of_memory", "out of memory");
  } catch (const std::exception& e) {
    return set_error(KMC_ERR_INTERNAL, "internal", e.what());
  }
}

void require(bool ok, const char* what) {
  if (!ok) kmc::fail(kmc::ErrorKind::kInvalidArgument, "null_argument", std::string(what) + " must not be null");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

kmc::SynthConfig to_cpp(const kmc_synth_config& c) {
  kmc::SynthConfig s;
  s.n_learners = c.n_learners;
  s.n_concepts = c.n_concepts;
  s.n_items = c.n_items;
  s.dag_layers = c.dag_layers;
  s.prereq_prob = c.prereq_prob;
  s.max_layer_gap = c.max_layer_gap;
  s.mastery_base = c.mastery_base;
  s.mastery_penalty = c.mastery_penalty;
  s.slip = c.slip;
  s.guess = c.guess;
  s.mention_prob = c.mention_prob;
  s.mention_unassessed = c.mention_unassessed != 0;
  for (int i = 0; i < 5; ++i) s.persona_mix[static_cast<std::size_t>(i)] = c.persona_mix[i];
  s.seed = c.seed;
  return s;
}

void from_cpp(const kmc::SynthConfig& s, kmc_synth_config* c) {
  c->n_learners = s.n_learners;
  c->n_concepts = s.n_concepts;
  c->n_items = s.n_items;
  c->dag_layers = s.dag_layers;
  c->prereq_prob = s.prereq_prob;
  c->max_layer_gap = s.max_layer_gap;
  c->mastery_base = s.mastery_base;
  c->mastery_penalty = s.mastery_penalty;
  c->slip = s.slip;
  c->guess = s.guess;
  c->mention_prob = s.mention_prob;
  c->mention_unassessed = s.mention_unassessed ? 1 : 0;
  for (int i = 0; i < 5; ++i) c->persona_mix[i] = s.persona_mix[static_cast<std::size_t>(i)];
  c->seed = s.seed;
}

kmc::TrainOptions to_cpp(const kmc_model_config& c) {
  kmc::TrainOptions o;
  o.config.embed_dim = c.embed_dim;
  o.config.layers = c.layers;
  o.config.learning_rate = c.learning_rate;
  o.config.epochs = c.epochs;
  o.config.threshold = c.threshold;
  o.config.weight_decay = c.weight_decay;
  o.config.seed = c.seed;
  if (c.n_e) o.n_e = c.n_e;
  o.rho = c.rho;
  o.strategy = c.strategy == KMC_NEG_UNIFORM_UNMENTIONED ? kmc::NegativeStrategy::kUniformUnmentioned
                                                          : kmc::NegativeStrategy::kEins;
  return o;
}

void from_cpp(const kmc::HgnnConfig& h, const kmc::TrainOptions& o, kmc_model_config* c) {
  c->embed_dim = h.embed_dim;
  c->layers = h.layers;
  c->learning_rate = h.learning_rate;
  c->epochs = h.epochs;
  c->threshold = h.threshold;
  c->weight_decay = h.weight_decay;
  c->seed = h.seed;
  c->n_e = o.n_e.value_or(0);
  c->rho = o.rho;
  c->strategy = o.strategy == kmc::NegativeStrategy::kUniformUnmentioned ? KMC_NEG_UNIFORM_UNMENTIONED : KMC_NEG_EINS;
}

void attach_scorer(kmc_model& m, const kmc::HeteroGraph& graph) {
  m.scorer = std::make_unique<kmc::EmbeddingScorer>(
      kmc::Method::kHGNN, kmc::forward(*m.model, kmc::build_perception_subgraph(graph)), graph.num_learners());
}

const kmc::CoachedLearner& coached(const kmc_coaching* c, size_t index) {
  require(c, "coaching");
  if (index >= c->result.learners.size())
    kmc::fail(kmc::ErrorKind::kInvalidArgument, "index_out_of_range", "report index out of range");
  return c->result.learners[index];
}

}  // namespace

extern "C" {

const char* kmc_version(void) { return "1.0.0"; }

const char* kmc_status_name(kmc_status status) {
  switch (status) {
    case KMC_OK: return "ok";
    case KMC_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case KMC_ERR_PARSE: return "parse_error";
    case KMC_ERR_VALIDATION: return "validation_error";
    case KMC_ERR_IO: return "io_error";
    case KMC_ERR_DOMAIN: return "domain_error";
    case KMC_ERR_FINGERPRINT: return "fingerprint_mismatch";
    case KMC_ERR_INTERNAL: return "internal_error";
  }
  return "unknown";
}

const char* kmc_last_error(void) { return g_error.c_str(); }
const char* kmc_last_error_tag(void) { return g_tag.c_str(); }
void kmc_string_free(char* s) { std::free(s); }

// ---- graph

kmc_status kmc_graph_load(const char* path, const char* responses_csv, kmc_graph** out) {
  return guarded([&] {
    require(path && out, "path and out");
    *out = nullptr;
    std::optional<std::filesystem::path> csv;
    if (responses_csv) csv = responses_csv;
    *out = new kmc_graph{kmc::load_graph(path, csv)};
  });
}

kmc_status kmc_graph_validate_file(const char* path, char** diagnostics_json) {
  bool invalid = false;
  const auto status = guarded([&] {
    require(path && diagnostics_json, "path and diagnostics_json");
    *diagnostics_json = nullptr;
    const auto diags = kmc::validate(kmc::read_graph_records(path));
    json doc = json::array();
    for (const auto& d : diags) doc.push_back({{"code", d.code}, {"ids", d.ids}, {"message", d.message}});
    *diagnostics_json = dup(doc.dump());
    invalid = !diags.empty();
  });
  if (status == KMC_OK && invalid) return set_error(KMC_ERR_VALIDATION, "invalid_graph", "graph failed validation");
  return status;
}

kmc_status kmc_graph_save(const kmc_graph* graph, const char* path) {
  return guarded([&] {
    require(graph && path, "graph and path");
    kmc::save_graph(graph->graph, path);
  });
}

void kmc_graph_free(kmc_graph* graph) { delete graph; }
size_t kmc_graph_num_learners(const kmc_graph* graph) { return graph ? graph->graph.num_learners() : 0; }
size_t kmc_graph_num_concepts(const kmc_graph* graph) { return graph ? graph->graph.num_concepts() : 0; }
size_t kmc_graph_num_assessments(const kmc_graph* graph) { return graph ? graph->graph.num_assessments() : 0; }

kmc_status kmc_graph_fingerprint(const kmc_graph* graph, char** out) {
  return guarded([&] {
    require(graph && out, "graph and out");
    *out = dup(graph->graph.fingerprint());
  });
}

kmc_status kmc_graph_stats_json(const kmc_graph* graph, char** out) {
  return guarded([&] {
    require(graph && out, "graph and out");
    const auto& g = graph->graph;
    const json doc{{"learners", g.num_learners()},
                   {"concepts", g.num_concepts()},
                   {"assessments", g.num_assessments()},
                   {"prerequisites", g.prerequisites().size()},
                   {"know_edges", g.know_edges().size()},
                   {"dontknow_edges", g.dontknow_edges().size()},
                   {"responses", g.num_responses()},
                   {"assessed_concepts", g.assessed_concepts().size()},
                   {"latent_pairs", kmc::count_latent(g)}};
    *out = dup(doc.dump());
  });
}

// ---- synth

void kmc_synth_config_default(kmc_synth_config* config) {
  if (config) from_cpp(kmc::SynthConfig{}, config);
}

void kmc_synth_config_paper_scale(kmc_synth_config* config) {
  if (config) from_cpp(kmc::SynthConfig::paper_scale(), config);
}

kmc_status kmc_synth(const kmc_synth_config* config, kmc_graph** graph, char** truth_json) {
  return guarded([&] {
    require(config && graph, "config and graph");
    *graph = nullptr;
    if (truth_json) *truth_json = nullptr;
    auto cohort = kmc::gen_cohort(to_cpp(*config));
    auto built = std::make_unique<kmc_graph>(kmc_graph{kmc::HeteroGraph::build(cohort.records)});
    if (truth_json) *truth_json = dup(kmc::ground_truth_to_json(cohort.truth, built->graph).dump(2));
    *graph = built.release();
  });
}

// ---- model

void kmc_model_config_default(kmc_model_config* config) {
  if (config) from_cpp(kmc::HgnnConfig{}, kmc::TrainOptions{}, config);
}

kmc_status kmc_train(const kmc_graph* graph, const kmc_model_config* config, kmc_epoch_callback callback, void* user,
                     kmc_model** out, char** history_json) {
  return guarded([&] {
    require(graph && config && out, "graph, config and out");
    *out = nullptr;
    if (history_json) *history_json = nullptr;
    const auto& g = graph->graph;
    auto m = std::make_unique<kmc_model>();
    m->options = to_cpp(*config);
    m->config = m->options.config;
    m->config.validate();
    if (callback)
      m->options.on_epoch = [callback, user](int epoch, const kmc::EpochStats& s) {
        callback(epoch, s.loss, s.train_auc, s.wall_ms, user);
      };
    m->model = std::make_unique<kmc::HgnnModel>(m->config, g.num_learners(), g.num_concepts());
    const auto subgraph = kmc::build_perception_subgraph(g);
    const auto history = kmc::train(*m->model, g, kmc::full_training_split(subgraph), m->options);
    m->options.on_epoch = nullptr;
    attach_scorer(*m, g);
    if (history_json) {
      json doc = json::array();
      for (std::size_t i = 0; i < history.size(); ++i)
        doc.push_back({{"epoch", i + 1},
                       {"loss", history[i].loss},
                       {"train_auc", history[i].train_auc},
                       {"wall_ms", history[i].wall_ms}});
      *history_json = dup(doc.dump());
    }
    *out = m.release();
  });
}

kmc_status kmc_model_save(const kmc_model* model, const kmc_graph* graph, const char* path) {
  return guarded([&] {
    require(model && graph && path, "model, graph and path");
    kmc::save_checkpoint(*model->model, model->config, graph->graph, path);
  });
}

kmc_status kmc_model_load(const char* path, const kmc_graph* graph, kmc_model** out) {
  return guarded([&] {
    require(path && graph && out, "path, graph and out");
    *out = nullptr;
    auto m = std::make_unique<kmc_model>();
    m->config = kmc::read_checkpoint(path).config;
    m->options.config = m->config;
    m->model = kmc::load_checkpoint(path, graph->graph);
    attach_scorer(*m, graph->graph);
    *out = m.release();
  });
}

void kmc_model_free(kmc_model* model) { delete model; }

kmc_status kmc_model_config_get(const kmc_model* model, kmc_model_config* out) {
  return guarded([&] {
    require(model && out, "model and out");
    from_cpp(model->config, model->options, out);
  });
}

kmc_status kmc_model_score(const kmc_model* model, const kmc_graph* graph, const char* learner, const char* concept_id,
                           double* out) {
  return guarded([&] {
    require(model && graph && learner && concept_id && out, "arguments");
    const auto l = graph->graph.find_learner(learner);
    const auto k = graph->graph.find_concept(concept_id);
    if (!l) kmc::fail(kmc::ErrorKind::kInvalidArgument, "unknown_learner", std::string("unknown learner ") + learner);
    if (!k) kmc::fail(kmc::ErrorKind::kInvalidArgument, "unknown_concept", std::string("unknown concept ") + concept_id);
    *out = model->scorer->score(*l, *k);
  });
}

// ---- assessment

kmc_status kmc_assess(const kmc_graph* graph, const kmc_model* model, double theta, kmc_assessment** out) {
  return guarded([&] {
    require(graph && model && out, "graph, model and out");
    *out = nullptr;
    const auto inferred = kmc::infer_lps(*model->scorer, graph->graph, theta);
    *out = new kmc_assessment{kmc::assess_cohort(graph->graph, inferred)};
  });
}

void kmc_assessment_free(kmc_assessment* assessment) { delete assessment; }

size_t kmc_assessment_num_learners(const kmc_assessment* assessment) {
  return assessment ? assessment->cohort.learners.size() : 0;
}

kmc_status kmc_assessment_metrics_csv(const kmc_assessment* assessment, const kmc_graph* graph, char** out) {
  return guarded([&] {
    require(assessment && graph && out, "assessment, graph and out");
    *out = dup(kmc::metrics_csv(assessment->cohort, graph->graph));
  });
}

// ---- coaching

kmc_status kmc_coach(const kmc_graph* graph, const kmc_assessment* assessment, const kmc_thresholds* reference,
                     int related_depth, kmc_coaching** out) {
  return guarded([&] {
    require(graph && assessment && out, "graph, assessment and out");
    *out = nullptr;
    if (related_depth < 0)
      kmc::fail(kmc::ErrorKind::kInvalidArgument, "invalid_depth", "related_depth must be non-negative");
    std::optional<kmc::CohortThresholds> ref;
    if (reference)
      ref = kmc::CohortThresholds{reference->perf_median, reference->dprime_median, reference->sensitivity_median,
                                  reference->specificity_median};
    *out = new kmc_coaching{kmc::coach_cohort(graph->graph, assessment->cohort, ref, nullptr, related_depth)};
  });
}

void kmc_coaching_free(kmc_coaching* coaching) { delete coaching; }

kmc_status kmc_coaching_thresholds(const kmc_coaching* coaching, kmc_thresholds* out) {
  return guarded([&] {
    require(coaching && out, "coaching and out");
    const auto& t = coaching->result.thresholds;
    *out = {t.perf_median, t.dprime_median, t.sensitivity_median, t.specificity_median};
  });
}

size_t kmc_coaching_num_reports(const kmc_coaching* coaching) {
  return coaching ? coaching->result.learners.size() : 0;
}

kmc_status kmc_coaching_learner(const kmc_coaching* coaching, size_t index, char** learner_id) {
  return guarded([&] {
    require(learner_id, "learner_id");
    *learner_id = dup(coached(coaching, index).report.learner);
  });
}

kmc_status kmc_coaching_pattern(const kmc_coaching* coaching, size_t index, char** pattern_tag) {
  return guarded([&] {
    require(pattern_tag, "pattern_tag");
    *pattern_tag = dup(kmc::to_string(coached(coaching, index).pattern.tag));
  });
}

kmc_status kmc_coaching_report_json(const kmc_coaching* coaching, size_t index, char** out) {
  return guarded([&] {
    require(out, "out");
    *out = dup(kmc::report_to_json(coached(coaching, index).report).dump(2) + "\n");
  });
}

kmc_status kmc_coaching_report_markdown(const kmc_coaching* coaching, const kmc_graph* graph, size_t index,
                                        char** out) {
  return guarded([&] {
    require(graph && out, "graph and out");
    *out = dup(kmc::report_to_markdown(coached(coaching, index).report, graph->graph));
  });
}

kmc_status kmc_coaching_summary_csv(const kmc_coaching* coaching, const kmc_graph* graph, char** out) {
  return guarded([&] {
    require(coaching && graph && out, "coaching, graph and out");
    *out = dup(kmc::cohort_summary_csv(coaching->result, graph->graph));
  });
}

kmc_status kmc_coaching_unclassified_json(const kmc_coaching* coaching, const kmc_graph* graph, char** out) {
  return guarded([&] {
    require(coaching && graph && out, "coaching, graph and out");
    json doc = json::array();
    for (auto l : coaching->result.unclassified) doc.push_back(graph->graph.learner_id(l));
    *out = dup(doc.dump());
  });
}

kmc_status kmc_report_validate(const char* report_json, char** errors_json) {
  bool invalid = false;
  const auto status = guarded([&] {
    require(report_json && errors_json, "report_json and errors_json");
    *errors_json = nullptr;
    const auto errors = kmc::validate_report_json(json::parse(report_json));
    *errors_json = dup(json(errors).dump());
    invalid = !errors.empty();
  });
  if (status == KMC_OK && invalid) return set_error(KMC_ERR_VALIDATION, "schema_violation", "report failed validation");
  return status;
}

// ---- evaluation

void kmc_eval_spec_default(kmc_eval_spec* spec) {
  if (!spec) return;
  const kmc::ExperimentSpec s;
  spec->methods = KMC_METHOD_ALL;
  spec->trials = s.trials;
  spec->ratio = s.ratio;
  spec->base_seed = s.base_seed;
  spec->mode = s.eval_mode == kmc::EvalMode::kTrueLatent ? KMC_EVAL_TRUE_LATENT : KMC_EVAL_HELD_OUT_EXPLICIT;
  kmc::TrainOptions o;
  o.config = s.model;
  o.n_e = s.n_e;
  o.rho = s.rho;
  from_cpp(s.model, o, &spec->model);
  spec->lp_iterations = s.lp.iterations;
  spec->lp_damping = s.lp.damping;
  spec->lp_tolerance = s.lp.tolerance;
  spec->jobs = s.jobs;
}

kmc_status kmc_eval(const kmc_graph* graph, const char* truth_json, const kmc_eval_spec* spec, const char* dataset,
                    kmc_table** out) {
  return guarded([&] {
    require(graph && spec && out, "graph, spec and out");
    *out = nullptr;
    auto t = std::make_unique<kmc_table>();
    auto& s = t->spec;
    s.methods.clear();
    for (int m = 0; m < 6; ++m)
      if (spec->methods & (1u << m)) s.methods.push_back(static_cast<kmc::Method>(m));
    s.trials = spec->trials;
    s.ratio = spec->ratio;
    s.base_seed = spec->base_seed;
    s.eval_mode = spec->mode == KMC_EVAL_TRUE_LATENT ? kmc::EvalMode::kTrueLatent : kmc::EvalMode::kHeldOutExplicit;
    const auto options = to_cpp(spec->model);
    s.model = options.config;
    s.n_e = options.n_e;
    s.rho = options.rho;
    s.lp = {spec->lp_iterations, spec->lp_damping, spec->lp_tolerance};
    s.jobs = spec->jobs;
    std::vector<kmc::LatentLabel> labels;
    if (truth_json) labels = kmc::parse_latent_labels(json::parse(truth_json), graph->graph);
    t->table = kmc::run_experiment(graph->graph, truth_json ? &labels : nullptr, s, dataset ? dataset : "synthetic");
    *out = t.release();
  });
}

void kmc_table_free(kmc_table* table) { delete table; }

kmc_status kmc_table_emit(const kmc_table* table, kmc_table_format format, char** out) {
  return guarded([&] {
    require(table && out, "table and out");
    const auto f = format == KMC_TABLE_MARKDOWN ? kmc::TableFormat::kMarkdown
                   : format == KMC_TABLE_JSON   ? kmc::TableFormat::kJson
                                                : kmc::TableFormat::kCsv;
    *out = dup(kmc::emit_table(table->table, f));
  });
}

kmc_status kmc_table_manifest(const kmc_table* table, const kmc_graph* graph, char** out) {
  return guarded([&] {
    require(table && graph && out, "table, graph and out");
    *out = dup(kmc::run_manifest(table->spec, table->table, graph->graph).dump(2) + "\n");
  });
}

kmc_status kmc_table_mean(const kmc_table* table, const char* method, double* mean, double* sd) {
  return guarded([&] {
    require(table && method && mean, "table, method and mean");
    const auto& r = table->table.at(kmc::method_from_string(method));
    *mean = r.mean;
    if (sd) *sd = r.sd;
  });
}

}  // extern "C"
