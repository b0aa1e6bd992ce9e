#ifndef KMCOACH_H
#define KMCOACH_H

/*
 * C interface to the kmcoach library.
 *
 * Objects are opaque handles released with the matching *_free function.
 * Every fallible call returns a kmc_status; on failure the thread-local
 * kmc_last_error() / kmc_last_error_tag() describe the cause. Strings returned
 * through char** out-parameters are heap allocated and must be released with
 * kmc_string_free().
 */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(KMC_BUILDING_LIBRARY)
#define KMC_API __attribute__((visibility("default")))
#else
#define KMC_API
#endif

typedef enum kmc_status {
  KMC_OK = 0,
  KMC_ERR_INVALID_ARGUMENT = 1,
  KMC_ERR_PARSE = 2,
  KMC_ERR_VALIDATION = 3,
  KMC_ERR_IO = 4,
  KMC_ERR_DOMAIN = 5,
  KMC_ERR_FINGERPRINT = 6,
  KMC_ERR_INTERNAL = 7
} kmc_status;

typedef struct kmc_graph kmc_graph;
typedef struct kmc_model kmc_model;
typedef struct kmc_assessment kmc_assessment;
typedef struct kmc_coaching kmc_coaching;
typedef struct kmc_table kmc_table;

KMC_API const char* kmc_version(void);
KMC_API const char* kmc_status_name(kmc_status status);
/* Message / machine-readable tag of the last failure on this thread ("" if none). */
KMC_API const char* kmc_last_error(void);
KMC_API const char* kmc_last_error_tag(void);
KMC_API void kmc_string_free(char* s);

/* ---- graph ------------------------------------------------------------ */

/* responses_csv may be NULL. */
KMC_API kmc_status kmc_graph_load(const char* path, const char* responses_csv, kmc_graph** out);
/* Parses and validates without building. *diagnostics_json receives a JSON
 * array of {code, ids, message}; the call returns KMC_ERR_VALIDATION when it is
 * non-empty. */
KMC_API kmc_status kmc_graph_validate_file(const char* path, char** diagnostics_json);
KMC_API kmc_status kmc_graph_save(const kmc_graph* graph, const char* path);
KMC_API void kmc_graph_free(kmc_graph* graph);
KMC_API size_t kmc_graph_num_learners(const kmc_graph* graph);
KMC_API size_t kmc_graph_num_concepts(const kmc_graph* graph);
KMC_API size_t kmc_graph_num_assessments(const kmc_graph* graph);
KMC_API kmc_status kmc_graph_fingerprint(const kmc_graph* graph, char** out);
/* JSON object with node/edge counts and the number of latent pairs. */
KMC_API kmc_status kmc_graph_stats_json(const kmc_graph* graph, char** out);

/* ---- synthetic cohorts -------------------------------------------------- */

typedef struct kmc_synth_config {
  size_t n_learners;
  size_t n_concepts;
  size_t n_items;
  int dag_layers;
  double prereq_prob;
  int max_layer_gap; /* 0 = unlimited */
  double mastery_base;
  double mastery_penalty;
  double slip;
  double guess;
  double mention_prob;
  int mention_unassessed; /* boolean */
  double persona_mix[5];  /* WC AL UC OC LC */
  uint64_t seed;
} kmc_synth_config;

KMC_API void kmc_synth_config_default(kmc_synth_config* config);
KMC_API void kmc_synth_config_paper_scale(kmc_synth_config* config);
/* truth_json (may be NULL) receives the ground-truth sidecar document. */
KMC_API kmc_status kmc_synth(const kmc_synth_config* config, kmc_graph** graph, char** truth_json);

/* ---- model -------------------------------------------------------------- */

typedef enum kmc_negative_strategy { KMC_NEG_EINS = 0, KMC_NEG_UNIFORM_UNMENTIONED = 1 } kmc_negative_strategy;

typedef struct kmc_model_config {
  int embed_dim;
  int layers;
  double learning_rate;
  int epochs;
  double threshold;
  double weight_decay;
  uint64_t seed;
  size_t n_e; /* 0 = cohort mean explicit pool size */
  double rho;
  kmc_negative_strategy strategy;
} kmc_model_config;

/* Progress hook invoked after every epoch's update. */
typedef void (*kmc_epoch_callback)(int epoch, double loss, double train_auc, int64_t wall_ms, void* user);

KMC_API void kmc_model_config_default(kmc_model_config* config);
/* Trains the HGNN on every know edge of the graph. history_json (may be NULL)
 * receives [{epoch, loss, train_auc, wall_ms}]. */
KMC_API kmc_status kmc_train(const kmc_graph* graph, const kmc_model_config* config, kmc_epoch_callback callback,
                             void* user, kmc_model** out, char** history_json);
KMC_API kmc_status kmc_model_save(const kmc_model* model, const kmc_graph* graph, const char* path);
/* Fails with KMC_ERR_FINGERPRINT when the checkpoint was trained on another graph. */
KMC_API kmc_status kmc_model_load(const char* path, const kmc_graph* graph, kmc_model** out);
KMC_API void kmc_model_free(kmc_model* model);
KMC_API kmc_status kmc_model_config_get(const kmc_model* model, kmc_model_config* out);
KMC_API kmc_status kmc_model_score(const kmc_model* model, const kmc_graph* graph, const char* learner,
                                   const char* concept_id, double* out);

/* ---- knowledge-monitoring assessment ------------------------------------ */

/* Completes every profile with thresholded scores (theta in (0,1]) and computes
 * the per-learner contingency table and SDT metrics. */
KMC_API kmc_status kmc_assess(const kmc_graph* graph, const kmc_model* model, double theta, kmc_assessment** out);
KMC_API void kmc_assessment_free(kmc_assessment* assessment);
KMC_API size_t kmc_assessment_num_learners(const kmc_assessment* assessment);
KMC_API kmc_status kmc_assessment_metrics_csv(const kmc_assessment* assessment, const kmc_graph* graph, char** out);

/* ---- coaching ----------------------------------------------------------- */

typedef struct kmc_thresholds {
  double perf_median;
  double dprime_median;
  double sensitivity_median;
  double specificity_median;
} kmc_thresholds;

/* reference may be NULL to use the cohort's own medians. */
KMC_API kmc_status kmc_coach(const kmc_graph* graph, const kmc_assessment* assessment, const kmc_thresholds* reference,
                             int related_depth, kmc_coaching** out);
KMC_API void kmc_coaching_free(kmc_coaching* coaching);
KMC_API kmc_status kmc_coaching_thresholds(const kmc_coaching* coaching, kmc_thresholds* out);
KMC_API size_t kmc_coaching_num_reports(const kmc_coaching* coaching);
KMC_API kmc_status kmc_coaching_learner(const kmc_coaching* coaching, size_t index, char** learner_id);
KMC_API kmc_status kmc_coaching_pattern(const kmc_coaching* coaching, size_t index, char** pattern_tag);
KMC_API kmc_status kmc_coaching_report_json(const kmc_coaching* coaching, size_t index, char** out);
KMC_API kmc_status kmc_coaching_report_markdown(const kmc_coaching* coaching, const kmc_graph* graph, size_t index,
                                                char** out);
KMC_API kmc_status kmc_coaching_summary_csv(const kmc_coaching* coaching, const kmc_graph* graph, char** out);
/* JSON array of learner ids left unclassified (undefined d'). */
KMC_API kmc_status kmc_coaching_unclassified_json(const kmc_coaching* coaching, const kmc_graph* graph, char** out);
/* Validates a report document; *errors_json receives a JSON array of violations
 * and the call returns KMC_ERR_VALIDATION when it is non-empty. */
KMC_API kmc_status kmc_report_validate(const char* report_json, char** errors_json);

/* ---- evaluation ----------------------------------------------------------- */

enum {
  KMC_METHOD_RG = 1 << 0,
  KMC_METHOD_GCN = 1 << 1,
  KMC_METHOD_GAT = 1 << 2,
  KMC_METHOD_LP = 1 << 3,
  KMC_METHOD_HGNN = 1 << 4,
  KMC_METHOD_HGNN_NO_EINS = 1 << 5,
  KMC_METHOD_ALL = (1 << 6) - 1
};

typedef enum kmc_eval_mode { KMC_EVAL_HELD_OUT_EXPLICIT = 0, KMC_EVAL_TRUE_LATENT = 1 } kmc_eval_mode;
typedef enum kmc_table_format { KMC_TABLE_CSV = 0, KMC_TABLE_MARKDOWN = 1, KMC_TABLE_JSON = 2 } kmc_table_format;

typedef struct kmc_eval_spec {
  unsigned methods; /* KMC_METHOD_* bitmask */
  int trials;
  double ratio;
  uint64_t base_seed;
  kmc_eval_mode mode;
  kmc_model_config model; /* seed is replaced per trial */
  int lp_iterations;
  double lp_damping;
  double lp_tolerance;
  int jobs;
} kmc_eval_spec;

KMC_API void kmc_eval_spec_default(kmc_eval_spec* spec);
/* truth_json is the ground-truth document (required in TRUE_LATENT mode, else may be NULL). */
KMC_API kmc_status kmc_eval(const kmc_graph* graph, const char* truth_json, const kmc_eval_spec* spec,
                            const char* dataset, kmc_table** out);
KMC_API void kmc_table_free(kmc_table* table);
KMC_API kmc_status kmc_table_emit(const kmc_table* table, kmc_table_format format, char** out);
KMC_API kmc_status kmc_table_manifest(const kmc_table* table, const kmc_graph* graph, char** out);
/* method is a name such as "HGNN" or "HGNN-noEINS". */
KMC_API kmc_status kmc_table_mean(const kmc_table* table, const char* method, double* mean, double* sd);

#ifdef __cplusplus
}
#endif

#endif
