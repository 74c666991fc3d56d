/*
 * scnn - stacked ensembles of shallow convolutional text classifiers.
 *
 * C interface to the core library. Every function returns an scnn_status;
 * on failure a message is available from scnn_last_error() on the calling
 * thread until the next call into the library. Objects are opaque handles
 * released with their *_free function (passing NULL is allowed).
 */
#ifndef SCNN_SCNN_H
#define SCNN_SCNN_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define SCNN_API __declspec(dllexport)
#else
#define SCNN_API __attribute__((visibility("default")))
#endif

/* Status codes double as the command-line exit codes. */
typedef enum scnn_status {
  SCNN_OK = 0,
  SCNN_ERR_USAGE = 1,   /* invalid argument, option or configuration */
  SCNN_ERR_DATA = 2,    /* unreadable, malformed or inconsistent input */
  SCNN_ERR_NUMERIC = 3  /* non-finite values during training or checking */
} scnn_status;

typedef struct scnn_dataset scnn_dataset;
typedef struct scnn_embeddings scnn_embeddings;
typedef struct scnn_ensemble scnn_ensemble;

SCNN_API const char* scnn_version(void);
SCNN_API const char* scnn_last_error(void);

/* ---- datasets (TSV: id<TAB>label<TAB>text or id<TAB>text) ---- */

/* labeled: 1 labeled, 0 unlabeled, -1 detect from the first line. */
SCNN_API scnn_status scnn_dataset_load(const char* path, int labeled, scnn_dataset** out);
SCNN_API size_t scnn_dataset_size(const scnn_dataset* dataset);
SCNN_API int scnn_dataset_is_labeled(const scnn_dataset* dataset);
SCNN_API scnn_status scnn_dataset_write(const scnn_dataset* dataset, const char* path);
SCNN_API void scnn_dataset_free(scnn_dataset* dataset);

/* ---- embedding registry (word2vec text format) ---- */

SCNN_API scnn_status scnn_embeddings_create(scnn_embeddings** out);
SCNN_API scnn_status scnn_embeddings_load(scnn_embeddings* registry, const char* name, const char* path);
/* Adds every entry of "name=path[,name=path...]". */
SCNN_API scnn_status scnn_embeddings_load_spec(scnn_embeddings* registry, const char* spec);
SCNN_API size_t scnn_embeddings_dim(const scnn_embeddings* registry, const char* name);
SCNN_API void scnn_embeddings_free(scnn_embeddings* registry);

/* ---- training runs ---- */

typedef struct scnn_schedule {
  int max_epochs;       /* default 30 */
  int patience;         /* epochs without dev improvement before annealing, default 2 */
  int restarts_allowed; /* default 2 */
  double lr_decay;      /* default 0.5 */
} scnn_schedule;

typedef struct scnn_run_options {
  const char* train_path;
  const char* embeddings;  /* "name=path[,name=path...]" */
  int folds;               /* default 5 */
  uint64_t seed;
  int parallelism;         /* default 1; never changes results */
  int unrestricted_space;  /* allow values outside the published ranges */
  int record_wall_time;    /* fill leaderboard wall_time_s (non-reproducible) */
  scnn_schedule schedule;
  const char* out_dir;
  /* search only */
  size_t n_trials;         /* default 99 */
  const char* space_path;  /* JSON domains; requires unrestricted_space */
  /* train only */
  const char* config_path; /* JSON with exactly the eight hyperparameter keys */
} scnn_run_options;

SCNN_API void scnn_run_options_init(scnn_run_options* options);

/* Random search; writes out_dir/{manifest.json, leaderboard.csv, trials/}. */
SCNN_API scnn_status scnn_search(const scnn_run_options* options);
/* One configuration's fold ensemble, written as a single-trial run. */
SCNN_API scnn_status scnn_train(const scnn_run_options* options, double* cv_score);

/* Writes one ensemble manifest per K (run_dir/ensemble_top<K>.json, or
 * out_path when exactly one K is given). With test_path and embeddings set,
 * also writes the top-K report CSV (report_path, default
 * run_dir/topk_report.csv). */
SCNN_API scnn_status scnn_stack(const char* run_dir, const size_t* ks, size_t n_ks, const char* out_path,
                                const char* test_path, const char* embeddings, const char* report_path);

/* ---- ensembles ---- */

SCNN_API scnn_status scnn_ensemble_load(const char* manifest_path, int verify_scores, scnn_ensemble** out);
SCNN_API size_t scnn_ensemble_k(const scnn_ensemble* ensemble);
SCNN_API size_t scnn_ensemble_model_count(const scnn_ensemble* ensemble);
SCNN_API size_t scnn_ensemble_warning_count(const scnn_ensemble* ensemble);
SCNN_API const char* scnn_ensemble_warning(const scnn_ensemble* ensemble, size_t index);
/* Averaged class probabilities, row-major into probs[3 * dataset_size]. */
SCNN_API scnn_status scnn_ensemble_predict(const scnn_ensemble* ensemble, const scnn_embeddings* registry,
                                           const scnn_dataset* dataset, double* probs);
SCNN_API void scnn_ensemble_free(scnn_ensemble* ensemble);

/* Manifest + input TSV -> predictions TSV id<TAB>pred<TAB>p1<TAB>p2<TAB>p3.
 * On success, manifest warnings (if any) are left in scnn_last_error(). */
SCNN_API scnn_status scnn_predict_file(const char* manifest_path, const char* input_path, const char* embeddings,
                                       const char* out_path, int verify_scores);

/* ---- evaluation ---- */

typedef struct scnn_metrics {
  double precision[3];
  double recall[3];
  double f1[3];
  double precision_m; /* micro average over classes 1 and 2 */
  double recall_m;
  double f1_m;
} scnn_metrics;

/* gold TSV + predictions TSV -> metrics; JSON written when out_path is set. */
SCNN_API scnn_status scnn_evaluate_files(const char* gold_path, const char* pred_path, const char* out_path,
                                         scnn_metrics* metrics);
/* Metrics from a 3x3 confusion matrix, counts[gold*3 + pred]. */
SCNN_API scnn_status scnn_metrics_from_confusion(const int64_t* counts, scnn_metrics* metrics);
SCNN_API double scnn_f1(double precision, double recall);

/* ---- tooling ---- */

/* Finite-difference check of all gradients on random tiny networks. */
SCNN_API scnn_status scnn_gradcheck(uint64_t seed, int cases, double* max_relative_error);

/* Deterministic keyword-separable corpus: train.tsv, test.tsv,
 * test_unlabeled.tsv, godin.txt, shin.txt. */
SCNN_API scnn_status scnn_synth(uint64_t seed, size_t n_train, size_t n_test, size_t dim, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* SCNN_SCNN_H */
