/* Deep k-Means C API.
 *
 * Opaque handles + status codes over the C++ core. Every function returns
 * DKM_OK on success; on failure the thread-local message from
 * dkm_last_error() describes what went wrong.
 */
#ifndef DEEPKM_H
#define DEEPKM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DKM_API __declspec(dllexport)
#else
#define DKM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dkm_status {
    DKM_OK = 0,
    DKM_ERR_INVALID_ARGUMENT = 1, /* bad parameter or config field */
    DKM_ERR_FORMAT = 2,           /* malformed input file */
    DKM_ERR_IO = 3,               /* filesystem failure */
    DKM_ERR_NUMERIC = 4,          /* non-finite values during computation */
    DKM_ERR_CONTRACT = 5,         /* API contract violation */
    DKM_ERR_DEGENERATE = 6,       /* input makes the computation undefined */
    DKM_ERR_UNKNOWN = 7
} dkm_status;

typedef struct dkm_config_t dkm_config_t;
typedef struct dkm_dataset_t dkm_dataset_t;

DKM_API const char* dkm_status_name(dkm_status status);

/* Message describing the most recent failure on this thread. */
DKM_API const char* dkm_last_error(void);

/* ------------------------------------------------------------------ */
/* Experiment configuration (flat key = value fields).                 */

DKM_API dkm_status dkm_config_create(dkm_config_t** out);
DKM_API dkm_status dkm_config_load(const char* path, dkm_config_t** out);
DKM_API dkm_status dkm_config_set(dkm_config_t* config, const char* key, const char* value);
/* Copies the value for the key into buf (NUL-terminated, truncating). */
DKM_API dkm_status dkm_config_get(const dkm_config_t* config, const char* key, char* buf,
                                  size_t buf_len);
DKM_API dkm_status dkm_config_validate(const dkm_config_t* config);
DKM_API void dkm_config_free(dkm_config_t* config);

/* ------------------------------------------------------------------ */
/* Datasets.                                                           */

DKM_API dkm_status dkm_dataset_open(const dkm_config_t* config, dkm_dataset_t** out);
DKM_API dkm_status dkm_dataset_dims(const dkm_dataset_t* dataset, int64_t* n, int64_t* dim);
DKM_API dkm_status dkm_dataset_fingerprint(const dkm_dataset_t* dataset, char* buf,
                                           size_t buf_len);
DKM_API dkm_status dkm_dataset_save_csv(const dkm_dataset_t* dataset, const char* path,
                                        int with_labels);
DKM_API void dkm_dataset_free(dkm_dataset_t* dataset);

/* ------------------------------------------------------------------ */
/* Pipelines. Artifacts land under out_dir; runs are byte-reproducible
 * from (config, seeds, dataset bytes).                                */

DKM_API dkm_status dkm_run_pretrain(const dkm_config_t* config, const dkm_dataset_t* dataset,
                                    const char* out_dir);
DKM_API dkm_status dkm_run_train(const dkm_config_t* config, const dkm_dataset_t* dataset,
                                 const char* out_dir);
/* test_only != 0 restricts scoring to the held-out test split. */
DKM_API dkm_status dkm_run_evaluate(const char* const* run_dirs, size_t n_dirs,
                                    const char* labels_path, int test_only,
                                    const char* out_dir);
DKM_API dkm_status dkm_run_linesearch(const dkm_config_t* config, const dkm_dataset_t* dataset,
                                      const double* grid, size_t grid_len, const char* out_dir,
                                      double* best_lambda);
/* Writes the configured blobs fixture as a labeled CSV. */
DKM_API dkm_status dkm_make_blobs_csv(const dkm_config_t* config, const char* csv_path);

#ifdef __cplusplus
}
#endif

#endif /* DEEPKM_H */
