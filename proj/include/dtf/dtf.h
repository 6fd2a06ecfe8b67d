/* C interface to the dual-transformer traffic forecasting library.
 *
 * Every function returns a dtf_status; on failure dtf_last_error() returns a
 * description valid until the next call on the same thread. Strings handed
 * out through char** parameters are owned by the caller and released with
 * dtf_string_free(). Handles are released with their *_destroy function. */
#ifndef DTF_DTF_H
#define DTF_DTF_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DTF_API __declspec(dllexport)
#else
#define DTF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values double as CLI exit codes. */
typedef enum dtf_status {
  DTF_OK = 0,
  DTF_ERR_INTERNAL = 1,
  DTF_ERR_CONFIG = 2,
  DTF_ERR_DATA = 3,
  DTF_ERR_NUMERIC = 4,
  DTF_ERR_INVALID_ARGUMENT = 5
} dtf_status;

typedef struct dtf_config dtf_config;
typedef struct dtf_dataset dtf_dataset;
typedef struct dtf_model dtf_model;

DTF_API const char* dtf_version(void);
DTF_API const char* dtf_last_error(void);
DTF_API void dtf_string_free(char* s);

/* Run configuration. Overrides accumulate and are validated when the
 * configuration is used, so alpha and beta can be changed one at a time. */
DTF_API dtf_status dtf_config_create(dtf_config** out);
DTF_API dtf_status dtf_config_load(const char* path, dtf_config** out);
/* "key.path=value"; value is parsed as JSON when possible, else a string. */
DTF_API dtf_status dtf_config_set(dtf_config* config, const char* assignment);
DTF_API dtf_status dtf_config_validate(const dtf_config* config);
/* Fully resolved configuration as JSON. */
DTF_API dtf_status dtf_config_to_json(const dtf_config* config, char** json_out);
DTF_API void dtf_config_destroy(dtf_config* config);

/* Pipeline commands. Artifacts land under the configured output directory;
 * report_json and table (either may be NULL) receive the command report and
 * its human-readable rendering. */
DTF_API dtf_status dtf_run_synth(const dtf_config* config, char** report_json, char** table);
DTF_API dtf_status dtf_run_train_teacher(const dtf_config* config, char** report_json, char** table);
DTF_API dtf_status dtf_run_distill(const dtf_config* config, int ablation, char** report_json, char** table);
DTF_API dtf_status dtf_run_sweep(const dtf_config* config, char** report_json, char** table);
/* target: "student", "teacher" or "both". */
DTF_API dtf_status dtf_run_eval(const dtf_config* config, const char* target, char** report_json, char** table);

/* Dataset named by the configuration (CSV files or the synthetic generator). */
DTF_API dtf_status dtf_dataset_load(const dtf_config* config, dtf_dataset** out);
DTF_API dtf_status dtf_dataset_shape(const dtf_dataset* dataset, size_t* steps, size_t* nodes);
/* Copies the T×N raw speed matrix, row-major, into out (length >= T·N). */
DTF_API dtf_status dtf_dataset_speeds(const dtf_dataset* dataset, double* out, size_t out_len);
DTF_API void dtf_dataset_destroy(dtf_dataset* dataset);

/* Student model with the configured hyperparameters for `nodes` segments.
 * checkpoint may be NULL for freshly initialized weights. */
DTF_API dtf_status dtf_model_create_student(const dtf_config* config, size_t nodes, const char* checkpoint,
                                            dtf_model** out);
DTF_API dtf_status dtf_model_parameter_count(const dtf_model* model, uint64_t* out);
/* window: L×N row-major normalized speeds; out: N×H row-major (length >= N·H). */
DTF_API dtf_status dtf_model_predict(const dtf_model* model, const double* window, size_t steps, size_t nodes,
                                     double* out, size_t out_len);
DTF_API dtf_status dtf_model_save(const dtf_model* model, const char* path);
DTF_API void dtf_model_destroy(dtf_model* model);

#ifdef __cplusplus
}
#endif

#endif /* DTF_DTF_H */
