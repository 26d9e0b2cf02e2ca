#pragma once

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(TILECURATE_BUILDING)
#define TC_API __attribute__((visibility("default")))
#else
#define TC_API
#endif

/* Status codes 0-4 double as CLI exit codes. */
typedef enum tc_status {
  TC_OK = 0,
  TC_ERROR = 1,
  TC_ERR_CONFIG = 2,
  TC_ERR_MISSING_STAGE = 3,
  TC_ERR_LOCKED = 4,
  TC_ERR_INVALID_ARGUMENT = 5,
  TC_ERR_CONFLICT = 6,
  TC_ERR_NOT_FOUND = 7,
} tc_status;

typedef struct tc_project tc_project;

typedef void (*tc_progress_fn)(const char* stage, size_t done, size_t total, void* user);
typedef void (*tc_ready_fn)(int port, void* user);

TC_API const char* tc_version(void);
TC_API const char* tc_status_string(tc_status status);

/* Message for the last failed call on this thread; empty if none. */
TC_API const char* tc_last_error(void);

/* config_path may be NULL: <root>/tilecurate.conf is used if present, else defaults. */
TC_API tc_status tc_project_open(const char* root, const char* config_path, tc_project** out);
TC_API void tc_project_close(tc_project* project);

TC_API tc_status tc_project_set_seed(tc_project* project, uint64_t seed);
TC_API tc_status tc_project_set_workers(tc_project* project, int workers);

/* Stage names: extract, train-ae, embed, reduce, cluster, sample, assemble,
   export-qupath, render-map, eval-seg. `ran` (optional) is set to 1 if the
   stage executed, 0 if it was already up to date. */
TC_API tc_status tc_run_stage(tc_project* project, const char* stage, tc_progress_fn progress, void* user, int* ran);

/* Returns 1 if the stage marker is current, 0 otherwise. */
TC_API int tc_stage_current(tc_project* project, const char* stage);

/* Journal mutations. `response` (optional) receives the JSON body, free with tc_string_free. */
TC_API tc_status tc_label(tc_project* project, int cluster, const char* tissue_class, const char* reviewer,
                          int override_label, char** response);
TC_API tc_status tc_resolve(tc_project* project, int64_t proposal, const char* decision, const char* reviewer,
                            char** response);
TC_API tc_status tc_progress_json(tc_project* project, char** response);

/* Blocks serving the review API until tc_serve_stop is called from another thread.
   host NULL or port < 0 fall back to the project config. */
TC_API tc_status tc_serve(tc_project* project, const char* host, int port, tc_ready_fn ready, void* user);
TC_API void tc_serve_stop(tc_project* project);

TC_API void tc_string_free(char* s);

#ifdef __cplusplus
}
#endif
