#ifndef LOWRESKIT_LOWRESKIT_H
#define LOWRESKIT_LOWRESKIT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define LRK_API __declspec(dllexport)
#else
#define LRK_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lrk_status {
  LRK_OK = 0,
  LRK_ERR_INVALID_ARGUMENT = 1, /* bad options, malformed records, failed preconditions */
  LRK_ERR_IO = 2,
  LRK_ERR_PARSE = 3,            /* input is not valid JSON / NDJSON */
  LRK_ERR_UNAVAILABLE = 4,      /* no backend could answer */
  LRK_ERR_RUNTIME = 5
} lrk_status;

typedef struct lrk_config lrk_config;
typedef struct lrk_service lrk_service;

/* Message for the last failed call on this thread; "" when none. Owned by the library. */
LRK_API const char* lrk_last_error(void);
LRK_API const char* lrk_version(void);

/* Strings returned through char** out-parameters are owned by the caller. */
LRK_API void lrk_string_free(char* s);

/* Warnings go to stderr unless disabled. */
LRK_API void lrk_set_warnings(int enabled);

/* path == NULL reads $LOWRESKIT_CONFIG, falling back to defaults when unset. */
LRK_API lrk_status lrk_config_load(const char* path, lrk_config** out);
LRK_API lrk_status lrk_config_from_json(const char* json_text, const char* base_dir, lrk_config** out);
LRK_API lrk_status lrk_config_set_seed(lrk_config* config, uint64_t seed);
LRK_API void lrk_config_free(lrk_config* config);

/* Pipeline commands. options_json is a JSON object of command options;
 * on success *report_json receives a JSON summary. config may be NULL (defaults). */
LRK_API lrk_status lrk_augment_qa(const lrk_config* config, const char* options_json, char** report_json);
LRK_API lrk_status lrk_rerank(const lrk_config* config, const char* options_json, char** report_json);
LRK_API lrk_status lrk_eval_dra(const lrk_config* config, const char* options_json, char** report_json);
LRK_API lrk_status lrk_augment_ts(const lrk_config* config, const char* options_json, char** report_json);
LRK_API lrk_status lrk_gate_train_data(const lrk_config* config, const char* options_json, char** report_json);
LRK_API lrk_status lrk_gate_apply(const lrk_config* config, const char* options_json, char** report_json);
LRK_API lrk_status lrk_build_med_corpus(const lrk_config* config, const char* options_json, char** report_json);
LRK_API lrk_status lrk_gen_tasks(const lrk_config* config, const char* options_json, char** report_json);
LRK_API lrk_status lrk_predict(const lrk_config* config, const char* options_json, char** report_json);
LRK_API lrk_status lrk_ensemble_eval(const lrk_config* config, const char* options_json, char** report_json);
LRK_API lrk_status lrk_eval(const lrk_config* config, const char* options_json, char** report_json);

/* Suggestion service. Handlers can be called directly (in-process) or served over HTTP. */
LRK_API lrk_status lrk_service_create(const lrk_config* config, lrk_service** out);
LRK_API void lrk_service_free(lrk_service* service);
/* request/response bodies are JSON; *http_status receives the status code. */
LRK_API lrk_status lrk_service_suggest(lrk_service* service, const char* request_json, int* http_status,
                                       char** response_json);
LRK_API lrk_status lrk_service_log_event(lrk_service* service, const char* event_json, int* http_status,
                                         char** response_json);
LRK_API lrk_status lrk_service_health(lrk_service* service, int* http_status, char** response_json);
/* port 0 binds an ephemeral port; *bound_port receives the port. */
LRK_API lrk_status lrk_service_bind(lrk_service* service, const char* host, int port, int* bound_port);
/* Blocks until lrk_service_stop is called from another thread. */
LRK_API lrk_status lrk_service_run(lrk_service* service);
LRK_API void lrk_service_stop(lrk_service* service);

#ifdef __cplusplus
}
#endif

#endif
