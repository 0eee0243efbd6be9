#ifndef RSHALLU_RSHALLU_H
#define RSHALLU_RSHALLU_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(RSHALLU_BUILDING)
#    define RSHALLU_API __declspec(dllexport)
#  else
#    define RSHALLU_API __declspec(dllimport)
#  endif
#else
#  define RSHALLU_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as CLI exit codes. */
typedef enum rshallu_status {
    RSHALLU_OK = 0,
    RSHALLU_ERR_INTERNAL = 1,
    RSHALLU_ERR_USAGE = 2,
    RSHALLU_ERR_DATA = 3,
    RSHALLU_ERR_TRANSPORT = 4
} rshallu_status;

/* Message of the last failure on the calling thread; "" if none. */
RSHALLU_API const char* rshallu_last_error(void);
RSHALLU_API const char* rshallu_version(void);
/* Frees strings returned through char** out-parameters. */
RSHALLU_API void rshallu_string_free(char* s);

/* ---- step traces --------------------------------------------------------- */

typedef struct rshallu_trace rshallu_trace;

RSHALLU_API rshallu_status rshallu_trace_create(int last_layer_index, size_t vocab_size, rshallu_trace** out);
/* Parses one "step" line of the wire format. */
RSHALLU_API rshallu_status rshallu_trace_parse(const char* step_json, rshallu_trace** out);
RSHALLU_API rshallu_status rshallu_trace_add_layer(rshallu_trace* trace, int layer_index, double a_v, double a_t,
                                                   const double* logits, size_t n_logits);
RSHALLU_API void rshallu_trace_free(rshallu_trace* trace);

/* ---- correction ------------------------------------------------------------ */

typedef struct rshallu_correction_config {
    double r_p;
    int k_m;
    int k_t;
    double thred_t;
    double r;
    double eps_at;
    const int* m_origin; /* borrowed for the duration of the call */
    size_t n_m_origin;
} rshallu_correction_config;

/* Fills defaults; m_origin points at static storage. */
RSHALLU_API void rshallu_correction_config_default(rshallu_correction_config* cfg);

typedef struct rshallu_outcome rshallu_outcome;

RSHALLU_API rshallu_status rshallu_correct_step(const rshallu_trace* trace, const rshallu_correction_config* cfg,
                                                rshallu_outcome** out);
RSHALLU_API size_t rshallu_outcome_vocab_size(const rshallu_outcome* o);
RSHALLU_API const double* rshallu_outcome_logits(const rshallu_outcome* o);
RSHALLU_API size_t rshallu_outcome_n_layers(const rshallu_outcome* o);
RSHALLU_API const int* rshallu_outcome_layers(const rshallu_outcome* o);
RSHALLU_API const double* rshallu_outcome_weights(const rshallu_outcome* o);
RSHALLU_API void rshallu_outcome_free(rshallu_outcome* o);

RSHALLU_API double rshallu_attention_balance(double a_v, double a_t, double r_p, double eps_at);

/* mode: 0 greedy, 1 sample. */
RSHALLU_API rshallu_status rshallu_decode_next(const double* logits, size_t n, int mode, double temperature,
                                               uint64_t seed, size_t* token_out);

/* ---- manifests ----------------------------------------------------------- */

typedef struct rshallu_manifest rshallu_manifest;

RSHALLU_API rshallu_status rshallu_manifest_load(const char* path, rshallu_manifest** out);
RSHALLU_API size_t rshallu_manifest_size(const rshallu_manifest* m);
/* Writes a JSON array of violations; returns the violation count in *n_out. */
RSHALLU_API rshallu_status rshallu_manifest_validate(const rshallu_manifest* m, size_t* n_out, char** report_json);
RSHALLU_API rshallu_status rshallu_manifest_save(const rshallu_manifest* m, const char* path);
RSHALLU_API void rshallu_manifest_free(rshallu_manifest* m);

/* ---- correction engine (wire endpoint) ----------------------------------- */

typedef struct rshallu_engine rshallu_engine;

/* cfg may be NULL for defaults. */
RSHALLU_API rshallu_status rshallu_engine_create(const rshallu_correction_config* cfg, rshallu_engine** out);
/* Always yields one reply line (without newline) unless out-of-memory. */
RSHALLU_API rshallu_status rshallu_engine_handle_line(rshallu_engine* e, const char* line, char** reply);
RSHALLU_API size_t rshallu_engine_open_sessions(const rshallu_engine* e);
RSHALLU_API void rshallu_engine_free(rshallu_engine* e);

/* ---- workflows ----------------------------------------------------------- */

/* Runs a named workflow with a JSON object config. On success *result_json
 * holds {"summary": ..., "warnings": [...]}. */
RSHALLU_API rshallu_status rshallu_run_command(const char* command, const char* config_json, char** result_json);

#ifdef __cplusplus
}
#endif

#endif
