/* C interface to the aspect-sentiment bottleneck-attribution core.
 *
 * All functions return IBG_OK (0) on success or a nonzero status; the
 * thread-local message from ibg_last_error() describes the failure. Output
 * strings are heap-allocated and must be released with ibg_string_free();
 * handles with their respective _free functions. Handles are opaque; a NULL
 * handle argument is reported as IBG_E_CONTRACT.
 *
 * Config arguments take a run-config JSON document (any subset of the keys;
 * ibg_resolve_config fills in every default). Payload outputs (JSONL, CSV,
 * SVG, checkpoints) are deterministic functions of their inputs.
 */
#ifndef IBG_H
#define IBG_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

enum ibg_status {
  IBG_OK = 0,
  IBG_E_IO = 1,         /* missing or unreadable file */
  IBG_E_PARSE = 2,      /* malformed JSON/CSV input */
  IBG_E_CONFIG = 3,     /* inconsistent configuration */
  IBG_E_FORMAT = 4,     /* bad checkpoint/envelope (incompatible file) */
  IBG_E_VALIDATION = 5, /* record violates a domain invariant */
  IBG_E_CONTRACT = 6,   /* precondition violated */
  IBG_E_DIMENSION = 7,  /* shape mismatch */
  IBG_E_INDEX = 8,      /* id or label out of range */
  IBG_E_CAPABILITY = 9, /* operation unsupported by this model variant */
  IBG_E_INTERNAL = 10,
};

typedef struct ibg_corpus ibg_corpus;
typedef struct ibg_model ibg_model;

const char* ibg_last_error(void);
void ibg_string_free(char* s);

/* ---- configuration ---- */
int ibg_resolve_config(const char* run_config_json, char** resolved_json_out);

/* ---- corpus ---- */
int ibg_corpus_generate(const char* run_config_json, ibg_corpus** out);
int ibg_corpus_load(const char* jsonl_path, ibg_corpus** out);
int ibg_corpus_save(const ibg_corpus* corpus, const char* jsonl_path);
int ibg_corpus_to_jsonl(const ibg_corpus* corpus, char** jsonl_out);
int ibg_corpus_count(const ibg_corpus* corpus, const char* split_or_null, size_t* count_out);
int ibg_corpus_audit(const ibg_corpus* corpus, const char* run_config_json, char** json_out);
void ibg_corpus_free(ibg_corpus* corpus);

/* ---- model + training ---- */
int ibg_model_load(const char* checkpoint_path, ibg_model** out);
int ibg_model_save(const ibg_model* model, const char* checkpoint_path);
int ibg_model_info(const ibg_model* model, char** json_out); /* {phase, config} */
void ibg_model_free(ibg_model* model);

int ibg_train_base(const char* run_config_json, const ibg_corpus* corpus, ibg_model** model_out,
                   char** curves_csv_out);
int ibg_train_ibil(const char* run_config_json, const ibg_model* base, const ibg_corpus* corpus,
                   ibg_model** model_out, char** curves_csv_out);
int ibg_evaluate(const ibg_model* model, const ibg_corpus* corpus, const char* split,
                 char** report_json_out);

/* ---- analyses ---- */
int ibg_explain(const char* run_config_json, const ibg_model* model, const ibg_corpus* corpus,
                char** jsonl_out);
int ibg_eval_faithfulness(const char* run_config_json, const ibg_model* model,
                          const ibg_corpus* corpus, char** csv_out);
int ibg_analyze_dims(const char* run_config_json, const ibg_model* model, const ibg_corpus* corpus,
                     char** importance_csv_out, char** masking_csv_out, char** summary_json_out);
int ibg_sweep(const char* run_config_json, const ibg_model* model, const ibg_corpus* corpus,
              char** csv_out);

/* ---- charts ---- */
int ibg_render_chart(const char* kind, const char* csv_text, char** svg_out);

#ifdef __cplusplus
}
#endif

#endif /* IBG_H */
