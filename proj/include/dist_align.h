/* Copyright 2026 The dist-align Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C API for the dist-align shared library. The library elicits answer-choice
 * probability distributions from language-model providers, calibrates them
 * against gold human response distributions with supervised regression, and
 * evaluates distributional opinion alignment per demographic group.
 *
 * Usage pattern: create a session, call functions with it, inspect
 * da_last_error() on any non-DA_OK status, free the session. Sessions are
 * not thread-safe; use one per thread. The numeric primitives
 * (da_opinion_alignment, da_paired_t_test, ...) are pure; the pipeline
 * functions (da_ingest, da_elicit, ...) read and write files.
 */

#ifndef DIST_ALIGN_H
#define DIST_ALIGN_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum da_status {
  DA_OK = 0,
  DA_ERR_INVALID_ARGUMENT = 1,
  DA_ERR_LENGTH_MISMATCH = 2,
  DA_ERR_DEGENERATE = 3,    /* all-zero counts, degenerate sums, designs */
  DA_ERR_OUT_OF_RANGE = 4,  /* choice index outside [1,k] */
  DA_ERR_TOO_FEW = 5,       /* too few pairs / questions / datasets */
  DA_ERR_SCHEMA = 6,        /* malformed input file */
  DA_ERR_EMPTY = 7,         /* empty dataset or selection */
  DA_ERR_IO = 8,
  DA_ERR_PROVIDER = 9,      /* provider call failed after retries */
  DA_ERR_AUTH = 10,         /* API key env var not set */
  DA_ERR_UNSUPPORTED = 11,  /* e.g. log probabilities not supported */
  DA_ERR_DISCARDED = 12,    /* unparsable model output */
  DA_ERR_UNKNOWN_CASE = 13, /* unknown benchmark case name */
  DA_ERR_INTERNAL = 14
} da_status;

/* Opaque session handle; owns the last error message. */
typedef struct da_session da_session;

da_session* da_session_new(void);
void da_session_free(da_session* session);

/* Message for the most recent failing call on this session; empty string
 * if the last call succeeded. The pointer stays valid until the next call
 * on the same session. */
const char* da_last_error(const da_session* session);

const char* da_version(void);

/* ---- numeric primitives ------------------------------------------------ */

/* Opinion alignment between two distributions over k ordinal choices:
 * 1 - normalized 1-Wasserstein distance, in [0,1]. */
da_status da_opinion_alignment(da_session* session, const double* p,
                               const double* q, size_t k, double* out);

/* Scales raw[0..k) to sum 1 and writes it to out[0..k).
 * clip_negatives != 0 zeroes negative entries first; otherwise negatives
 * are an error. */
da_status da_renormalize(da_session* session, const double* raw, size_t k,
                         int clip_negatives, double* out);

typedef struct da_t_test_result {
  double t_statistic;
  int degrees_of_freedom;
  double p_value;
  double p_bonferroni;
  int n_comparisons;
  int zero_variance; /* 1 when differences were constant but nonzero */
} da_t_test_result;

/* Two-sided paired t-test of a against b (n >= 2 pairs) with Bonferroni
 * correction over n_comparisons tests. */
da_status da_paired_t_test(da_session* session, const double* a,
                           const double* b, size_t n, int n_comparisons,
                           da_t_test_result* out);

/* Parses a verbalized distribution ("[0.7, 0.2, 0.05, 0.05]" or a
 * percentage list) into out[0..k). DA_ERR_DISCARDED when the text holds
 * no usable list. */
da_status da_parse_verbalized(da_session* session, const char* text, size_t k,
                              double* out);

/* Parses a single-choice answer; *out is the 1-based choice index. */
da_status da_parse_choice(da_session* session, const char* text, size_t k,
                          int* out);

/* ---- pipeline stages (file based) -------------------------------------- */

/* Builds gold distributions from a questions file (JSON) and respondents
 * file (JSON Lines or CSV); writes gold.json. */
da_status da_ingest(da_session* session, const char* questions_path,
                    const char* respondents_path, int min_group_count,
                    const char* out_gold_path);

/* Generates a synthetic survey world (questions.json, respondents.jsonl,
 * hidden_gold.json) under out_dir. spec_toml may be NULL for the default
 * desk-scale world. */
da_status da_synth(da_session* session, const char* spec_toml,
                   const char* out_dir);

/* Elicits distributions for every (question, group) in the gold file.
 * method: "verbalized" | "self-random" | "paraphrase" | "logprob";
 * prompt_kind: "base" | "sd"; prompts_dir may be NULL for the built-in
 * templates. Writes one record per line to out_jsonl. */
da_status da_elicit(da_session* session, const char* gold_path,
                    const char* provider_toml, const char* method,
                    const char* prompt_kind, const char* prompts_dir,
                    int workers, const char* out_jsonl);

/* Trains one calibration model per setting in the elicited file and writes
 * the registry under out_dir. splits_path NULL derives splits from seed.
 * sizes_csv (e.g. "1,5,10,50") also runs the supervision study; holdout
 * (dataset tag) switches on leave-one-dataset-out. */
da_status da_calibrate(da_session* session, const char* elicited_jsonl,
                       const char* gold_path, const char* splits_path,
                       uint64_t seed, const char* sizes_csv,
                       const char* holdout, const char* out_dir);

/* Scores elicited records with registry models on the test split and
 * writes the report files under out_dir. */
da_status da_evaluate(da_session* session, const char* elicited_jsonl,
                      const char* gold_path, const char* splits_path,
                      const char* models_dir, const char* out_dir);

/* Re-emits the CSV reports from a saved report.json. */
da_status da_report(da_session* session, const char* report_json,
                    const char* out_dir);

/* Runs the full grid described by an experiment TOML file. out_dir may be
 * NULL to keep the configured directory; has_seed != 0 overrides the seed;
 * workers <= 0 keeps the configured pool width. */
da_status da_run(da_session* session, const char* config_toml,
                 const char* out_dir, int has_seed, uint64_t seed,
                 int workers);

/* Writes the built-in prompt templates under dir (the layout da_elicit
 * accepts as prompts_dir). */
da_status da_write_default_prompts(da_session* session, const char* dir);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* DIST_ALIGN_H */
