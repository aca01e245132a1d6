/*
 * urdcop — robust solver for DCOPs with uncertain task rewards.
 *
 * C interface to the solver core. All functions return a urdcop_status;
 * outputs are written through out-parameters. Objects returned through
 * handles must be released with the matching _free function, strings with
 * urdcop_string_free. urdcop_last_error() describes the most recent failure
 * on the calling thread.
 */
#ifndef URDCOP_H
#define URDCOP_H

#include <stdint.h>

#if defined(_WIN32)
#  if defined(URDCOP_BUILD)
#    define URDCOP_API __declspec(dllexport)
#  else
#    define URDCOP_API __declspec(dllimport)
#  endif
#else
#  define URDCOP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum urdcop_status {
    URDCOP_OK = 0,
    URDCOP_ERR_INVALID_ARGUMENT = 1,
    URDCOP_ERR_PARSE = 2,
    URDCOP_ERR_VALIDATION = 3,
    URDCOP_ERR_CYCLIC_GRAPH = 4,
    URDCOP_ERR_GUARD_EXCEEDED = 5,
    URDCOP_ERR_ITERATION_CAP = 6,
    URDCOP_ERR_TIMEOUT = 7,
    URDCOP_ERR_IO = 8,
    URDCOP_ERR_INTERNAL = 9
} urdcop_status;

typedef enum urdcop_algorithm {
    URDCOP_ALGO_ICG_MAXSUM = 0, /* decentralized solver */
    URDCOP_ALGO_ICG_EXACT = 1,  /* centralized exhaustive baseline */
    URDCOP_ALGO_DSA = 2,        /* local-search baseline */
    URDCOP_ALGO_ORACLE = 3      /* exhaustive minimax */
} urdcop_algorithm;

typedef enum urdcop_topology {
    URDCOP_TOPOLOGY_TREE = 0,
    URDCOP_TOPOLOGY_RANDOM = 1
} urdcop_topology;

typedef struct urdcop_instance urdcop_instance;
typedef struct urdcop_result urdcop_result;

typedef struct urdcop_gen_params {
    int32_t num_tasks;
    int32_t num_agents; /* 0 -> ceil(num_tasks / 2) */
    int32_t num_states;
    int32_t max_scope;  /* 0 -> 3 */
    int32_t topology;   /* urdcop_topology */
    uint64_t seed;
} urdcop_gen_params;

typedef struct urdcop_solve_params {
    int32_t algorithm;   /* urdcop_algorithm */
    int32_t allow_cycles;
    int32_t max_iterations;       /* 0 -> 1000 */
    double dsa_activation;        /* 0 -> 0.6 */
    int32_t dsa_inner_iterations; /* 0 -> 50 */
    int32_t dsa_outer_iterations; /* 0 -> 20 */
    uint64_t seed;
    double time_limit_seconds;    /* 0 -> unlimited */
} urdcop_solve_params;

URDCOP_API const char* urdcop_version(void);

/* Message for the last failing call on this thread; empty string if none. */
URDCOP_API const char* urdcop_last_error(void);

URDCOP_API void urdcop_string_free(char* s);

/* --- instances ---------------------------------------------------------- */

URDCOP_API urdcop_status urdcop_instance_parse(const char* json_text, urdcop_instance** out);
URDCOP_API urdcop_status urdcop_instance_load(const char* path, urdcop_instance** out);
URDCOP_API urdcop_status urdcop_instance_save(const urdcop_instance* instance, const char* path);
URDCOP_API urdcop_status urdcop_instance_to_json(const urdcop_instance* instance, char** out_json);
URDCOP_API void urdcop_instance_free(urdcop_instance* instance);

URDCOP_API int32_t urdcop_instance_num_agents(const urdcop_instance* instance);
URDCOP_API int32_t urdcop_instance_num_constraints(const urdcop_instance* instance);
URDCOP_API urdcop_status urdcop_instance_is_acyclic(const urdcop_instance* instance,
                                                    int32_t* out_acyclic);
URDCOP_API urdcop_status urdcop_instance_hash(const urdcop_instance* instance, char** out_hex);

/* Generates a random instance; the hidden true states (plus generator
 * metadata) are returned as a separate JSON document. */
URDCOP_API urdcop_status urdcop_generate(const urdcop_gen_params* params,
                                         urdcop_instance** out_instance,
                                         char** out_states_json);

/* --- solving ------------------------------------------------------------ */

/* Solves and returns a result handle. On URDCOP_ERR_ITERATION_CAP and
 * URDCOP_ERR_TIMEOUT the handle is still produced and carries the best
 * solution found so far. */
URDCOP_API urdcop_status urdcop_solve(const urdcop_instance* instance,
                                      const urdcop_solve_params* params,
                                      urdcop_result** out_result);

URDCOP_API double urdcop_result_regret(const urdcop_result* result);
URDCOP_API int32_t urdcop_result_iterations(const urdcop_result* result);
URDCOP_API int32_t urdcop_result_witness_count(const urdcop_result* result);
/* Solution-file JSON (assignment by agent id, regret, iteration trace). */
URDCOP_API urdcop_status urdcop_result_to_json(const urdcop_result* result, char** out_json);
URDCOP_API void urdcop_result_free(urdcop_result* result);

/* --- evaluating solutions ------------------------------------------------ */

/* Max regret of the solution over the whole belief space (exhaustive;
 * fails with URDCOP_ERR_GUARD_EXCEEDED on large instances). */
URDCOP_API urdcop_status urdcop_solution_regret(const urdcop_instance* instance,
                                                const char* solution_json,
                                                double* out_regret);

/* Hidden-state evaluation: `runs` random state draws, reporting per-run
 * regrets and their mean as JSON. */
URDCOP_API urdcop_status urdcop_evaluate(const urdcop_instance* instance,
                                         const char* solution_json, int32_t runs,
                                         uint64_t seed, char** out_report_json);

/* --- benchmarking -------------------------------------------------------- */

/* Runs the benchmark described by the JSON config; returns machine-readable
 * line-delimited records and a human-readable table. */
URDCOP_API urdcop_status urdcop_bench_run(const char* config_json, char** out_jsonl,
                                          char** out_table);

#ifdef __cplusplus
}
#endif

#endif /* URDCOP_H */
