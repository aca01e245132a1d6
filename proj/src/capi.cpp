#include "urdcop.h"

#include <chrono>
#include <cstring>
#include <new>
#include <string>

#include "json.hpp"
#include "urdcop/bench.hpp"
#include "urdcop/errors.hpp"
#include "urdcop/icg.hpp"
#include "urdcop/io.hpp"
#include "urdcop/reference.hpp"

using namespace urdcop;

struct urdcop_instance {
    Instance instance;
};

struct urdcop_result {
    SolutionDoc doc;
    double regret = 0.0;
    int iterations = 0;
    int witness_count = 0;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = new (std::nothrow) char[s.size() + 1];
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

urdcop_status fail(urdcop_status status, const std::string& message) {
    g_last_error = message;
    return status;
}

/// Runs `body`, translating exceptions into status codes.
template <typename Body>
urdcop_status guarded(Body&& body) {
    try {
        g_last_error.clear();
        return body();
    } catch (const ParseError& e) {
        return fail(URDCOP_ERR_PARSE, e.what());
    } catch (const ValidationError& e) {
        return fail(URDCOP_ERR_VALIDATION, e.what());
    } catch (const CyclicGraphError& e) {
        return fail(URDCOP_ERR_CYCLIC_GRAPH, e.what());
    } catch (const GuardExceededError& e) {
        return fail(URDCOP_ERR_GUARD_EXCEEDED, e.what());
    } catch (const IoError& e) {
        return fail(URDCOP_ERR_IO, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(URDCOP_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::exception& e) {
        return fail(URDCOP_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(URDCOP_ERR_INTERNAL, "unknown error");
    }
}

const char* algorithm_name(int32_t algorithm) {
    switch (algorithm) {
        case URDCOP_ALGO_ICG_MAXSUM: return "icg-maxsum";
        case URDCOP_ALGO_ICG_EXACT: return "icg-exact";
        case URDCOP_ALGO_DSA: return "dsa";
        case URDCOP_ALGO_ORACLE: return "oracle";
    }
    return nullptr;
}

urdcop_status status_for(SolveStatus status) {
    switch (status) {
        case SolveStatus::Converged: return URDCOP_OK;
        case SolveStatus::IterationCapReached: return URDCOP_ERR_ITERATION_CAP;
        case SolveStatus::Stalled: return URDCOP_ERR_ITERATION_CAP;
        case SolveStatus::Timeout: return URDCOP_ERR_TIMEOUT;
    }
    return URDCOP_ERR_INTERNAL;
}

} // namespace

extern "C" {

const char* urdcop_version(void) { return "1.0.0"; }

const char* urdcop_last_error(void) { return g_last_error.c_str(); }

void urdcop_string_free(char* s) { delete[] s; }

urdcop_status urdcop_instance_parse(const char* json_text, urdcop_instance** out) {
    if (!json_text || !out) return fail(URDCOP_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        auto* handle = new urdcop_instance{instance_from_json(json_text)};
        *out = handle;
        return URDCOP_OK;
    });
}

urdcop_status urdcop_instance_load(const char* path, urdcop_instance** out) {
    if (!path || !out) return fail(URDCOP_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        auto* handle = new urdcop_instance{load_instance(path)};
        *out = handle;
        return URDCOP_OK;
    });
}

urdcop_status urdcop_instance_save(const urdcop_instance* instance, const char* path) {
    if (!instance || !path) return fail(URDCOP_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        save_instance(instance->instance, path);
        return URDCOP_OK;
    });
}

urdcop_status urdcop_instance_to_json(const urdcop_instance* instance, char** out_json) {
    if (!instance || !out_json) return fail(URDCOP_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        *out_json = dup_string(instance_to_json(instance->instance));
        return *out_json ? URDCOP_OK : URDCOP_ERR_INTERNAL;
    });
}

void urdcop_instance_free(urdcop_instance* instance) { delete instance; }

int32_t urdcop_instance_num_agents(const urdcop_instance* instance) {
    return instance ? instance->instance.agent_count() : 0;
}

int32_t urdcop_instance_num_constraints(const urdcop_instance* instance) {
    return instance ? instance->instance.constraint_count() : 0;
}

urdcop_status urdcop_instance_is_acyclic(const urdcop_instance* instance,
                                         int32_t* out_acyclic) {
    if (!instance || !out_acyclic) return fail(URDCOP_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        *out_acyclic = is_acyclic(build_factor_graph(instance->instance)) ? 1 : 0;
        return URDCOP_OK;
    });
}

urdcop_status urdcop_instance_hash(const urdcop_instance* instance, char** out_hex) {
    if (!instance || !out_hex) return fail(URDCOP_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        *out_hex = dup_string(instance_hash(instance->instance));
        return *out_hex ? URDCOP_OK : URDCOP_ERR_INTERNAL;
    });
}

urdcop_status urdcop_generate(const urdcop_gen_params* params, urdcop_instance** out_instance,
                              char** out_states_json) {
    if (!params || !out_instance) return fail(URDCOP_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        GenParams gen;
        gen.num_tasks = params->num_tasks;
        gen.num_agents = params->num_agents;
        gen.num_states = params->num_states;
        gen.max_scope = params->max_scope > 0 ? params->max_scope : 3;
        gen.topology = params->topology == URDCOP_TOPOLOGY_RANDOM
                           ? GenParams::Topology::Random
                           : GenParams::Topology::Tree;
        gen.seed = params->seed;
        GenResult result = generate_instance(gen);
        if (out_states_json)
            *out_states_json = dup_string(
                states_to_json(result.true_states, result.task_means, result.task_spreads));
        *out_instance = new urdcop_instance{std::move(result.instance)};
        return URDCOP_OK;
    });
}

urdcop_status urdcop_solve(const urdcop_instance* instance, const urdcop_solve_params* params,
                           urdcop_result** out_result) {
    if (!instance || !params || !out_result)
        return fail(URDCOP_ERR_INVALID_ARGUMENT, "null argument");
    const char* name = algorithm_name(params->algorithm);
    if (!name)
        return fail(URDCOP_ERR_INVALID_ARGUMENT,
                    "unknown algorithm " + std::to_string(params->algorithm));
    return guarded([&]() -> urdcop_status {
        const Instance& inst = instance->instance;
        std::optional<std::chrono::steady_clock::time_point> deadline;
        if (params->time_limit_seconds > 0)
            deadline = std::chrono::steady_clock::now() +
                       std::chrono::milliseconds((long long)(params->time_limit_seconds * 1000));
        const int max_iterations = params->max_iterations > 0 ? params->max_iterations : 1000;

        auto* handle = new urdcop_result;
        urdcop_status status = URDCOP_OK;
        std::string status_text = "converged";
        try {
            if (params->algorithm == URDCOP_ALGO_ICG_MAXSUM) {
                IcgOptions options;
                options.allow_cycles = params->allow_cycles != 0;
                options.max_iterations = max_iterations;
                options.deadline = deadline;
                SolveResult solved = icg_maxsum(inst, options);
                status = status_for(solved.status);
                status_text = solve_status_name(solved.status);
                handle->doc = make_solution_doc(inst, name, status_text, solved.assignment,
                                                solved.regret, solved.iterations,
                                                solved.witness_count);
                handle->regret = solved.regret;
                handle->iterations = (int)solved.iterations.size();
                handle->witness_count = solved.witness_count;
            } else {
                OracleResult solved;
                if (params->algorithm == URDCOP_ALGO_ICG_EXACT) {
                    OracleOptions options;
                    options.max_iterations = max_iterations;
                    options.deadline = deadline;
                    solved = centralized_icg(inst, options);
                } else if (params->algorithm == URDCOP_ALGO_DSA) {
                    DsaParams dsa;
                    if (params->dsa_activation > 0) dsa.activation_probability = params->dsa_activation;
                    if (params->dsa_inner_iterations > 0)
                        dsa.inner_iterations = params->dsa_inner_iterations;
                    if (params->dsa_outer_iterations > 0)
                        dsa.outer_iterations = params->dsa_outer_iterations;
                    dsa.seed = params->seed;
                    dsa.deadline = deadline;
                    solved = dsa_minimax(inst, dsa);
                } else {
                    OracleOptions options;
                    options.deadline = deadline;
                    solved = minimax_oracle(inst, options);
                }
                status = status_for(solved.status);
                status_text = solve_status_name(solved.status);
                handle->doc = make_solution_doc(inst, name, status_text, solved.assignment,
                                                solved.regret, solved.iterations,
                                                (int)solved.iterations.size());
                handle->regret = solved.regret;
                handle->iterations = (int)solved.iterations.size();
                handle->witness_count = (int)solved.iterations.size();
            }
        } catch (...) {
            delete handle;
            throw;
        }
        *out_result = handle;
        if (status != URDCOP_OK)
            return fail(status, "solver finished with status: " + status_text);
        return URDCOP_OK;
    });
}

double urdcop_result_regret(const urdcop_result* result) {
    return result ? result->regret : 0.0;
}

int32_t urdcop_result_iterations(const urdcop_result* result) {
    return result ? result->iterations : 0;
}

int32_t urdcop_result_witness_count(const urdcop_result* result) {
    return result ? result->witness_count : 0;
}

urdcop_status urdcop_result_to_json(const urdcop_result* result, char** out_json) {
    if (!result || !out_json) return fail(URDCOP_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        *out_json = dup_string(solution_to_json(result->doc));
        return *out_json ? URDCOP_OK : URDCOP_ERR_INTERNAL;
    });
}

void urdcop_result_free(urdcop_result* result) { delete result; }

urdcop_status urdcop_solution_regret(const urdcop_instance* instance, const char* solution_json,
                                     double* out_regret) {
    if (!instance || !solution_json || !out_regret)
        return fail(URDCOP_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        SolutionDoc doc = solution_from_json(solution_json);
        Assignment assignment = solution_assignment(instance->instance, doc);
        OracleResult result = max_regret_oracle(instance->instance, assignment);
        *out_regret = result.regret;
        return URDCOP_OK;
    });
}

urdcop_status urdcop_evaluate(const urdcop_instance* instance, const char* solution_json,
                              int32_t runs, uint64_t seed, char** out_report_json) {
    if (!instance || !solution_json || !out_report_json)
        return fail(URDCOP_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        SolutionDoc doc = solution_from_json(solution_json);
        Assignment assignment = solution_assignment(instance->instance, doc);
        EvalReport report =
            evaluate_average_regret(instance->instance, seed, assignment, runs);
        nlohmann::json out{
            {"runs", report.runs},
            {"seed", report.seed},
            {"mean", report.mean},
            {"stddev", report.stddev},
            {"regrets", report.regrets},
        };
        *out_report_json = dup_string(out.dump(2) + "\n");
        return *out_report_json ? URDCOP_OK : URDCOP_ERR_INTERNAL;
    });
}

urdcop_status urdcop_bench_run(const char* config_json, char** out_jsonl, char** out_table) {
    if (!config_json || !out_jsonl) return fail(URDCOP_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        BenchConfig config = parse_bench_config(config_json);
        BenchReport report = run_benchmark(config);
        *out_jsonl = dup_string(bench_report_jsonl(report));
        if (out_table) *out_table = dup_string(bench_report_table(report));
        return URDCOP_OK;
    });
}

} // extern "C"
