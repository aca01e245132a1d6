// urdcop command-line tool. Talks to the solver library exclusively through
// the C API in urdcop.h; file and flag handling live here.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "urdcop.h"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitSolver = 2;

using InstancePtr = std::unique_ptr<urdcop_instance, decltype(&urdcop_instance_free)>;
using ResultPtr = std::unique_ptr<urdcop_result, decltype(&urdcop_result_free)>;

struct CString {
    char* value = nullptr;
    ~CString() { urdcop_string_free(value); }
};

[[noreturn]] void die(const std::string& context) {
    std::cerr << "error: " << context;
    const char* detail = urdcop_last_error();
    if (detail && detail[0]) std::cerr << ": " << detail;
    std::cerr << "\n";
    std::exit(kExitSolver);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) die("cannot open " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) die("cannot write " + path);
    out << text;
}

InstancePtr load_instance(const std::string& path) {
    urdcop_instance* instance = nullptr;
    if (urdcop_instance_load(path.c_str(), &instance) != URDCOP_OK)
        die("cannot load instance " + path);
    return InstancePtr(instance, &urdcop_instance_free);
}

std::string states_sidecar(const std::string& path) {
    const std::string suffix = ".json";
    if (path.size() > suffix.size() &&
        path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0)
        return path.substr(0, path.size() - suffix.size()) + ".states.json";
    return path + ".states.json";
}

int algorithm_code(const std::string& name) {
    if (name == "icg-maxsum") return URDCOP_ALGO_ICG_MAXSUM;
    if (name == "icg-exact") return URDCOP_ALGO_ICG_EXACT;
    if (name == "dsa") return URDCOP_ALGO_DSA;
    return URDCOP_ALGO_ORACLE;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust solver for DCOPs with uncertain task rewards"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a random instance");
    int gen_tasks = 0, gen_agents = 0, gen_states = 1, gen_max_scope = 3;
    std::string gen_topology = "tree", gen_out;
    std::uint64_t gen_seed = 0;
    gen->add_option("--tasks", gen_tasks, "Number of tasks")->required();
    gen->add_option("--agents", gen_agents, "Number of agents (default: tasks/2, rounded up)");
    gen->add_option("--states", gen_states, "States per task");
    gen->add_option("--topology", gen_topology, "Link topology")
        ->check(CLI::IsMember({"tree", "random"}));
    gen->add_option("--seed", gen_seed, "Generator seed");
    gen->add_option("--max-scope", gen_max_scope, "Max agents per task");
    gen->add_option("--out", gen_out, "Instance file to write")->required();

    // solve
    auto* solve = app.add_subcommand("solve", "Solve an instance");
    std::string solve_algo, solve_in, solve_out;
    bool solve_allow_cycles = false;
    int solve_max_iters = 1000;
    std::uint64_t solve_seed = 0;
    double solve_dsa_p = 0.6, solve_time_limit = 0.0;
    int solve_dsa_inner = 50, solve_dsa_outer = 20;
    solve->add_option("--algo", solve_algo, "Algorithm")
        ->required()
        ->check(CLI::IsMember({"icg-maxsum", "icg-exact", "dsa", "oracle"}));
    solve->add_option("--in", solve_in, "Instance file")->required();
    solve->add_option("--out", solve_out, "Solution file to write")->required();
    solve->add_flag("--allow-cycles", solve_allow_cycles,
                    "Accept cyclic factor graphs (best-effort mode)");
    solve->add_option("--max-iters", solve_max_iters, "Constraint-generation iteration cap");
    solve->add_option("--seed", solve_seed, "Seed (dsa)");
    solve->add_option("--dsa-p", solve_dsa_p, "DSA activation probability");
    solve->add_option("--dsa-inner", solve_dsa_inner, "DSA rounds per step");
    solve->add_option("--dsa-outer", solve_dsa_outer, "DSA alternations");
    solve->add_option("--time-limit", solve_time_limit, "Wall-clock limit in seconds");

    // regret
    auto* regret = app.add_subcommand("regret", "Exact max regret of a solution");
    std::string regret_in, regret_solution;
    regret->add_option("--in", regret_in, "Instance file")->required();
    regret->add_option("--solution", regret_solution, "Solution file")->required();

    // eval
    auto* eval = app.add_subcommand("eval", "Hidden-state evaluation of a solution");
    std::string eval_in, eval_solution;
    int eval_runs = 100;
    std::uint64_t eval_seed = 0;
    eval->add_option("--in", eval_in, "Instance file")->required();
    eval->add_option("--solution", eval_solution, "Solution file")->required();
    eval->add_option("--runs", eval_runs, "Number of state draws");
    eval->add_option("--seed", eval_seed, "Evaluation seed");

    // bench
    auto* bench = app.add_subcommand("bench", "Run a benchmark config");
    std::string bench_config, bench_out;
    bench->add_option("--config", bench_config, "Benchmark config file")->required();
    bench->add_option("--out", bench_out, "Report file to write (JSON lines)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (gen->parsed()) {
        urdcop_gen_params params{};
        params.num_tasks = gen_tasks;
        params.num_agents = gen_agents;
        params.num_states = gen_states;
        params.max_scope = gen_max_scope;
        params.topology = gen_topology == "random" ? URDCOP_TOPOLOGY_RANDOM : URDCOP_TOPOLOGY_TREE;
        params.seed = gen_seed;
        urdcop_instance* raw = nullptr;
        CString states;
        if (urdcop_generate(&params, &raw, &states.value) != URDCOP_OK)
            die("generation failed");
        InstancePtr instance(raw, &urdcop_instance_free);
        if (urdcop_instance_save(instance.get(), gen_out.c_str()) != URDCOP_OK)
            die("cannot write " + gen_out);
        write_file(states_sidecar(gen_out), states.value ? states.value : "");
        std::printf("wrote %s (agents=%d constraints=%d) and %s\n", gen_out.c_str(),
                    urdcop_instance_num_agents(instance.get()),
                    urdcop_instance_num_constraints(instance.get()),
                    states_sidecar(gen_out).c_str());
        return 0;
    }

    if (solve->parsed()) {
        InstancePtr instance = load_instance(solve_in);
        urdcop_solve_params params{};
        params.algorithm = algorithm_code(solve_algo);
        params.allow_cycles = solve_allow_cycles ? 1 : 0;
        params.max_iterations = solve_max_iters;
        params.dsa_activation = solve_dsa_p;
        params.dsa_inner_iterations = solve_dsa_inner;
        params.dsa_outer_iterations = solve_dsa_outer;
        params.seed = solve_seed;
        params.time_limit_seconds = solve_time_limit;
        urdcop_result* raw = nullptr;
        const urdcop_status status = urdcop_solve(instance.get(), &params, &raw);
        ResultPtr result(raw, &urdcop_result_free);
        if (!result) die("solve failed");
        CString json;
        if (urdcop_result_to_json(result.get(), &json.value) != URDCOP_OK)
            die("cannot serialize solution");
        write_file(solve_out, json.value);
        std::printf("algorithm=%s regret=%.17g iterations=%d witnesses=%d out=%s\n",
                    solve_algo.c_str(), urdcop_result_regret(result.get()),
                    urdcop_result_iterations(result.get()),
                    urdcop_result_witness_count(result.get()), solve_out.c_str());
        if (status != URDCOP_OK) die("solver did not converge");
        return 0;
    }

    if (regret->parsed()) {
        InstancePtr instance = load_instance(regret_in);
        const std::string solution = read_file(regret_solution);
        double value = 0.0;
        if (urdcop_solution_regret(instance.get(), solution.c_str(), &value) != URDCOP_OK)
            die("regret computation failed");
        std::printf("max_regret=%.17g\n", value);
        return 0;
    }

    if (eval->parsed()) {
        InstancePtr instance = load_instance(eval_in);
        const std::string solution = read_file(eval_solution);
        CString report;
        if (urdcop_evaluate(instance.get(), solution.c_str(), eval_runs, eval_seed,
                            &report.value) != URDCOP_OK)
            die("evaluation failed");
        std::fputs(report.value, stdout);
        return 0;
    }

    if (bench->parsed()) {
        const std::string config = read_file(bench_config);
        CString jsonl, table;
        if (urdcop_bench_run(config.c_str(), &jsonl.value, &table.value) != URDCOP_OK)
            die("benchmark failed");
        write_file(bench_out, jsonl.value);
        std::fputs(table.value, stdout);
        return 0;
    }

    return kExitUsage;
}
