#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "urdcop/model.hpp"
#include "urdcop/reference.hpp"

namespace urdcop {

struct GenParams {
    enum class Topology { Tree, Random };

    int num_tasks = 1;
    int num_agents = 0; // 0 -> ceil(num_tasks / 2)
    int num_states = 1;
    int max_scope = 3;
    Topology topology = Topology::Tree;
    std::uint64_t seed = 0;
    // The task spread is drawn uniformly from [0, 80] and read as a variance;
    // set this to treat the draw as a standard deviation instead.
    bool spread_is_stddev = false;

    int resolved_agents() const {
        return num_agents > 0 ? num_agents : (num_tasks + 1) / 2;
    }
};

struct GenResult {
    Instance instance;
    std::vector<int> true_states; // hidden from solvers, one per task
    std::vector<double> task_means;
    std::vector<double> task_spreads; // the raw [0, 80] draws
};

/// Random task-allocation instance: agents 1..A, one constraint per task over
/// the agents linked to it, per-state Gaussian utilities. Tree topology keeps
/// the factor graph acyclic. Fully deterministic given the seed; link layouts
/// leaving an agent with an empty domain are redrawn internally (error after
/// 100 attempts).
GenResult generate_instance(const GenParams& params);

struct EvalReport {
    std::vector<double> regrets;
    double mean = 0.0;
    double stddev = 0.0; // population
    int runs = 0;
    std::uint64_t seed = 0;
};

/// The hidden-state evaluation protocol: per run, draw one true state per
/// task, compute the optimal total value given those states (Max-Sum on
/// acyclic graphs, enumeration within the guard otherwise) and subtract the
/// assignment's value.
EvalReport evaluate_average_regret(const Instance& instance, std::uint64_t seed,
                                   const Assignment& assignment, int runs,
                                   double guard = 1e7);

struct BenchSize {
    int tasks = 0;
    int agents = 0; // 0 -> default
    int states = 1;
    int max_scope = 3;
    GenParams::Topology topology = GenParams::Topology::Tree;
};

struct BenchConfig {
    std::vector<std::string> algorithms; // icg-maxsum | icg-exact | dsa | oracle
    std::vector<BenchSize> sizes;
    std::vector<std::uint64_t> seeds;
    int eval_runs = 100;
    double time_limit_seconds = 0.0; // 0 -> unlimited
    int max_iterations = 1000;
    DsaParams dsa;
};

struct BenchRow {
    std::string algorithm;
    BenchSize size;
    std::uint64_t seed = 0;
    std::string instance_hash;
    std::string status; // ok | timeout | iteration-cap | stalled | guard-exceeded | error
    double solve_seconds = 0.0;
    double regret_mean = 0.0;
    double regret_std = 0.0;
    bool evaluated = false;
    int iterations = 0;
    int witness_count = 0;
};

struct BenchReport {
    std::vector<BenchRow> rows;
};

/// Runs every (algorithm, size, seed) cell. Instances and evaluation states
/// are derived from the cell seed only, so all algorithms see identical
/// problems; per-cell timeouts are recorded and the run continues.
BenchReport run_benchmark(const BenchConfig& config);

BenchConfig parse_bench_config(const std::string& json_text);
std::string bench_report_jsonl(const BenchReport& report);
std::string bench_report_table(const BenchReport& report);

} // namespace urdcop
