#include "urdcop/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "urdcop/errors.hpp"
#include "urdcop/icg.hpp"
#include "urdcop/io.hpp"
#include "urdcop/maxsum.hpp"
#include "urdcop/rng.hpp"

namespace urdcop {

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

/// One link-layout attempt. Fills `scopes` with agent positions per task;
/// returns false when an agent ends up uncovered or a scope cannot be placed.
bool draw_links(const GenParams& params, Rng& rng, std::vector<std::vector<int>>& scopes) {
    const int num_agents = params.resolved_agents();
    const int num_tasks = params.num_tasks;
    const bool tree = params.topology == GenParams::Topology::Tree;

    if ((long long)num_tasks * params.max_scope < num_agents) return false;

    std::vector<int> scope_size(num_tasks);
    long long total_slots = 0;
    for (int j = 0; j < num_tasks; ++j) {
        scope_size[j] = 1 + rng.next_int(params.max_scope);
        total_slots += scope_size[j];
    }
    while (total_slots < num_agents) {
        const int j = rng.next_int(num_tasks);
        if (scope_size[j] < params.max_scope) {
            ++scope_size[j];
            ++total_slots;
        }
    }

    scopes.assign(num_tasks, {});
    UnionFind components(num_agents);
    std::vector<bool> covered(num_agents, false);
    int uncovered = num_agents;
    long long slots_remaining = total_slots;

    for (int j = 0; j < num_tasks; ++j) {
        int merged_root = -1;
        for (int slot = 0; slot < scope_size[j]; ++slot) {
            std::vector<int> candidates;
            const bool reserve = (uncovered == slots_remaining);
            for (int a = 0; a < num_agents; ++a) {
                if (reserve && covered[a]) continue;
                if (std::find(scopes[j].begin(), scopes[j].end(), a) != scopes[j].end())
                    continue;
                if (tree && merged_root != -1 && components.find(a) == merged_root) continue;
                candidates.push_back(a);
            }
            if (candidates.empty()) {
                // scope truncated; the coverage reserve may now be infeasible
                slots_remaining -= scope_size[j] - slot;
                if (uncovered > slots_remaining) return false;
                break;
            }
            const int pick = candidates[rng.next_int((int)candidates.size())];
            scopes[j].push_back(pick);
            if (!covered[pick]) {
                covered[pick] = true;
                --uncovered;
            }
            if (tree) {
                if (merged_root == -1) {
                    merged_root = components.find(pick);
                } else {
                    components.unite(pick, merged_root);
                    merged_root = components.find(pick);
                }
            }
            --slots_remaining;
        }
    }
    return uncovered == 0;
}

} // namespace

GenResult generate_instance(const GenParams& params) {
    if (params.num_tasks < 1 || params.resolved_agents() < 1 || params.num_states < 1 ||
        params.max_scope < 1)
        throw std::invalid_argument("generator parameters must all be >= 1");

    const int num_agents = params.resolved_agents();
    const int num_tasks = params.num_tasks;

    std::vector<std::vector<int>> scopes;
    Rng rng(0);
    bool placed = false;
    for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
        rng = Rng(mix_seed(params.seed, (std::uint64_t)attempt));
        placed = draw_links(params, rng, scopes);
    }
    if (!placed)
        throw std::invalid_argument(
            "could not generate a feasible topology after 100 attempts");

    GenResult result;
    result.instance.agents.resize(num_agents);
    for (int a = 0; a < num_agents; ++a) result.instance.agents[a].id = a + 1;

    // Domains: the tasks an agent is linked to, ascending by task id.
    std::vector<std::vector<int>> agent_tasks(num_agents);
    for (int j = 0; j < num_tasks; ++j)
        for (int a : scopes[j]) agent_tasks[a].push_back(j);
    for (int a = 0; a < num_agents; ++a) {
        std::sort(agent_tasks[a].begin(), agent_tasks[a].end());
        for (int j : agent_tasks[a])
            result.instance.agents[a].domain.push_back("t" + std::to_string(j + 1));
    }

    result.instance.constraints.resize(num_tasks);
    for (int j = 0; j < num_tasks; ++j) {
        Constraint& c = result.instance.constraints[j];
        c.id = j + 1;
        c.num_states = params.num_states;
        for (int a : scopes[j]) c.scope.push_back(a + 1);
    }

    // Utilities. A row is "active" when at least one linked agent selects the
    // task; active entries are Gaussian draws around the task mean with a
    // per-(state, row) perturbation of the same spread, inactive entries are 0.
    for (int j = 0; j < num_tasks; ++j) {
        Constraint& c = result.instance.constraints[j];
        const int arity = (int)scopes[j].size();
        std::vector<int> sizes(arity);
        std::vector<int> select_index(arity); // domain index that picks task j
        int rows = 1;
        for (int t = 0; t < arity; ++t) {
            const int a = scopes[j][t];
            sizes[t] = (int)agent_tasks[a].size();
            select_index[t] = (int)(std::find(agent_tasks[a].begin(), agent_tasks[a].end(), j) -
                                    agent_tasks[a].begin());
            rows *= sizes[t];
        }

        const double mean = rng.next_uniform(80.0, 100.0);
        const double spread = rng.next_uniform(0.0, 80.0);
        const double sigma = params.spread_is_stddev ? spread : std::sqrt(spread);
        result.task_means.push_back(mean);
        result.task_spreads.push_back(spread);

        std::vector<bool> active(rows, false);
        std::vector<double> base(rows, 0.0);
        std::vector<int> digits(arity, 0);
        for (int row = 0; row < rows; ++row) {
            for (int t = 0; t < arity; ++t)
                if (digits[t] == select_index[t]) { active[row] = true; break; }
            if (active[row]) base[row] = rng.next_normal(mean, sigma);
            for (int t = arity - 1; t >= 0; --t) {
                if (++digits[t] < sizes[t]) break;
                digits[t] = 0;
            }
        }
        c.table.assign((std::size_t)params.num_states * rows, 0.0);
        for (int s = 0; s < params.num_states; ++s)
            for (int row = 0; row < rows; ++row)
                if (active[row])
                    c.table[(std::size_t)s * rows + row] = base[row] + rng.next_normal(0.0, sigma);
    }

    for (int j = 0; j < num_tasks; ++j) result.true_states.push_back(rng.next_int(params.num_states));

    result.instance.finalize();
    return result;
}

EvalReport evaluate_average_regret(const Instance& instance, std::uint64_t seed,
                                   const Assignment& assignment, int runs, double guard) {
    if ((int)assignment.size() != instance.agent_count())
        throw std::invalid_argument("assignment must cover every agent");
    if (runs < 1) throw std::invalid_argument("runs must be >= 1");

    FactorGraph g = build_factor_graph(instance);
    const bool acyclic = is_acyclic(g);
    if (!acyclic && joint_assignment_count(instance) > guard)
        throw GuardExceededError("cyclic instance too large to evaluate exactly");

    Rng rng(mix_seed(seed, 0xe7a1));
    EvalReport report;
    report.runs = runs;
    report.seed = seed;
    std::vector<int> states(instance.constraint_count());
    for (int run = 0; run < runs; ++run) {
        for (int j = 0; j < instance.constraint_count(); ++j)
            states[j] = rng.next_int(instance.constraints[j].num_states);
        ScalarTables tables = state_slice_tables(instance, states);
        double optimal;
        if (acyclic) {
            optimal = optimal_value(g, instance, tables);
        } else {
            Assignment candidate(instance.agent_count(), 0);
            optimal = -std::numeric_limits<double>::infinity();
            do {
                optimal = std::max(optimal, tables_value(g, instance, tables, candidate));
                for (int i = instance.agent_count() - 1; i >= 0; --i) {
                    if (++candidate[i] < instance.domain_size(i)) goto next_candidate;
                    candidate[i] = 0;
                }
                break;
            next_candidate:;
            } while (true);
        }
        const double value = tables_value(g, instance, tables, assignment);
        // the true optimum dominates any assignment; max() only strips float noise
        report.regrets.push_back(std::max(0.0, optimal - value));
    }

    report.mean = std::accumulate(report.regrets.begin(), report.regrets.end(), 0.0) / runs;
    double ss = 0.0;
    for (double r : report.regrets) ss += (r - report.mean) * (r - report.mean);
    report.stddev = std::sqrt(ss / runs);
    return report;
}

namespace {

bool verbose() {
    const char* env = std::getenv("URDCOP_VERBOSE");
    return env && env[0] != '\0' && env[0] != '0';
}

std::string status_name(SolveStatus status) {
    switch (status) {
        case SolveStatus::Converged: return "ok";
        case SolveStatus::IterationCapReached: return "iteration-cap";
        case SolveStatus::Stalled: return "stalled";
        case SolveStatus::Timeout: return "timeout";
    }
    return "error";
}

GenParams cell_params(const BenchSize& size, std::uint64_t seed) {
    GenParams params;
    params.num_tasks = size.tasks;
    params.num_agents = size.agents;
    params.num_states = size.states;
    params.max_scope = size.max_scope;
    params.topology = size.topology;
    params.seed = seed;
    return params;
}

} // namespace

BenchReport run_benchmark(const BenchConfig& config) {
    BenchReport report;
    for (const BenchSize& size : config.sizes) {
        for (std::uint64_t seed : config.seeds) {
            GenResult gen = generate_instance(cell_params(size, seed));
            const std::string hash = instance_hash(gen.instance);
            for (const std::string& algorithm : config.algorithms) {
                BenchRow row;
                row.algorithm = algorithm;
                row.size = size;
                row.seed = seed;
                row.instance_hash = hash;

                std::optional<std::chrono::steady_clock::time_point> deadline;
                const auto start = std::chrono::steady_clock::now();
                if (config.time_limit_seconds > 0)
                    deadline = start + std::chrono::milliseconds(
                                           (long long)(config.time_limit_seconds * 1000));

                Assignment assignment;
                try {
                    if (algorithm == "icg-maxsum") {
                        IcgOptions options;
                        options.allow_cycles = true; // benchmark cells run best-effort
                        options.max_iterations = config.max_iterations;
                        options.deadline = deadline;
                        SolveResult solved = icg_maxsum(gen.instance, options);
                        assignment = solved.assignment;
                        row.status = status_name(solved.status);
                        row.iterations = (int)solved.iterations.size();
                        row.witness_count = solved.witness_count;
                    } else if (algorithm == "icg-exact") {
                        OracleOptions options;
                        options.max_iterations = config.max_iterations;
                        options.deadline = deadline;
                        OracleResult solved = centralized_icg(gen.instance, options);
                        assignment = solved.assignment;
                        row.status = status_name(solved.status);
                        row.iterations = (int)solved.iterations.size();
                        row.witness_count = (int)solved.iterations.size();
                    } else if (algorithm == "dsa") {
                        DsaParams params = config.dsa;
                        params.seed = seed;
                        params.deadline = deadline;
                        OracleResult solved = dsa_minimax(gen.instance, params);
                        assignment = solved.assignment;
                        row.status = status_name(solved.status);
                        row.iterations = (int)solved.iterations.size();
                    } else if (algorithm == "oracle") {
                        OracleOptions options;
                        options.deadline = deadline;
                        OracleResult solved = minimax_oracle(gen.instance, options);
                        assignment = solved.assignment;
                        row.status = status_name(solved.status);
                    } else {
                        throw std::invalid_argument("unknown algorithm: " + algorithm);
                    }
                } catch (const GuardExceededError&) {
                    row.status = "guard-exceeded";
                } catch (const CyclicGraphError&) {
                    row.status = "cyclic";
                }
                row.solve_seconds =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                        .count();

                if (!assignment.empty()) {
                    EvalReport eval = evaluate_average_regret(
                        gen.instance, mix_seed(seed, 0x5eed), assignment, config.eval_runs);
                    row.regret_mean = eval.mean;
                    row.regret_std = eval.stddev;
                    row.evaluated = true;
                }
                if (verbose())
                    std::cerr << "[bench] " << algorithm << " tasks=" << size.tasks
                              << " seed=" << seed << " status=" << row.status << " ("
                              << row.solve_seconds << "s)\n";
                report.rows.push_back(std::move(row));
            }
        }
    }
    return report;
}

BenchConfig parse_bench_config(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("bench config: ") + e.what());
    }
    BenchConfig config;
    if (!doc.contains("algorithms") || !doc["algorithms"].is_array())
        throw ParseError("bench config: missing \"algorithms\" field");
    for (const auto& a : doc["algorithms"]) config.algorithms.push_back(a.get<std::string>());
    if (!doc.contains("sizes") || !doc["sizes"].is_array())
        throw ParseError("bench config: missing \"sizes\" field");
    for (const auto& s : doc["sizes"]) {
        BenchSize size;
        if (!s.contains("tasks")) throw ParseError("bench config: size entry missing \"tasks\"");
        size.tasks = s["tasks"].get<int>();
        size.agents = s.value("agents", 0);
        size.states = s.value("states", 1);
        size.max_scope = s.value("max_scope", 3);
        const std::string topology = s.value("topology", std::string("tree"));
        if (topology == "tree") {
            size.topology = GenParams::Topology::Tree;
        } else if (topology == "random") {
            size.topology = GenParams::Topology::Random;
        } else {
            throw ParseError("bench config: unknown topology \"" + topology + "\"");
        }
        config.sizes.push_back(size);
    }
    if (!doc.contains("seeds") || !doc["seeds"].is_array())
        throw ParseError("bench config: missing \"seeds\" field");
    for (const auto& s : doc["seeds"]) config.seeds.push_back(s.get<std::uint64_t>());
    config.eval_runs = doc.value("eval_runs", 100);
    config.time_limit_seconds = doc.value("time_limit_seconds", 0.0);
    config.max_iterations = doc.value("max_iterations", 1000);
    config.dsa.activation_probability = doc.value("dsa_activation", 0.6);
    config.dsa.inner_iterations = doc.value("dsa_inner_iterations", 50);
    config.dsa.outer_iterations = doc.value("dsa_outer_iterations", 20);
    return config;
}

std::string bench_report_jsonl(const BenchReport& report) {
    std::ostringstream out;
    for (const BenchRow& row : report.rows) {
        nlohmann::json record{
            {"algorithm", row.algorithm},
            {"tasks", row.size.tasks},
            {"agents", row.size.agents > 0 ? row.size.agents : (row.size.tasks + 1) / 2},
            {"states", row.size.states},
            {"topology",
             row.size.topology == GenParams::Topology::Tree ? "tree" : "random"},
            {"seed", row.seed},
            {"instance_hash", row.instance_hash},
            {"status", row.status},
            {"solve_seconds", row.solve_seconds},
            {"iterations", row.iterations},
            {"witness_count", row.witness_count},
        };
        if (row.evaluated) {
            record["regret_mean"] = row.regret_mean;
            record["regret_std"] = row.regret_std;
        } else {
            record["regret_mean"] = nullptr;
            record["regret_std"] = nullptr;
        }
        out << record.dump() << "\n";
    }
    return out.str();
}

std::string bench_report_table(const BenchReport& report) {
    std::ostringstream out;
    out << "algorithm    tasks agents states seed  status         solve_s   regret_mean\n";
    for (const BenchRow& row : report.rows) {
        char line[160];
        const int agents = row.size.agents > 0 ? row.size.agents : (row.size.tasks + 1) / 2;
        if (row.evaluated) {
            std::snprintf(line, sizeof line, "%-12s %5d %6d %6d %4llu  %-13s %8.2f  %12.2f\n",
                          row.algorithm.c_str(), row.size.tasks, agents, row.size.states,
                          (unsigned long long)row.seed, row.status.c_str(), row.solve_seconds,
                          row.regret_mean);
        } else {
            std::snprintf(line, sizeof line, "%-12s %5d %6d %6d %4llu  %-13s %8.2f  %12s\n",
                          row.algorithm.c_str(), row.size.tasks, agents, row.size.states,
                          (unsigned long long)row.seed, row.status.c_str(), row.solve_seconds,
                          "-");
        }
        out << line;
    }
    return out.str();
}

} // namespace urdcop
