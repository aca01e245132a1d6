#include "urdcop/maxsum.hpp"

#include <limits>
#include <stdexcept>

#include "urdcop/errors.hpp"

namespace urdcop {

Payload variable_message(const std::vector<Payload>& incoming, int domain_size) {
    Payload out(domain_size, 0.0);
    for (const Payload& payload : incoming) {
        if ((int)payload.size() != domain_size)
            throw std::invalid_argument("payload domain mismatch in variable message");
        for (int v = 0; v < domain_size; ++v) out[v] += payload[v];
    }
    double mean = 0.0;
    for (double x : out) mean += x;
    mean /= domain_size;
    for (double& x : out) x -= mean; // alpha normalization
    return out;
}

Payload function_message(const std::vector<int>& scope_sizes,
                         const std::vector<double>& row_utilities, int target_pos,
                         const std::vector<const Payload*>& incoming) {
    const int arity = (int)scope_sizes.size();
    if ((int)incoming.size() != arity)
        throw std::invalid_argument("function message needs one incoming slot per scope position");
    for (int t = 0; t < arity; ++t) {
        if (t == target_pos) continue;
        if (incoming[t] == nullptr)
            throw std::invalid_argument("missing incoming message at scope position " +
                                        std::to_string(t));
        if ((int)incoming[t]->size() != scope_sizes[t])
            throw std::invalid_argument("payload domain mismatch in function message");
    }

    Payload out(scope_sizes[target_pos], -std::numeric_limits<double>::infinity());
    std::vector<int> digits(arity, 0);
    const int rows = (int)row_utilities.size();
    for (int row = 0; row < rows; ++row) {
        double score = row_utilities[row];
        for (int t = 0; t < arity; ++t)
            if (t != target_pos) score += (*incoming[t])[digits[t]];
        double& best = out[digits[target_pos]];
        if (score > best) best = score;
        // advance mixed-radix odometer, last position fastest
        for (int t = arity - 1; t >= 0; --t) {
            if (++digits[t] < scope_sizes[t]) break;
            digits[t] = 0;
        }
    }
    return out;
}

Payload marginal(const std::vector<Payload>& incoming, int domain_size) {
    Payload out(domain_size, 0.0);
    for (const Payload& payload : incoming) {
        if ((int)payload.size() != domain_size)
            throw std::invalid_argument("payload domain mismatch in marginal");
        for (int v = 0; v < domain_size; ++v) out[v] += payload[v];
    }
    return out;
}

MaxsumState run_scalar_maxsum(const FactorGraph& g, const Instance& instance,
                              const ScalarTables& utilities, int rounds,
                              bool normalize) {
    if ((int)utilities.size() != g.num_functions)
        throw std::invalid_argument("one utility table per function node required");

    MaxsumState state;
    state.rounds = rounds;
    state.q.resize(g.num_functions);
    state.r.resize(g.num_functions);
    for (int j = 0; j < g.num_functions; ++j) {
        const auto& scope = g.fun_variables[j];
        state.q[j].resize(scope.size());
        state.r[j].resize(scope.size());
        for (int t = 0; t < (int)scope.size(); ++t) {
            state.q[j][t].assign(instance.domain_size(scope[t]), 0.0);
            state.r[j][t].assign(instance.domain_size(scope[t]), 0.0);
        }
    }

    // Edge list per variable: (function, scope position).
    std::vector<std::vector<std::pair<int, int>>> var_edges(g.num_variables);
    for (int j = 0; j < g.num_functions; ++j)
        for (int t = 0; t < (int)g.fun_variables[j].size(); ++t)
            var_edges[g.fun_variables[j][t]].push_back({j, t});

    auto next_q = state.q;
    auto next_r = state.r;
    for (int round = 0; round < rounds; ++round) {
        // q from previous r: every node sends each round from what it last
        // received (round-synchronous flooding).
        for (int i = 0; i < g.num_variables; ++i) {
            for (auto [j, t] : var_edges[i]) {
                std::vector<Payload> others;
                others.reserve(var_edges[i].size());
                for (auto [k, u] : var_edges[i])
                    if (k != j || u != t) others.push_back(state.r[k][u]);
                next_q[j][t] = normalize ? variable_message(others, instance.domain_size(i))
                                         : marginal(others, instance.domain_size(i));
            }
        }
        // r from previous q.
        for (int j = 0; j < g.num_functions; ++j) {
            const Constraint& c = instance.constraints[j];
            const int arity = (int)g.fun_variables[j].size();
            for (int t = 0; t < arity; ++t) {
                std::vector<const Payload*> incoming(arity, nullptr);
                for (int u = 0; u < arity; ++u)
                    if (u != t) incoming[u] = &state.q[j][u];
                next_r[j][t] = function_message(c.scope_sizes, utilities[j], t, incoming);
            }
        }
        state.q.swap(next_q);
        state.r.swap(next_r);
    }

    state.marginals.resize(g.num_variables);
    for (int i = 0; i < g.num_variables; ++i) {
        std::vector<Payload> incoming;
        incoming.reserve(var_edges[i].size());
        for (auto [j, t] : var_edges[i]) incoming.push_back(state.r[j][t]);
        state.marginals[i] = marginal(incoming, instance.domain_size(i));
    }
    return state;
}

namespace {

int rounds_or_throw(const FactorGraph& g, const MaxsumOptions& options) {
    if (!is_acyclic(g)) {
        if (!options.allow_cycles)
            throw CyclicGraphError("cyclic factor graph: exactness not guaranteed");
        return options.cyclic_round_cap;
    }
    return message_rounds(g);
}

} // namespace

DcopResult solve_dcop(const FactorGraph& g, const Instance& instance,
                      const ScalarTables& utilities, const MaxsumOptions& options) {
    const int rounds = rounds_or_throw(g, options);
    MaxsumState state = run_scalar_maxsum(g, instance, utilities, rounds);
    DcopResult result;
    result.assignment.resize(g.num_variables);
    for (int i = 0; i < g.num_variables; ++i) {
        const Payload& z = state.marginals[i];
        int best = 0;
        for (int v = 1; v < (int)z.size(); ++v)
            if (z[v] > z[best]) best = v;
        result.assignment[i] = best;
    }
    result.value = tables_value(g, instance, utilities, result.assignment);
    return result;
}

double optimal_value(const FactorGraph& g, const Instance& instance,
                     const ScalarTables& utilities, const MaxsumOptions& options) {
    const int rounds = rounds_or_throw(g, options);
    MaxsumState state = run_scalar_maxsum(g, instance, utilities, rounds, /*normalize=*/false);
    // The converged marginal of any variable carries its component's optimum;
    // components are independent, so the total is the sum over one
    // representative variable per component.
    PropagationTree tree = spanning_tree(g);
    double total = 0.0;
    for (int root : tree.roots) {
        const Payload& z = state.marginals[root];
        double best = z[0];
        for (double v : z) best = std::max(best, v);
        total += best;
    }
    return total;
}

double tables_value(const FactorGraph& g, const Instance& instance,
                    const ScalarTables& utilities, const Assignment& assignment) {
    double total = 0.0;
    for (int j = 0; j < g.num_functions; ++j)
        total += utilities[j][assignment_row(instance.constraints[j], assignment)];
    return total;
}

ScalarTables state_slice_tables(const Instance& instance, const std::vector<int>& states) {
    if ((int)states.size() != instance.constraint_count())
        throw std::invalid_argument("one state per constraint required");
    ScalarTables tables(instance.constraint_count());
    for (int j = 0; j < instance.constraint_count(); ++j) {
        const Constraint& c = instance.constraints[j];
        tables[j].resize(c.rows);
        for (int row = 0; row < c.rows; ++row) tables[j][row] = c.value(states[j], row);
    }
    return tables;
}

} // namespace urdcop
