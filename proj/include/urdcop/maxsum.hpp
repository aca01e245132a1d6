#pragma once

#include <vector>

#include "urdcop/factor_graph.hpp"
#include "urdcop/model.hpp"

namespace urdcop {

/// One message payload: a real per domain value of the edge's variable.
using Payload = std::vector<double>;

/// Per-function scalar utility tables, row-major over the scope domains in
/// scope order. The solver only reads these values, so callers can inject any
/// utility (raw table slices, regret-maximized utilities, ...).
using ScalarTables = std::vector<std::vector<double>>;

/// Variable-to-function message: componentwise sum of the incoming
/// function-to-variable payloads, shifted to sum to zero over the domain.
Payload variable_message(const std::vector<Payload>& incoming, int domain_size);

/// Function-to-variable message: for each value of the target variable, the
/// max over all scope completions of [utility(row) + sum of incoming payloads
/// at the completion]. `incoming` holds one payload per scope position;
/// the entry at target_pos must be null, all others non-null.
Payload function_message(const std::vector<int>& scope_sizes,
                         const std::vector<double>& row_utilities, int target_pos,
                         const std::vector<const Payload*>& incoming);

/// Componentwise sum of all incoming function-to-variable payloads.
Payload marginal(const std::vector<Payload>& incoming, int domain_size);

/// Message state after a synchronous flooding run.
struct MaxsumState {
    // Indexed [function][scope position]; q is variable-to-function, r the
    // reverse. Payloads range over the domain of the edge's variable.
    std::vector<std::vector<Payload>> q;
    std::vector<std::vector<Payload>> r;
    std::vector<Payload> marginals; // z_i, one payload per variable
    int rounds = 0;
};

/// Floods messages for the given number of rounds. With normalize=false the
/// variable messages skip the alpha shift; marginals then carry the true
/// max-marginal values (used to read optima off converged state).
MaxsumState run_scalar_maxsum(const FactorGraph& g, const Instance& instance,
                              const ScalarTables& utilities, int rounds,
                              bool normalize = true);

struct DcopResult {
    Assignment assignment;
    double value = 0.0;
};

struct MaxsumOptions {
    bool allow_cycles = false;
    int cyclic_round_cap = 100;
};

/// Full Max-Sum solve: flood for message_rounds(g) rounds, pick the argmax of
/// every marginal (lowest index on ties) and return the assignment with its
/// recomputed total utility. Exact on acyclic graphs with a unique optimum.
/// Throws CyclicGraphError on cyclic graphs unless allow_cycles is set.
DcopResult solve_dcop(const FactorGraph& g, const Instance& instance,
                      const ScalarTables& utilities, const MaxsumOptions& options = {});

/// Optimal total utility, read off the converged marginals per component.
/// Exact on acyclic graphs even when the optimum is not unique.
double optimal_value(const FactorGraph& g, const Instance& instance,
                     const ScalarTables& utilities, const MaxsumOptions& options = {});

/// Utility of a complete assignment under injected tables.
double tables_value(const FactorGraph& g, const Instance& instance,
                    const ScalarTables& utilities, const Assignment& assignment);

/// Tables for a deterministic DCOP: constraint j's utilities at a fixed state.
ScalarTables state_slice_tables(const Instance& instance, const std::vector<int>& states);

} // namespace urdcop
