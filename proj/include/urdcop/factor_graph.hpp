#pragma once

#include <vector>

#include "urdcop/model.hpp"

namespace urdcop {

/// Bipartite factor graph: one variable node per agent, one function node per
/// constraint, an edge (i, j) whenever agent i is in the scope of constraint
/// j. Node ids: variables occupy 0..n-1, functions n..n+m-1.
struct FactorGraph {
    int num_variables = 0;
    int num_functions = 0;
    std::vector<std::vector<int>> var_functions;  // M(i): constraint indices touching variable i
    std::vector<std::vector<int>> fun_variables;  // N(j): agent positions, scope order

    int node_count() const { return num_variables + num_functions; }
    int function_node(int j) const { return num_variables + j; }
    bool is_variable_node(int node) const { return node < num_variables; }
    int edge_count() const;
    /// Neighbor node ids of a node, in deterministic order (ascending function
    /// index for variables, scope order for functions).
    std::vector<int> neighbors(int node) const;
};

/// Builds the graph from a finalized instance; throws ValidationError when the
/// instance is malformed.
FactorGraph build_factor_graph(const Instance& instance);

/// True iff no connected component contains a cycle.
bool is_acyclic(const FactorGraph& g);

/// BFS spanning forest. Each component is rooted at its lowest-id variable
/// node; components are processed in ascending root order.
struct PropagationTree {
    std::vector<int> parent;  // node id -> parent node id, -1 at roots
    std::vector<int> order;   // BFS order, all components concatenated
    std::vector<int> roots;
};

PropagationTree spanning_tree(const FactorGraph& g);

/// Longest shortest path over all node pairs (max across components).
int graph_diameter(const FactorGraph& g);

/// Synchronous flooding rounds to run: the graph diameter when acyclic (the
/// messages are then at their fixed point), a configured cap otherwise.
int message_rounds(const FactorGraph& g, int cyclic_round_cap = 100);

} // namespace urdcop
