#include "urdcop/factor_graph.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

#include "urdcop/errors.hpp"

namespace urdcop {

int FactorGraph::edge_count() const {
    int count = 0;
    for (const auto& scope : fun_variables) count += (int)scope.size();
    return count;
}

std::vector<int> FactorGraph::neighbors(int node) const {
    std::vector<int> out;
    if (is_variable_node(node)) {
        for (int j : var_functions[node]) out.push_back(function_node(j));
    } else {
        for (int i : fun_variables[node - num_variables]) out.push_back(i);
    }
    return out;
}

FactorGraph build_factor_graph(const Instance& instance) {
    ValidationReport report = validate_instance(instance);
    if (!report.ok) {
        std::ostringstream msg;
        msg << "cannot build factor graph from invalid instance:";
        for (const auto& v : report.violations) msg << "\n  " << v;
        throw ValidationError(msg.str());
    }
    FactorGraph g;
    g.num_variables = instance.agent_count();
    g.num_functions = instance.constraint_count();
    g.var_functions.resize(g.num_variables);
    g.fun_variables.resize(g.num_functions);
    for (int j = 0; j < g.num_functions; ++j) {
        const Constraint& c = instance.constraints[j];
        for (int t = 0; t < c.arity(); ++t) {
            int pos = c.scope_pos.empty() ? instance.agent_pos(c.scope[t]) : c.scope_pos[t];
            g.fun_variables[j].push_back(pos);
            g.var_functions[pos].push_back(j);
        }
    }
    return g;
}

namespace {

// BFS component labels; nodes visited in ascending id order so labels are
// deterministic.
std::vector<int> component_labels(const FactorGraph& g, int* num_components) {
    std::vector<int> label(g.node_count(), -1);
    int components = 0;
    for (int start = 0; start < g.node_count(); ++start) {
        if (label[start] != -1) continue;
        label[start] = components;
        std::deque<int> queue{start};
        while (!queue.empty()) {
            int node = queue.front();
            queue.pop_front();
            for (int next : g.neighbors(node)) {
                if (label[next] == -1) {
                    label[next] = components;
                    queue.push_back(next);
                }
            }
        }
        ++components;
    }
    if (num_components) *num_components = components;
    return label;
}

} // namespace

bool is_acyclic(const FactorGraph& g) {
    int components = 0;
    component_labels(g, &components);
    // An undirected graph is a forest iff |E| = |V| - #components.
    return g.edge_count() == g.node_count() - components;
}

PropagationTree spanning_tree(const FactorGraph& g) {
    PropagationTree tree;
    tree.parent.assign(g.node_count(), -2); // -2 = unvisited
    for (int start = 0; start < g.num_variables; ++start) {
        if (tree.parent[start] != -2) continue;
        tree.parent[start] = -1;
        tree.roots.push_back(start);
        std::deque<int> queue{start};
        while (!queue.empty()) {
            int node = queue.front();
            queue.pop_front();
            tree.order.push_back(node);
            for (int next : g.neighbors(node)) {
                if (tree.parent[next] == -2) {
                    tree.parent[next] = node;
                    queue.push_back(next);
                }
            }
        }
    }
    // Function nodes always have a variable neighbor, so every node is reached
    // from some variable root.
    return tree;
}

int graph_diameter(const FactorGraph& g) {
    int diameter = 0;
    std::vector<int> dist(g.node_count());
    for (int start = 0; start < g.node_count(); ++start) {
        std::fill(dist.begin(), dist.end(), -1);
        dist[start] = 0;
        std::deque<int> queue{start};
        while (!queue.empty()) {
            int node = queue.front();
            queue.pop_front();
            for (int next : g.neighbors(node)) {
                if (dist[next] == -1) {
                    dist[next] = dist[node] + 1;
                    diameter = std::max(diameter, dist[next]);
                    queue.push_back(next);
                }
            }
        }
    }
    return diameter;
}

int message_rounds(const FactorGraph& g, int cyclic_round_cap) {
    if (!is_acyclic(g)) return cyclic_round_cap;
    return std::max(1, graph_diameter(g));
}

} // namespace urdcop
