#include "urdcop/icg.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "urdcop/errors.hpp"

namespace urdcop {

bool WitnessSet::contains(const WitnessPoint& wp, double belief_tol) const {
    for (const WitnessPoint& have : points_) {
        if (have.solution != wp.solution) continue;
        if (have.beliefs.size() != wp.beliefs.size()) continue;
        bool same = true;
        for (std::size_t j = 0; same && j < have.beliefs.size(); ++j) {
            if (have.beliefs[j].size() != wp.beliefs[j].size()) { same = false; break; }
            for (std::size_t s = 0; s < have.beliefs[j].size(); ++s) {
                if (std::abs(have.beliefs[j][s] - wp.beliefs[j][s]) > belief_tol) {
                    same = false;
                    break;
                }
            }
        }
        if (same) return true;
    }
    return false;
}

bool WitnessSet::add(WitnessPoint wp, double belief_tol) {
    if (contains(wp, belief_tol)) return false;
    points_.push_back(std::move(wp));
    return true;
}

RegretVector regret_vector_add(const RegretVector& a, const RegretVector& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("regret vector length mismatch: " +
                                    std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    RegretVector out(a.size());
    for (std::size_t g = 0; g < a.size(); ++g) out[g] = a[g] + b[g];
    return out;
}

MasterTables build_master_tables(const Instance& instance, const WitnessSet& witnesses) {
    MasterTables tables;
    tables.witness_count = witnesses.size();
    const int G = tables.witness_count;
    tables.local_regret.resize(instance.constraint_count());
    for (int j = 0; j < instance.constraint_count(); ++j) {
        const Constraint& c = instance.constraints[j];
        auto& regret = tables.local_regret[j];
        regret.assign((std::size_t)c.rows * G, 0.0);
        for (int g = 0; g < G; ++g) {
            const WitnessPoint& wp = witnesses[g];
            const Belief& belief = wp.beliefs[j];
            std::vector<int> witness_values = restrict_to_scope(c, wp.solution);
            const double witness_value = expected_constraint_value(c, belief, witness_values);
            for (int row = 0; row < c.rows; ++row) {
                double row_value = 0.0;
                for (int s = 0; s < c.num_states; ++s) row_value += belief[s] * c.value(s, row);
                regret[(std::size_t)row * G + g] = witness_value - row_value;
            }
        }
    }
    return tables;
}

VectorPayload master_variable_message(const std::vector<VectorPayload>& incoming,
                                      int domain_size, int witness_count) {
    VectorPayload out(domain_size, RegretVector(witness_count, 0.0));
    for (const VectorPayload& payload : incoming) {
        if ((int)payload.size() != domain_size)
            throw std::invalid_argument("payload domain mismatch in master variable message");
        for (int v = 0; v < domain_size; ++v)
            out[v] = regret_vector_add(out[v], payload[v]);
    }
    // each witness slice sums to zero over the domain
    for (int g = 0; g < witness_count; ++g) {
        double mean = 0.0;
        for (int v = 0; v < domain_size; ++v) mean += out[v][g];
        mean /= domain_size;
        for (int v = 0; v < domain_size; ++v) out[v][g] -= mean;
    }
    return out;
}

VectorPayload master_function_message(const std::vector<int>& scope_sizes,
                                      const std::vector<double>& local_regret,
                                      int witness_count, int target_pos,
                                      const std::vector<const VectorPayload*>& incoming) {
    const int G = witness_count;
    if (G == 0) throw std::invalid_argument("master message with an empty witness set");
    const int arity = (int)scope_sizes.size();
    if ((int)incoming.size() != arity)
        throw std::invalid_argument("master function message needs one slot per scope position");
    for (int t = 0; t < arity; ++t) {
        if (t == target_pos) continue;
        if (incoming[t] == nullptr)
            throw std::invalid_argument("missing incoming master message at scope position " +
                                        std::to_string(t));
    }

    int rows = 1;
    for (int size : scope_sizes) rows *= size;
    VectorPayload out(scope_sizes[target_pos]);
    std::vector<double> best_key(scope_sizes[target_pos],
                                 std::numeric_limits<double>::infinity());
    std::vector<int> digits(arity, 0);
    RegretVector candidate(G);
    for (int row = 0; row < rows; ++row) {
        for (int g = 0; g < G; ++g) candidate[g] = local_regret[(std::size_t)row * G + g];
        for (int t = 0; t < arity; ++t) {
            if (t == target_pos) continue;
            const RegretVector& add = (*incoming[t])[digits[t]];
            if ((int)add.size() != G)
                throw std::invalid_argument("regret vector length mismatch in master message");
            for (int g = 0; g < G; ++g) candidate[g] += add[g];
        }
        double key = candidate[0];
        for (int g = 1; g < G; ++g) key = std::max(key, candidate[g]);
        const int target_value = digits[target_pos];
        if (key < best_key[target_value]) { // first completion wins ties
            best_key[target_value] = key;
            out[target_value] = candidate;
        }
        for (int t = arity - 1; t >= 0; --t) {
            if (++digits[t] < scope_sizes[t]) break;
            digits[t] = 0;
        }
    }
    return out;
}

VectorPayload master_function_message(const Constraint& c, const WitnessSet& witnesses,
                                      int target_pos,
                                      const std::vector<const VectorPayload*>& incoming) {
    const int G = witnesses.size();
    if (G == 0) throw std::invalid_argument("master message with an empty witness set");
    std::vector<double> regret((std::size_t)c.rows * G);
    // Beliefs are indexed by constraint position, which a single-constraint
    // view cannot know; witnesses must carry exactly one belief here.
    for (int g = 0; g < G; ++g) {
        const WitnessPoint& wp = witnesses[g];
        if (wp.beliefs.size() != 1)
            throw std::invalid_argument(
                "constraint-level master message requires single-constraint witnesses");
        const Belief& belief = wp.beliefs[0];
        std::vector<int> witness_values(c.arity());
        for (int t = 0; t < c.arity(); ++t) witness_values[t] = wp.solution[c.scope_pos[t]];
        const double witness_value = expected_constraint_value(c, belief, witness_values);
        for (int row = 0; row < c.rows; ++row) {
            double row_value = 0.0;
            for (int s = 0; s < c.num_states; ++s) row_value += belief[s] * c.value(s, row);
            regret[(std::size_t)row * G + g] = witness_value - row_value;
        }
    }
    return master_function_message(c.scope_sizes, regret, G, target_pos, incoming);
}

int master_select(const VectorPayload& marginal_vectors) {
    if (marginal_vectors.empty())
        throw std::invalid_argument("master_select on empty domain");
    int best = 0;
    double best_key = std::numeric_limits<double>::infinity();
    for (int v = 0; v < (int)marginal_vectors.size(); ++v) {
        double key = -std::numeric_limits<double>::infinity();
        for (double r : marginal_vectors[v]) key = std::max(key, r);
        if (key < best_key) {
            best_key = key;
            best = v;
        }
    }
    return best;
}

namespace {

std::vector<std::vector<int>> tree_children(const PropagationTree& tree) {
    std::vector<std::vector<int>> children(tree.parent.size());
    for (int node = 0; node < (int)tree.parent.size(); ++node)
        if (tree.parent[node] >= 0) children[tree.parent[node]].push_back(node);
    return children;
}

/// Sums per-function vectors along the propagation tree: an upward
/// accumulation per component, then totals joined across components. Every
/// node of a component ends up holding the component total; the grand total is
/// what delta is computed from.
RegretVector tree_sum_vectors(const FactorGraph& g, const PropagationTree& tree,
                              const std::vector<RegretVector>& per_function, int G) {
    std::vector<RegretVector> up(g.node_count(), RegretVector(G, 0.0));
    for (int j = 0; j < g.num_functions; ++j) up[g.function_node(j)] = per_function[j];
    for (int idx = (int)tree.order.size() - 1; idx >= 0; --idx) {
        const int node = tree.order[idx];
        const int parent = tree.parent[node];
        if (parent < 0) continue;
        for (int gdx = 0; gdx < G; ++gdx) up[parent][gdx] += up[node][gdx];
    }
    RegretVector total(G, 0.0);
    for (int root : tree.roots)
        for (int gdx = 0; gdx < G; ++gdx) total[gdx] += up[root][gdx];
#ifndef NDEBUG
    // The propagated total must match the direct sum of contributions.
    RegretVector direct(G, 0.0);
    for (int j = 0; j < g.num_functions; ++j)
        for (int gdx = 0; gdx < G; ++gdx) direct[gdx] += per_function[j][gdx];
    for (int gdx = 0; gdx < G; ++gdx)
        assert(std::abs(direct[gdx] - total[gdx]) <=
               1e-6 * std::max(1.0, std::abs(direct[gdx])));
#endif
    return total;
}

} // namespace

double propagate_delta(const FactorGraph& g, const PropagationTree& tree,
                       const Instance& instance, const MasterTables& tables,
                       const Assignment& assignment) {
    const int G = tables.witness_count;
    if (G == 0) return kNegInfinity;
    std::vector<RegretVector> per_function(g.num_functions, RegretVector(G, 0.0));
    for (int j = 0; j < g.num_functions; ++j) {
        const int row = assignment_row(instance.constraints[j], assignment);
        for (int gdx = 0; gdx < G; ++gdx)
            per_function[j][gdx] = tables.local_regret[j][(std::size_t)row * G + gdx];
    }
    RegretVector total = tree_sum_vectors(g, tree, per_function, G);
    double delta = -std::numeric_limits<double>::infinity();
    for (double r : total) delta = std::max(delta, r);
    return delta;
}

double propagate_delta(const FactorGraph& g, const PropagationTree& tree,
                       const Instance& instance, const WitnessSet& witnesses,
                       const Assignment& assignment) {
    if (witnesses.empty()) return kNegInfinity;
    return propagate_delta(g, tree, instance, build_master_tables(instance, witnesses),
                           assignment);
}

MasterRunState run_master_maxsum(const FactorGraph& g, const Instance& instance,
                                 const MasterTables& tables, int rounds, bool normalize) {
    const int G = tables.witness_count;
    if (G == 0) throw std::invalid_argument("master run with an empty witness set");

    MasterRunState state;
    state.q.resize(g.num_functions);
    state.r.resize(g.num_functions);
    for (int j = 0; j < g.num_functions; ++j) {
        const auto& scope = g.fun_variables[j];
        state.q[j].resize(scope.size());
        state.r[j].resize(scope.size());
        for (int t = 0; t < (int)scope.size(); ++t) {
            state.q[j][t].assign(instance.domain_size(scope[t]), RegretVector(G, 0.0));
            state.r[j][t].assign(instance.domain_size(scope[t]), RegretVector(G, 0.0));
        }
    }

    std::vector<std::vector<std::pair<int, int>>> var_edges(g.num_variables);
    for (int j = 0; j < g.num_functions; ++j)
        for (int t = 0; t < (int)g.fun_variables[j].size(); ++t)
            var_edges[g.fun_variables[j][t]].push_back({j, t});

    auto next_q = state.q;
    auto next_r = state.r;
    for (int round = 0; round < rounds; ++round) {
        for (int i = 0; i < g.num_variables; ++i) {
            for (auto [j, t] : var_edges[i]) {
                std::vector<VectorPayload> others;
                for (auto [k, u] : var_edges[i])
                    if (k != j || u != t) others.push_back(state.r[k][u]);
                if (normalize) {
                    next_q[j][t] = master_variable_message(others, instance.domain_size(i), G);
                } else {
                    VectorPayload sum(instance.domain_size(i), RegretVector(G, 0.0));
                    for (const VectorPayload& payload : others)
                        for (int v = 0; v < instance.domain_size(i); ++v)
                            sum[v] = regret_vector_add(sum[v], payload[v]);
                    next_q[j][t] = std::move(sum);
                }
            }
        }
        for (int j = 0; j < g.num_functions; ++j) {
            const Constraint& c = instance.constraints[j];
            const int arity = (int)g.fun_variables[j].size();
            for (int t = 0; t < arity; ++t) {
                std::vector<const VectorPayload*> incoming(arity, nullptr);
                for (int u = 0; u < arity; ++u)
                    if (u != t) incoming[u] = &state.q[j][u];
                next_r[j][t] = master_function_message(c.scope_sizes, tables.local_regret[j],
                                                       G, t, incoming);
            }
        }
        state.q.swap(next_q);
        state.r.swap(next_r);
    }

    state.marginals.resize(g.num_variables);
    state.selection.resize(g.num_variables);
    for (int i = 0; i < g.num_variables; ++i) {
        VectorPayload z(instance.domain_size(i), RegretVector(G, 0.0));
        for (auto [j, t] : var_edges[i])
            for (int v = 0; v < instance.domain_size(i); ++v)
                z[v] = regret_vector_add(z[v], state.r[j][t][v]);
        state.marginals[i] = std::move(z);
        state.selection[i] = master_select(state.marginals[i]);
    }
    return state;
}

// ---------------------------------------------------------------------------
// Exact master solve on acyclic graphs.
//
// The worst-witness objective does not decompose into per-edge single-vector
// messages: the completion that is best for a subtree in isolation can be
// beaten once another subtree's regrets shift which witness attains the max.
// Minimax over many witnesses is a hard combinatorial problem in general, so
// the exact tree program below passes sets of non-dominated regret vectors
// per edge and prunes them against an upper bound obtained from cheap
// candidates (flooded messages, coordinate descent, the previous outer
// iterate) plus per-witness complement bounds. Within the work budget the
// result is exact; beyond it the solve falls back to the best candidate.
// ---------------------------------------------------------------------------

namespace {

struct DpElement {
    RegretVector vec;
    int row = -1;                  // function elements: the chosen scope row
    std::vector<int> child_choice; // per tree child, index into its set
};

using DpSet = std::vector<DpElement>;

// Insert keeping only non-dominated elements; first insertion wins on ties.
template <typename Element>
void pareto_insert(std::vector<Element>& set, Element&& candidate) {
    for (const Element& have : set) {
        bool dominates = true;
        for (std::size_t g = 0; g < candidate.vec.size(); ++g)
            if (have.vec[g] > candidate.vec[g]) { dominates = false; break; }
        if (dominates) return;
    }
    std::size_t keep = 0;
    for (std::size_t idx = 0; idx < set.size(); ++idx) {
        bool dominated = true;
        for (std::size_t g = 0; g < candidate.vec.size(); ++g)
            if (candidate.vec[g] > set[idx].vec[g]) { dominated = false; break; }
        if (!dominated) {
            if (keep != idx) set[keep] = std::move(set[idx]);
            ++keep;
        }
    }
    set.resize(keep);
    set.push_back(std::move(candidate));
}

/// Worst-witness regret of a complete assignment, straight off the tables.
double candidate_value(const Instance& instance, const MasterTables& tables,
                       const Assignment& assignment) {
    const int G = tables.witness_count;
    RegretVector total(G, 0.0);
    for (int j = 0; j < instance.constraint_count(); ++j) {
        const int row = assignment_row(instance.constraints[j], assignment);
        for (int g = 0; g < G; ++g) total[g] += tables.local_regret[j][(std::size_t)row * G + g];
    }
    double worst = -std::numeric_limits<double>::infinity();
    for (double r : total) worst = std::max(worst, r);
    return worst;
}

/// Greedy single-variable descent on the worst-witness regret; returns a
/// local minimum no worse than the start.
Assignment coordinate_descent(const Instance& instance, const MasterTables& tables,
                              Assignment x) {
    const int G = tables.witness_count;
    std::vector<std::vector<int>> agent_constraints(instance.agent_count());
    for (int j = 0; j < instance.constraint_count(); ++j)
        for (int pos : instance.constraints[j].scope_pos) agent_constraints[pos].push_back(j);

    std::vector<int> rows(instance.constraint_count());
    RegretVector totals(G, 0.0);
    for (int j = 0; j < instance.constraint_count(); ++j) {
        rows[j] = assignment_row(instance.constraints[j], x);
        for (int g = 0; g < G; ++g) totals[g] += tables.local_regret[j][(std::size_t)rows[j] * G + g];
    }
    auto worst_of = [&](const RegretVector& v) {
        double worst = -std::numeric_limits<double>::infinity();
        for (double r : v) worst = std::max(worst, r);
        return worst;
    };

    RegretVector scratch(G);
    for (int sweep = 0; sweep < 50; ++sweep) {
        bool improved = false;
        for (int i = 0; i < instance.agent_count(); ++i) {
            double best = worst_of(totals);
            int best_value = x[i];
            for (int v = 0; v < instance.domain_size(i); ++v) {
                if (v == x[i]) continue;
                scratch = totals;
                for (int j : agent_constraints[i]) {
                    const Constraint& c = instance.constraints[j];
                    int pos = 0;
                    while (c.scope_pos[pos] != i) ++pos;
                    const int row = rows[j] + (v - x[i]) * c.strides[pos];
                    for (int g = 0; g < G; ++g)
                        scratch[g] += tables.local_regret[j][(std::size_t)row * G + g] -
                                      tables.local_regret[j][(std::size_t)rows[j] * G + g];
                }
                const double value = worst_of(scratch);
                if (value < best - 1e-12) {
                    best = value;
                    best_value = v;
                }
            }
            if (best_value != x[i]) {
                for (int j : agent_constraints[i]) {
                    const Constraint& c = instance.constraints[j];
                    int pos = 0;
                    while (c.scope_pos[pos] != i) ++pos;
                    const int row = rows[j] + (best_value - x[i]) * c.strides[pos];
                    for (int g = 0; g < G; ++g)
                        totals[g] += tables.local_regret[j][(std::size_t)row * G + g] -
                                     tables.local_regret[j][(std::size_t)rows[j] * G + g];
                    rows[j] = row;
                }
                x[i] = best_value;
                improved = true;
            }
        }
        if (!improved) break;
    }
    return x;
}

/// Per-witness scalar bounds on the tree: for every node and coupling value,
/// the minimal contribution of the node's subtree (`up`) and of everything
/// outside it (`down`), flattened as [value * G + g].
struct WitnessBounds {
    std::vector<std::vector<double>> up;
    std::vector<std::vector<double>> down;
};

WitnessBounds compute_witness_bounds(const FactorGraph& g, const PropagationTree& tree,
                                     const Instance& instance, const MasterTables& tables,
                                     const std::vector<std::vector<int>>& children) {
    const int G = tables.witness_count;
    WitnessBounds bounds;
    bounds.up.resize(g.node_count());
    bounds.down.resize(g.node_count());

    auto values_of = [&](int node) {
        return g.is_variable_node(node) ? instance.domain_size(node)
                                        : instance.domain_size(tree.parent[node]);
    };

    // upward pass: minimal subtree contribution per coupling value
    for (int idx = (int)tree.order.size() - 1; idx >= 0; --idx) {
        const int node = tree.order[idx];
        const int values = values_of(node);
        auto& up = bounds.up[node];
        up.assign((std::size_t)values * G, 0.0);
        if (g.is_variable_node(node)) {
            for (int child : children[node])
                for (int v = 0; v < values; ++v)
                    for (int w = 0; w < G; ++w)
                        up[(std::size_t)v * G + w] += bounds.up[child][(std::size_t)v * G + w];
        } else {
            const int j = node - g.num_variables;
            const Constraint& c = instance.constraints[j];
            const int parent_var = tree.parent[node];
            int parent_pos = 0;
            while (g.fun_variables[j][parent_pos] != parent_var) ++parent_pos;
            up.assign((std::size_t)values * G, std::numeric_limits<double>::infinity());
            std::vector<int> digits(c.arity());
            for (int row = 0; row < c.rows; ++row) {
                c.decode_row(row, digits);
                for (int w = 0; w < G; ++w) {
                    double sum = tables.local_regret[j][(std::size_t)row * G + w];
                    for (int t = 0; t < c.arity(); ++t) {
                        if (t == parent_pos) continue;
                        const int child_var = g.fun_variables[j][t];
                        sum += bounds.up[child_var][(std::size_t)digits[t] * G + w];
                    }
                    double& slot = up[(std::size_t)digits[parent_pos] * G + w];
                    slot = std::min(slot, sum);
                }
            }
        }
    }

    // component minima feed the roots' complements
    RegretVector total_min(G, 0.0);
    std::vector<RegretVector> component_min;
    for (int root : tree.roots) {
        RegretVector best(G, std::numeric_limits<double>::infinity());
        for (int v = 0; v < instance.domain_size(root); ++v)
            for (int w = 0; w < G; ++w)
                best[w] = std::min(best[w], bounds.up[root][(std::size_t)v * G + w]);
        for (int w = 0; w < G; ++w) total_min[w] += best[w];
        component_min.push_back(std::move(best));
    }

    // downward pass
    for (std::size_t comp = 0; comp < tree.roots.size(); ++comp) {
        const int root = tree.roots[comp];
        auto& down = bounds.down[root];
        down.assign((std::size_t)instance.domain_size(root) * G, 0.0);
        for (int v = 0; v < instance.domain_size(root); ++v)
            for (int w = 0; w < G; ++w)
                down[(std::size_t)v * G + w] = total_min[w] - component_min[comp][w];
    }
    for (int node : tree.order) {
        if (g.is_variable_node(node)) {
            // children are functions; their complement is ours plus the
            // siblings' subtrees, at the same coupling value
            const int values = instance.domain_size(node);
            for (int child : children[node]) {
                auto& down = bounds.down[child];
                down.assign((std::size_t)values * G, 0.0);
                for (int v = 0; v < values; ++v) {
                    for (int w = 0; w < G; ++w) {
                        double sum = bounds.down[node][(std::size_t)v * G + w];
                        for (int other : children[node])
                            if (other != child)
                                sum += bounds.up[other][(std::size_t)v * G + w];
                        down[(std::size_t)v * G + w] = sum;
                    }
                }
            }
        } else {
            const int j = node - g.num_variables;
            const Constraint& c = instance.constraints[j];
            const int parent_var = tree.parent[node];
            int parent_pos = 0;
            while (g.fun_variables[j][parent_pos] != parent_var) ++parent_pos;
            for (int t = 0; t < c.arity(); ++t) {
                if (t == parent_pos) continue;
                const int child_var = g.fun_variables[j][t];
                bounds.down[child_var].assign(
                    (std::size_t)instance.domain_size(child_var) * G,
                    std::numeric_limits<double>::infinity());
            }
            std::vector<int> digits(c.arity());
            for (int row = 0; row < c.rows; ++row) {
                c.decode_row(row, digits);
                for (int w = 0; w < G; ++w) {
                    // complement of a child's subtree through this function:
                    // the function row, the other children, and everything
                    // above the parent variable
                    double base = tables.local_regret[j][(std::size_t)row * G + w] +
                                  bounds.down[node][(std::size_t)digits[parent_pos] * G + w];
                    double all_children = 0.0;
                    for (int t = 0; t < c.arity(); ++t) {
                        if (t == parent_pos) continue;
                        all_children +=
                            bounds.up[g.fun_variables[j][t]][(std::size_t)digits[t] * G + w];
                    }
                    for (int t = 0; t < c.arity(); ++t) {
                        if (t == parent_pos) continue;
                        const int child_var = g.fun_variables[j][t];
                        const double sum =
                            base + all_children -
                            bounds.up[child_var][(std::size_t)digits[t] * G + w];
                        double& slot =
                            bounds.down[child_var][(std::size_t)digits[t] * G + w];
                        slot = std::min(slot, sum);
                    }
                }
            }
        }
    }
    return bounds;
}

struct MasterDp {
    const FactorGraph& g;
    const Instance& instance;
    const MasterTables& tables;
    const PropagationTree& tree;
    const std::vector<std::vector<int>>& children;
    const WitnessBounds& bounds;
    double prune_above; // upper bound from the candidate pool
    long long budget;
    long long work = 0;
    bool exhausted = false;
    std::vector<std::vector<DpSet>> sets;

    MasterDp(const FactorGraph& graph, const Instance& inst, const MasterTables& tbl,
             const PropagationTree& t, const std::vector<std::vector<int>>& kids,
             const WitnessBounds& b, double ub, long long work_budget)
        : g(graph), instance(inst), tables(tbl), tree(t), children(kids), bounds(b),
          prune_above(ub + 1e-9), budget(work_budget) {
        sets.resize(g.node_count());
    }

    bool spend(long long amount) {
        work += amount;
        if (work > budget) exhausted = true;
        return !exhausted;
    }

    // optimistic completion of a partial vector: every remaining contribution
    // at its per-witness minimum
    bool survives(const RegretVector& vec, const double* completion_min) const {
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t w = 0; w < vec.size(); ++w)
            worst = std::max(worst, vec[w] + completion_min[w]);
        return worst <= prune_above;
    }

    void process_variable(int var) {
        const int G = tables.witness_count;
        const int domain = instance.domain_size(var);
        sets[var].assign(domain, {});
        std::vector<double> remaining(G);
        for (int v = 0; v < domain; ++v) {
            DpSet current;
            current.push_back({RegretVector(G, 0.0), -1, {}});
            for (std::size_t k = 0; k < children[var].size(); ++k) {
                const DpSet& child_set = sets[children[var][k]][v];
                // completion bound: the complement of this variable's subtree
                // plus the children not folded in yet
                for (int w = 0; w < G; ++w) {
                    remaining[w] = bounds.down[var][(std::size_t)v * G + w];
                    for (std::size_t k2 = k + 1; k2 < children[var].size(); ++k2)
                        remaining[w] +=
                            bounds.up[children[var][k2]][(std::size_t)v * G + w];
                }
                DpSet next;
                for (std::size_t a = 0; a < current.size() && !exhausted; ++a) {
                    for (std::size_t b = 0; b < child_set.size(); ++b) {
                        DpElement elem;
                        elem.vec = current[a].vec;
                        for (int w = 0; w < G; ++w) elem.vec[w] += child_set[b].vec[w];
                        if (!spend(2 + (long long)next.size())) return;
                        if (!survives(elem.vec, remaining.data())) continue;
                        elem.child_choice = current[a].child_choice;
                        elem.child_choice.push_back((int)b);
                        pareto_insert(next, std::move(elem));
                    }
                }
                current = std::move(next);
            }
            sets[var][v] = std::move(current);
        }
    }

    void process_function(int fun_node) {
        const int j = fun_node - g.num_variables;
        const Constraint& c = instance.constraints[j];
        const int G = tables.witness_count;
        const int parent_var = tree.parent[fun_node];
        int parent_pos = 0;
        while (g.fun_variables[j][parent_pos] != parent_var) ++parent_pos;
        std::vector<int> child_pos;
        for (int t = 0; t < c.arity(); ++t)
            if (t != parent_pos) child_pos.push_back(t);

        sets[fun_node].assign(instance.domain_size(parent_var), {});
        std::vector<int> digits(c.arity(), 0);
        std::vector<double> remaining(G);
        for (int row = 0; row < c.rows; ++row) {
            c.decode_row(row, digits);
            DpSet current;
            DpElement seed;
            seed.vec.resize(G);
            for (int w = 0; w < G; ++w)
                seed.vec[w] = tables.local_regret[j][(std::size_t)row * G + w];
            seed.row = row;
            // quick row-level test with every child at its minimum
            for (int w = 0; w < G; ++w) {
                remaining[w] =
                    bounds.down[fun_node][(std::size_t)digits[parent_pos] * G + w];
                for (int t : child_pos)
                    remaining[w] +=
                        bounds.up[g.fun_variables[j][t]][(std::size_t)digits[t] * G + w];
            }
            if (!spend(1)) return;
            if (!survives(seed.vec, remaining.data())) continue;
            current.push_back(std::move(seed));
            for (std::size_t k = 0; k < child_pos.size(); ++k) {
                const int t = child_pos[k];
                const DpSet& child_set = sets[g.fun_variables[j][t]][digits[t]];
                for (int w = 0; w < G; ++w) {
                    remaining[w] =
                        bounds.down[fun_node][(std::size_t)digits[parent_pos] * G + w];
                    for (std::size_t k2 = k + 1; k2 < child_pos.size(); ++k2) {
                        const int t2 = child_pos[k2];
                        remaining[w] +=
                            bounds.up[g.fun_variables[j][t2]][(std::size_t)digits[t2] * G + w];
                    }
                }
                DpSet next;
                for (std::size_t a = 0; a < current.size() && !exhausted; ++a) {
                    for (std::size_t b = 0; b < child_set.size(); ++b) {
                        DpElement elem;
                        elem.vec = current[a].vec;
                        for (int w = 0; w < G; ++w) elem.vec[w] += child_set[b].vec[w];
                        if (!spend(2 + (long long)next.size())) return;
                        if (!survives(elem.vec, remaining.data())) continue;
                        elem.row = row;
                        elem.child_choice = current[a].child_choice;
                        elem.child_choice.push_back((int)b);
                        pareto_insert(next, std::move(elem));
                    }
                }
                current = std::move(next);
            }
            DpSet& target = sets[fun_node][digits[parent_pos]];
            for (DpElement& elem : current) {
                if (!spend(1 + (long long)target.size())) return;
                pareto_insert(target, std::move(elem));
            }
        }
    }

    void extract_variable(int var, int value, const DpElement& elem, Assignment& out) {
        out[var] = value;
        for (std::size_t k = 0; k < children[var].size(); ++k)
            extract_function(children[var][k],
                             sets[children[var][k]][value][elem.child_choice[k]], out);
    }

    void extract_function(int fun_node, const DpElement& elem, Assignment& out) {
        const int j = fun_node - g.num_variables;
        const Constraint& c = instance.constraints[j];
        const int parent_var = tree.parent[fun_node];
        std::vector<int> digits(c.arity(), 0);
        c.decode_row(elem.row, digits);
        std::size_t choice = 0;
        for (int t = 0; t < c.arity(); ++t) {
            const int child_var = g.fun_variables[j][t];
            if (child_var == parent_var) continue;
            extract_variable(child_var, digits[t],
                             sets[child_var][digits[t]][elem.child_choice[choice]], out);
            ++choice;
        }
    }
};

std::optional<MasterOutcome> solve_master_exact(const FactorGraph& g,
                                                const PropagationTree& tree,
                                                const Instance& instance,
                                                const MasterTables& tables, double upper_bound,
                                                long long work_budget) {
    const int G = tables.witness_count;
    std::vector<std::vector<int>> children = tree_children(tree);
    WitnessBounds bounds = compute_witness_bounds(g, tree, instance, tables, children);
    MasterDp dp(g, instance, tables, tree, children, bounds, upper_bound, work_budget);
    for (int idx = (int)tree.order.size() - 1; idx >= 0; --idx) {
        const int node = tree.order[idx];
        if (g.is_variable_node(node))
            dp.process_variable(node);
        else
            dp.process_function(node);
        if (dp.exhausted) return std::nullopt;
    }

    // Components couple through the max over witnesses, so combine their
    // candidate sets before the final min-max pick.
    struct ComponentElement {
        RegretVector vec;
        int root_value = 0;
        int elem = 0;
    };
    std::vector<std::vector<ComponentElement>> component_sets;
    for (std::size_t comp = 0; comp < tree.roots.size(); ++comp) {
        const int root = tree.roots[comp];
        std::vector<ComponentElement> candidates;
        for (int v = 0; v < instance.domain_size(root); ++v) {
            for (int e = 0; e < (int)dp.sets[root][v].size(); ++e) {
                if (!dp.spend(2 + (long long)candidates.size())) return std::nullopt;
                if (!dp.survives(dp.sets[root][v][e].vec,
                                 bounds.down[root].data() + (std::size_t)v * G))
                    continue;
                pareto_insert(candidates, ComponentElement{dp.sets[root][v][e].vec, v, e});
            }
        }
        if (candidates.empty()) return std::nullopt; // everything beyond the bound
        component_sets.push_back(std::move(candidates));
    }

    struct GlobalElement {
        RegretVector vec;
        std::vector<int> picks;
    };
    std::vector<GlobalElement> global;
    global.push_back({RegretVector(G, 0.0), {}});
    for (const auto& comp : component_sets) {
        std::vector<GlobalElement> next;
        for (const GlobalElement& a : global) {
            for (int b = 0; b < (int)comp.size(); ++b) {
                GlobalElement elem;
                elem.vec = a.vec;
                for (int w = 0; w < G; ++w) elem.vec[w] += comp[b].vec[w];
                elem.picks = a.picks;
                elem.picks.push_back(b);
                if (!dp.spend(2 + (long long)next.size())) return std::nullopt;
                pareto_insert(next, std::move(elem));
            }
        }
        global = std::move(next);
    }

    int best = 0;
    double best_key = std::numeric_limits<double>::infinity();
    for (int e = 0; e < (int)global.size(); ++e) {
        double key = -std::numeric_limits<double>::infinity();
        for (double r : global[e].vec) key = std::max(key, r);
        if (key < best_key) {
            best_key = key;
            best = e;
        }
    }

    MasterOutcome outcome;
    outcome.assignment.assign(g.num_variables, 0);
    for (std::size_t comp = 0; comp < component_sets.size(); ++comp) {
        const ComponentElement& ce = component_sets[comp][global[best].picks[comp]];
        const int root = tree.roots[comp];
        dp.extract_variable(root, ce.root_value, dp.sets[root][ce.root_value][ce.elem],
                            outcome.assignment);
    }
    outcome.delta = best_key;
    return outcome;
}

} // namespace

MasterOutcome solve_master(const FactorGraph& g, const PropagationTree& tree,
                           const Instance& instance, const WitnessSet& witnesses,
                           const IcgOptions& options, const Assignment* warm_start) {
    return solve_master_tables(g, tree, instance, build_master_tables(instance, witnesses),
                               options, warm_start);
}

MasterOutcome solve_master_tables(const FactorGraph& g, const PropagationTree& tree,
                                  const Instance& instance, const MasterTables& tables,
                                  const IcgOptions& options, const Assignment* warm_start) {
    MasterOutcome outcome;
    if (tables.witness_count == 0) {
        // Bootstrap: nothing constrains the master yet; any assignment is
        // optimal for the empty relaxation. Pick the lexicographically first.
        outcome.assignment.assign(g.num_variables, 0);
        outcome.delta = kNegInfinity;
        return outcome;
    }
    if (!is_acyclic(g)) {
        // Best-effort on cyclic graphs: literal vector-message flooding for a
        // bounded number of rounds.
        MasterRunState state =
            run_master_maxsum(g, instance, tables, options.cyclic_round_cap);
        outcome.assignment = state.selection;
        outcome.exact = false;
        outcome.delta = propagate_delta(g, tree, instance, tables, outcome.assignment);
        return outcome;
    }

    // The flooded single-vector selection is the baseline answer; the exact
    // program replaces it when the work budget suffices, pruning against an
    // upper bound priced by descent from the flooded and warm-start points.
    MasterRunState state =
        run_master_maxsum(g, instance, tables, message_rounds(g), /*normalize=*/false);
    outcome.assignment = state.selection;
    outcome.exact = false;

    if (options.master_work_budget > 0) {
        Assignment candidate = coordinate_descent(instance, tables, state.selection);
        double upper_bound = candidate_value(instance, tables, candidate);
        if (warm_start) {
            Assignment warmed = coordinate_descent(instance, tables, *warm_start);
            upper_bound = std::min(upper_bound, candidate_value(instance, tables, warmed));
        }
        std::optional<MasterOutcome> exact = solve_master_exact(
            g, tree, instance, tables, upper_bound, options.master_work_budget);
        if (exact) {
            outcome = std::move(*exact);
            outcome.exact = true;
        }
    }
    const double propagated = propagate_delta(g, tree, instance, tables, outcome.assignment);
    assert(!outcome.exact || std::abs(propagated - outcome.delta) <=
                                 1e-6 * std::max(1.0, std::abs(propagated)));
    outcome.delta = propagated;
    return outcome;
}

SubproblemUtility subproblem_utility(const Constraint& c, std::span<const int> candidate_values,
                                     std::span<const int> incumbent_values) {
    const int candidate_row = c.row_of(candidate_values);
    const int incumbent_row = c.row_of(incumbent_values);
    SubproblemUtility result;
    result.state = 0;
    result.value = c.value(0, candidate_row) - c.value(0, incumbent_row);
    for (int s = 1; s < c.num_states; ++s) {
        const double diff = c.value(s, candidate_row) - c.value(s, incumbent_row);
        if (diff > result.value) {
            result.value = diff;
            result.state = s;
        }
    }
    result.belief.assign(c.num_states, 0.0);
    result.belief[result.state] = 1.0;
    return result;
}

SubproblemOutcome solve_subproblem(const FactorGraph& g, const PropagationTree& tree,
                                   const Instance& instance, const Assignment& incumbent,
                                   const MaxsumOptions& options) {
    if ((int)incumbent.size() != instance.agent_count())
        throw std::invalid_argument("incumbent assignment must cover every agent");

    // Belief-maximized utilities: by linearity the inner belief optimum is a
    // simplex vertex, so the per-row utility is the best per-state difference
    // against the incumbent's row.
    ScalarTables utilities(instance.constraint_count());
    for (int j = 0; j < instance.constraint_count(); ++j) {
        const Constraint& c = instance.constraints[j];
        const int incumbent_row = assignment_row(c, incumbent);
        utilities[j].resize(c.rows);
        for (int row = 0; row < c.rows; ++row) {
            double best = c.value(0, row) - c.value(0, incumbent_row);
            for (int s = 1; s < c.num_states; ++s)
                best = std::max(best, c.value(s, row) - c.value(s, incumbent_row));
            utilities[j][row] = best;
        }
    }

    DcopResult solved = solve_dcop(g, instance, utilities, options);
    Assignment best_response = solved.assignment;
    if (solved.value < 0.0) {
        // Only reachable through inconsistent extraction on cyclic graphs: the
        // incumbent itself scores zero, so fall back to it.
        best_response = incumbent;
    }

    SubproblemOutcome outcome;
    outcome.witness.solution = best_response;
    outcome.witness.beliefs.resize(instance.constraint_count());
    std::vector<double> per_function(instance.constraint_count(), 0.0);
    for (int j = 0; j < instance.constraint_count(); ++j) {
        const Constraint& c = instance.constraints[j];
        std::vector<int> candidate = restrict_to_scope(c, best_response);
        std::vector<int> incumbent_scope = restrict_to_scope(c, incumbent);
        SubproblemUtility u = subproblem_utility(c, candidate, incumbent_scope);
        outcome.witness.beliefs[j] = std::move(u.belief);
        per_function[j] = u.value;
    }
    // Value propagation of the scalar regrets (witness-count one).
    std::vector<RegretVector> vectors(instance.constraint_count());
    for (int j = 0; j < instance.constraint_count(); ++j) vectors[j] = {per_function[j]};
    outcome.delta_prime = tree_sum_vectors(g, tree, vectors, 1)[0];
    return outcome;
}

SolveResult icg_maxsum(const Instance& instance, const IcgOptions& options) {
    FactorGraph g = build_factor_graph(instance);
    if (!is_acyclic(g) && !options.allow_cycles)
        throw CyclicGraphError("cyclic factor graph: exactness not guaranteed");
    PropagationTree tree = spanning_tree(g);

    WitnessSet witnesses;
    SolveResult result;
    MaxsumOptions sub_options{options.allow_cycles, options.cyclic_round_cap};
    IcgOptions master_options = options; // budget zeroed after the first fallback

    // Anytime tracking: every iterate's exact worst-case regret is its
    // subproblem value, so the returned solution is the best iterate seen.
    // At full convergence this coincides with the final master solution.
    Assignment last_master;
    for (int iteration = 0; iteration < options.max_iterations; ++iteration) {
        const Assignment* warm_start = iteration > 0 ? &last_master : nullptr;
        MasterOutcome master =
            solve_master(g, tree, instance, witnesses, master_options, warm_start);
        if (!master.exact) master_options.master_work_budget = 0;
        SubproblemOutcome sub = solve_subproblem(g, tree, instance, master.assignment,
                                                 sub_options);
        last_master = master.assignment;

        if (result.assignment.empty() || sub.delta_prime < result.regret) {
            result.assignment = master.assignment;
            result.regret = sub.delta_prime;
        }

        const bool improving = sub.delta_prime > master.delta + options.epsilon;
        bool added = false;
        if (improving) added = witnesses.add(std::move(sub.witness));
        result.iterations.push_back({master.delta, sub.delta_prime, added});
        result.witness_count = witnesses.size();

        if (!improving) {
            result.status = SolveStatus::Converged;
            return result;
        }
        if (!added) {
            // The most violated witness is already known yet the master cannot
            // do better: only possible in cyclic best-effort mode.
            result.status = SolveStatus::Stalled;
            return result;
        }
        if (options.deadline && std::chrono::steady_clock::now() > *options.deadline) {
            result.status = SolveStatus::Timeout;
            return result;
        }
    }
    result.status = SolveStatus::IterationCapReached;
    return result;
}

} // namespace urdcop
