#pragma once

#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace urdcop {

/// Sentinel for "no witness constrains the master yet".
inline constexpr double kNegInfinity = -std::numeric_limits<double>::infinity();

/// Absolute tolerance for probability-simplex membership checks.
inline constexpr double kSimplexTol = 1e-9;

/// An agent controls one decision variable whose domain is a finite list of
/// opaque value tokens (task ids in the allocation domain). Values are
/// referenced by index everywhere; tokens matter only for I/O.
struct Agent {
    int id = 0;
    std::vector<std::string> domain;
};

/// A soft constraint with one hidden state variable. The utility table is
/// dense: state-major, then row-major over the scope domains in scope order
/// (last scope position varies fastest).
struct Constraint {
    int id = 0;
    std::vector<int> scope;   // agent ids, ordered
    int num_states = 1;
    std::vector<double> table;

    // Caches filled by Instance::finalize().
    std::vector<int> scope_pos;    // agent positions within the instance
    std::vector<int> scope_sizes;  // domain sizes along the scope
    std::vector<int> strides;      // row-major strides, last fastest
    int rows = 0;

    double value(int state, int row) const {
        return table[static_cast<std::size_t>(state) * rows + row];
    }
    int arity() const { return static_cast<int>(scope.size()); }

    /// Row index of a joint value choice for the scope (one index per scope
    /// position).
    int row_of(std::span<const int> scope_values) const;
    /// Inverse of row_of; writes one value index per scope position.
    void decode_row(int row, std::span<int> out) const;
};

struct Instance {
    std::vector<Agent> agents;
    std::vector<Constraint> constraints;

    int agent_count() const { return static_cast<int>(agents.size()); }
    int constraint_count() const { return static_cast<int>(constraints.size()); }
    int domain_size(int agent_pos) const {
        return static_cast<int>(agents[static_cast<std::size_t>(agent_pos)].domain.size());
    }
    /// Position of an agent id, or -1 if unknown.
    int agent_pos(int agent_id) const;

    /// Builds lookup caches and checks all invariants; throws ValidationError
    /// if the instance is malformed. Instances are immutable afterwards.
    void finalize();

private:
    std::unordered_map<int, int> agent_pos_;
};

/// One chosen domain-value index per agent, in agent order.
using Assignment = std::vector<int>;

/// Probability distribution over one constraint's states.
using Belief = std::vector<double>;

/// One Belief per constraint, in constraint order.
using JointBelief = std::vector<Belief>;

struct ValidationReport {
    bool ok = true;
    std::vector<std::string> violations;
};

/// Checks every Instance/Constraint invariant and reports each violation with
/// the offending agent/constraint id. Works on raw (not finalized) instances.
ValidationReport validate_instance(const Instance& instance);

bool is_belief_valid(const Belief& belief, int num_states, double tol = kSimplexTol);

/// Belief-weighted utility of one constraint at a joint scope choice:
/// sum over states of belief(s) * table(s, scope_values).
double expected_constraint_value(const Constraint& c, const Belief& belief,
                                 std::span<const int> scope_values);

/// Sum of expected_constraint_value over all constraints at a complete
/// assignment.
double expected_total_value(const Instance& instance, const JointBelief& beliefs,
                            const Assignment& assignment);

/// Scope restriction of a complete assignment (one value index per scope
/// position).
std::vector<int> restrict_to_scope(const Constraint& c, const Assignment& assignment);

/// Row index of a complete assignment under one constraint.
int assignment_row(const Constraint& c, const Assignment& assignment);

} // namespace urdcop
