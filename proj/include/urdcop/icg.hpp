#pragma once

#include <chrono>
#include <optional>
#include <vector>

#include "urdcop/factor_graph.hpp"
#include "urdcop/maxsum.hpp"
#include "urdcop/model.hpp"

namespace urdcop {

/// A belief together with the assignment certifying a regret bound against
/// candidate solutions.
struct WitnessPoint {
    JointBelief beliefs;  // one per constraint
    Assignment solution;  // complete
};

/// Ordered, duplicate-free collection of witness points.
class WitnessSet {
public:
    int size() const { return (int)points_.size(); }
    bool empty() const { return points_.empty(); }
    const WitnessPoint& operator[](int g) const { return points_[g]; }
    const std::vector<WitnessPoint>& points() const { return points_; }

    /// Duplicate test: beliefs componentwise within tol, solutions identical.
    bool contains(const WitnessPoint& wp, double belief_tol = 1e-9) const;

    /// Appends; returns false (and leaves the set unchanged) on duplicates.
    bool add(WitnessPoint wp, double belief_tol = 1e-9);

private:
    std::vector<WitnessPoint> points_;
};

/// Per-witness regret payload exchanged by the master problem.
using RegretVector = std::vector<double>;

/// Componentwise sum; lengths must agree.
RegretVector regret_vector_add(const RegretVector& a, const RegretVector& b);

/// One RegretVector per domain value of the edge's variable.
using VectorPayload = std::vector<RegretVector>;

/// Precomputed per-function local regrets against each witness:
/// local_regret[j][row * witness_count + g] is the witness-g regret of
/// choosing `row` under function j (witness's expected value minus the row's
/// expected value under the witness belief).
struct MasterTables {
    int witness_count = 0;
    std::vector<std::vector<double>> local_regret;
};

MasterTables build_master_tables(const Instance& instance, const WitnessSet& witnesses);

/// Variable-to-function master message: componentwise vector sum, each witness
/// slice shifted to sum to zero over the domain.
VectorPayload master_variable_message(const std::vector<VectorPayload>& incoming,
                                      int domain_size, int witness_count);

/// Function-to-variable master message: for each target value, picks the scope
/// completion minimizing the worst-witness local regret plus incoming
/// components, then emits that completion's full regret vector.
VectorPayload master_function_message(const std::vector<int>& scope_sizes,
                                      const std::vector<double>& local_regret,
                                      int witness_count, int target_pos,
                                      const std::vector<const VectorPayload*>& incoming);

/// Same, building the single-constraint regret table from the witness set.
VectorPayload master_function_message(const Constraint& c, const WitnessSet& witnesses,
                                      int target_pos,
                                      const std::vector<const VectorPayload*>& incoming);

/// Assignment choice from a vector marginal: argmin over values of the max
/// regret component, lowest index on ties.
int master_select(const VectorPayload& marginal_vectors);

/// Worst-witness regret of a complete assignment, aggregated along the
/// propagation tree (every node ends up holding the same total regret
/// vector). Returns the sentinel kNegInfinity for an empty witness set.
double propagate_delta(const FactorGraph& g, const PropagationTree& tree,
                       const Instance& instance, const MasterTables& tables,
                       const Assignment& assignment);
double propagate_delta(const FactorGraph& g, const PropagationTree& tree,
                       const Instance& instance, const WitnessSet& witnesses,
                       const Assignment& assignment);

/// State of a literal vector-message flooding run (the per-edge payloads are
/// exactly witness_count long).
struct MasterRunState {
    std::vector<std::vector<VectorPayload>> q;
    std::vector<std::vector<VectorPayload>> r;
    std::vector<VectorPayload> marginals;
    Assignment selection; // per-variable master_select over the marginals
};

/// Floods the literal vector messages. With normalize=false the variable
/// messages skip the per-witness alpha shift; the marginals then carry raw
/// subtree regret sums, which keeps the worst-witness comparison undistorted
/// (the shift moves each witness slice by a different constant).
MasterRunState run_master_maxsum(const FactorGraph& g, const Instance& instance,
                                 const MasterTables& tables, int rounds,
                                 bool normalize = true);

struct MasterOutcome {
    Assignment assignment;
    double delta = kNegInfinity;
    bool exact = true; // false when the budget forced the flooded fallback
};

struct IcgOptions {
    bool allow_cycles = false;
    int max_iterations = 1000;
    int cyclic_round_cap = 100;
    double epsilon = 1e-9;
    // Work cap for the exact master program. Worst-case minimax over many
    // witnesses is exponential; within this many elementary set operations
    // the master answer is exact, beyond it the solve falls back to the
    // flooded single-vector selection (deterministic either way). Zero skips
    // the exact program entirely.
    long long master_work_budget = 4'000'000;
    std::optional<std::chrono::steady_clock::time_point> deadline;
};

/// Master relaxation: the assignment minimizing the worst regret over the
/// witness set, with its regret. An empty witness set bootstraps to the
/// lexicographically first assignment with delta = kNegInfinity. Exact on
/// acyclic graphs within the work budget; best-effort (capped flooding) on
/// cyclic ones. `warm_start` seeds the candidate pool, typically with the
/// previous outer iteration's solution.
MasterOutcome solve_master(const FactorGraph& g, const PropagationTree& tree,
                           const Instance& instance, const WitnessSet& witnesses,
                           const IcgOptions& options = {},
                           const Assignment* warm_start = nullptr);
MasterOutcome solve_master_tables(const FactorGraph& g, const PropagationTree& tree,
                                  const Instance& instance, const MasterTables& tables,
                                  const IcgOptions& options = {},
                                  const Assignment* warm_start = nullptr);

/// Best-response utility of one constraint: the belief maximizing the expected
/// gap between the candidate scope choice and the incumbent one. Linear in the
/// belief, so the optimum sits on a simplex vertex; ties break to the lowest
/// state index.
struct SubproblemUtility {
    double value = 0.0;
    Belief belief;
    int state = 0;
};

SubproblemUtility subproblem_utility(const Constraint& c, std::span<const int> candidate_values,
                                     std::span<const int> incumbent_values);

struct SubproblemOutcome {
    WitnessPoint witness;
    double delta_prime = 0.0;
};

/// Generates the most violated witness against `incumbent`: scalar Max-Sum
/// under belief-maximized utilities, then per-function belief extraction and
/// value propagation of the scalar regrets. delta_prime is never negative.
SubproblemOutcome solve_subproblem(const FactorGraph& g, const PropagationTree& tree,
                                   const Instance& instance, const Assignment& incumbent,
                                   const MaxsumOptions& options = {});

enum class SolveStatus {
    Converged,
    IterationCapReached,
    Stalled, // duplicate witness on a cyclic graph; no further progress possible
    Timeout,
};

struct IcgIteration {
    double delta = kNegInfinity;
    double delta_prime = 0.0;
    bool witness_added = false;
};

struct SolveResult {
    Assignment assignment;
    double regret = kNegInfinity;
    std::vector<IcgIteration> iterations;
    int witness_count = 0;
    SolveStatus status = SolveStatus::Converged;
};

/// The full solver loop: alternate master and subproblem, growing the witness
/// set while the subproblem finds a strictly larger regret, and return the
/// final assignment with its minimax regret and the per-iteration trace.
/// The instance must be finalized.
SolveResult icg_maxsum(const Instance& instance, const IcgOptions& options = {});

} // namespace urdcop
