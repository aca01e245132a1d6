#pragma once

#include <chrono>
#include <optional>
#include <utility>
#include <vector>

#include "urdcop/icg.hpp"
#include "urdcop/model.hpp"

namespace urdcop {

/// Ground-truth answers from exhaustive search. `regret` is the max (or
/// minimax) regret; `witness` the belief/assignment pair attaining it when one
/// was computed. Oracles restrict belief search to simplex vertices, which is
/// lossless because the regret objective is linear in each belief.
struct OracleResult {
    Assignment assignment;
    double regret = 0.0;
    std::optional<WitnessPoint> witness;
    std::vector<IcgIteration> iterations; // populated by centralized_icg
    SolveStatus status = SolveStatus::Converged;
};

struct OracleOptions {
    double guard = 1e7; // max joint assignments to enumerate
    int max_iterations = 1000;
    double epsilon = 1e-9;
    std::optional<std::chrono::steady_clock::time_point> deadline;
};

/// Number of complete assignments, saturating at infinity.
double joint_assignment_count(const Instance& instance);

/// Exhaustive argmax of the expected total value under a fixed joint belief;
/// lexicographically first on ties.
std::pair<Assignment, double> enumerate_optimal(const Instance& instance,
                                                const JointBelief& beliefs,
                                                const OracleOptions& options = {});

/// Max regret of `assignment` over the whole belief/assignment space,
/// with the attaining witness (per-constraint point-mass beliefs).
OracleResult max_regret_oracle(const Instance& instance, const Assignment& assignment,
                               const OracleOptions& options = {});

/// Full minimax: the assignment whose max regret is smallest.
OracleResult minimax_oracle(const Instance& instance, const OracleOptions& options = {});

/// The same constraint-generation loop as the decentralized solver, but with
/// master and subproblem both solved by exhaustive search. Converges to the
/// minimax_oracle answer.
OracleResult centralized_icg(const Instance& instance, const OracleOptions& options = {});

struct DsaParams {
    double activation_probability = 0.6;
    int inner_iterations = 50;
    int outer_iterations = 20;
    std::uint64_t seed = 0;
    double guard = 1e7;
    std::optional<std::chrono::steady_clock::time_point> deadline;
};

/// Decentralized local-search baseline: alternates DSA-B rounds that respond
/// to the latest witness with DSA-B rounds that generate a witness against the
/// current solution (belief maximization stays in vertex form inside the
/// utilities). Deterministic given the seed. The reported regret of the best
/// visited solution is exact: by enumeration within the guard, otherwise by
/// the subproblem value.
OracleResult dsa_minimax(const Instance& instance, const DsaParams& params = {});

} // namespace urdcop
