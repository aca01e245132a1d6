#include "urdcop/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "urdcop/errors.hpp"
#include "urdcop/rng.hpp"

namespace urdcop {

namespace {

void check_guard(const Instance& instance, double guard) {
    const double count = joint_assignment_count(instance);
    if (count > guard)
        throw GuardExceededError("enumeration guard exceeded: " + std::to_string(count) +
                                 " joint assignments > " + std::to_string(guard));
}

bool advance(Assignment& x, const Instance& instance) {
    // Odometer with the last agent fastest: visits assignments in ascending
    // lexicographic order.
    for (int i = instance.agent_count() - 1; i >= 0; --i) {
        if (++x[i] < instance.domain_size(i)) return true;
        x[i] = 0;
    }
    return false;
}

bool past_deadline(const OracleOptions& options) {
    return options.deadline && std::chrono::steady_clock::now() > *options.deadline;
}

/// Max regret of `assignment` plus the attaining witness. The belief optimum
/// is a vertex per constraint, so the per-row gain reduces to the best
/// per-state difference; the remaining max over candidate assignments is
/// enumerated.
OracleResult max_regret_against(const Instance& instance, const Assignment& assignment,
                                const OracleOptions& options) {
    const int m = instance.constraint_count();
    std::vector<std::vector<double>> max_diff(m);
    std::vector<std::vector<int>> arg_state(m);
    for (int j = 0; j < m; ++j) {
        const Constraint& c = instance.constraints[j];
        const int incumbent_row = assignment_row(c, assignment);
        max_diff[j].resize(c.rows);
        arg_state[j].resize(c.rows);
        for (int row = 0; row < c.rows; ++row) {
            double best = c.value(0, row) - c.value(0, incumbent_row);
            int best_state = 0;
            for (int s = 1; s < c.num_states; ++s) {
                const double diff = c.value(s, row) - c.value(s, incumbent_row);
                if (diff > best) {
                    best = diff;
                    best_state = s;
                }
            }
            max_diff[j][row] = best;
            arg_state[j][row] = best_state;
        }
    }

    OracleResult result;
    result.assignment = assignment;
    result.regret = -std::numeric_limits<double>::infinity();
    Assignment candidate(instance.agent_count(), 0);
    Assignment best_candidate = candidate;
    long long scanned = 0;
    do {
        double score = 0.0;
        for (int j = 0; j < m; ++j)
            score += max_diff[j][assignment_row(instance.constraints[j], candidate)];
        if (score > result.regret) {
            result.regret = score;
            best_candidate = candidate;
        }
        if ((++scanned & 0xfff) == 0 && past_deadline(options)) {
            result.status = SolveStatus::Timeout;
            break;
        }
    } while (advance(candidate, instance));

    WitnessPoint witness;
    witness.solution = best_candidate;
    witness.beliefs.resize(m);
    for (int j = 0; j < m; ++j) {
        const Constraint& c = instance.constraints[j];
        Belief belief(c.num_states, 0.0);
        belief[arg_state[j][assignment_row(c, best_candidate)]] = 1.0;
        witness.beliefs[j] = std::move(belief);
    }
    result.witness = std::move(witness);
    return result;
}

} // namespace

double joint_assignment_count(const Instance& instance) {
    double count = 1.0;
    for (int i = 0; i < instance.agent_count(); ++i) count *= instance.domain_size(i);
    return count;
}

std::pair<Assignment, double> enumerate_optimal(const Instance& instance,
                                                const JointBelief& beliefs,
                                                const OracleOptions& options) {
    check_guard(instance, options.guard);
    const int m = instance.constraint_count();
    if ((int)beliefs.size() != m)
        throw std::invalid_argument("joint belief must have one belief per constraint");

    // Expected value per row under each constraint's belief.
    std::vector<std::vector<double>> expected(m);
    for (int j = 0; j < m; ++j) {
        const Constraint& c = instance.constraints[j];
        expected[j].resize(c.rows);
        for (int row = 0; row < c.rows; ++row) {
            double v = 0.0;
            for (int s = 0; s < c.num_states; ++s) v += beliefs[j][s] * c.value(s, row);
            expected[j][row] = v;
        }
    }

    Assignment candidate(instance.agent_count(), 0);
    Assignment best = candidate;
    double best_value = -std::numeric_limits<double>::infinity();
    do {
        double value = 0.0;
        for (int j = 0; j < m; ++j)
            value += expected[j][assignment_row(instance.constraints[j], candidate)];
        if (value > best_value) {
            best_value = value;
            best = candidate;
        }
    } while (advance(candidate, instance));
    return {best, best_value};
}

OracleResult max_regret_oracle(const Instance& instance, const Assignment& assignment,
                               const OracleOptions& options) {
    check_guard(instance, options.guard);
    if ((int)assignment.size() != instance.agent_count())
        throw std::invalid_argument("assignment must cover every agent");
    return max_regret_against(instance, assignment, options);
}

OracleResult minimax_oracle(const Instance& instance, const OracleOptions& options) {
    check_guard(instance, options.guard);
    OracleResult best;
    best.regret = std::numeric_limits<double>::infinity();
    Assignment candidate(instance.agent_count(), 0);
    do {
        OracleResult inner = max_regret_against(instance, candidate, options);
        if (inner.regret < best.regret) {
            best = inner;
            best.assignment = candidate;
        }
        if (past_deadline(options)) {
            best.status = SolveStatus::Timeout;
            return best;
        }
    } while (advance(candidate, instance));
    return best;
}

OracleResult centralized_icg(const Instance& instance, const OracleOptions& options) {
    check_guard(instance, options.guard);
    const int m = instance.constraint_count();

    WitnessSet witnesses;
    OracleResult result;
    result.assignment.assign(instance.agent_count(), 0);
    double delta = kNegInfinity;

    for (int iteration = 0; iteration < options.max_iterations; ++iteration) {
        if (!witnesses.empty()) {
            // Exhaustive master: per witness, its total expected value and the
            // per-row expected values of every constraint under its belief.
            const int G = witnesses.size();
            std::vector<double> witness_value(G, 0.0);
            std::vector<std::vector<std::vector<double>>> expected(G);
            for (int g = 0; g < G; ++g) {
                const WitnessPoint& wp = witnesses[g];
                expected[g].resize(m);
                for (int j = 0; j < m; ++j) {
                    const Constraint& c = instance.constraints[j];
                    expected[g][j].resize(c.rows);
                    for (int row = 0; row < c.rows; ++row) {
                        double v = 0.0;
                        for (int s = 0; s < c.num_states; ++s)
                            v += wp.beliefs[j][s] * c.value(s, row);
                        expected[g][j][row] = v;
                    }
                    witness_value[g] += expected[g][j][assignment_row(c, wp.solution)];
                }
            }
            Assignment candidate(instance.agent_count(), 0);
            Assignment best = candidate;
            double best_regret = std::numeric_limits<double>::infinity();
            do {
                double worst = -std::numeric_limits<double>::infinity();
                for (int g = 0; g < G; ++g) {
                    double value = 0.0;
                    for (int j = 0; j < m; ++j)
                        value += expected[g][j][assignment_row(instance.constraints[j], candidate)];
                    worst = std::max(worst, witness_value[g] - value);
                }
                if (worst < best_regret) {
                    best_regret = worst;
                    best = candidate;
                }
            } while (advance(candidate, instance));
            result.assignment = best;
            delta = best_regret;
        }

        OracleResult sub = max_regret_against(instance, result.assignment, options);
        const bool improving = sub.regret > delta + options.epsilon;
        bool added = false;
        if (improving) added = witnesses.add(*sub.witness);
        result.iterations.push_back({delta, sub.regret, added});
        result.regret = delta;
        result.witness = sub.witness;

        if (!improving) {
            result.status = SolveStatus::Converged;
            return result;
        }
        if (!added) {
            result.status = SolveStatus::Stalled;
            return result;
        }
        if (past_deadline(options)) {
            result.status = SolveStatus::Timeout;
            return result;
        }
    }
    result.status = SolveStatus::IterationCapReached;
    return result;
}

namespace {

/// One synchronous DSA-B round: every agent proposes its best local value
/// from the previous round's state and applies it with the activation
/// probability when it strictly improves. One uniform draw per agent per
/// round keeps the stream layout fixed.
void dsa_round(const Instance& instance,
               const std::vector<std::vector<std::pair<int, int>>>& var_edges,
               const ScalarTables& tables, double activation, Rng& rng, Assignment& x) {
    Assignment next = x;
    for (int i = 0; i < instance.agent_count(); ++i) {
        std::vector<int> rows(var_edges[i].size());
        for (std::size_t e = 0; e < var_edges[i].size(); ++e)
            rows[e] = assignment_row(instance.constraints[var_edges[i][e].first], x);
        auto local_value = [&](int value) {
            double total = 0.0;
            for (std::size_t e = 0; e < var_edges[i].size(); ++e) {
                auto [j, pos] = var_edges[i][e];
                const Constraint& c = instance.constraints[j];
                const int row = rows[e] + (value - x[i]) * c.strides[pos];
                total += tables[j][row];
            }
            return total;
        };
        const double current = local_value(x[i]);
        int best_value = x[i];
        double best = current;
        for (int v = 0; v < instance.domain_size(i); ++v) {
            const double value = local_value(v);
            if (value > best + 1e-12) {
                best = value;
                best_value = v;
            }
        }
        const double u = rng.next_unit();
        if (best_value != x[i] && u < activation) next[i] = best_value;
    }
    x = std::move(next);
}

} // namespace

OracleResult dsa_minimax(const Instance& instance, const DsaParams& params) {
    FactorGraph g = build_factor_graph(instance);
    PropagationTree tree = spanning_tree(g);
    Rng rng(mix_seed(params.seed, 0xd5a));

    std::vector<std::vector<std::pair<int, int>>> var_edges(instance.agent_count());
    for (int j = 0; j < instance.constraint_count(); ++j) {
        const Constraint& c = instance.constraints[j];
        for (int t = 0; t < c.arity(); ++t) var_edges[c.scope_pos[t]].push_back({j, t});
    }

    Assignment x(instance.agent_count());
    for (int i = 0; i < instance.agent_count(); ++i) x[i] = rng.next_int(instance.domain_size(i));

    // Witness generation against `incumbent` by DSA-B on the belief-maximized
    // utilities; returns the witness and its estimated regret.
    auto max_step = [&](const Assignment& incumbent) {
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
        Assignment candidate = incumbent; // scores zero, so moves only improve locally
        for (int round = 0; round < params.inner_iterations; ++round)
            dsa_round(instance, var_edges, utilities, params.activation_probability, rng,
                      candidate);
        double estimate = 0.0;
        for (int j = 0; j < instance.constraint_count(); ++j)
            estimate += utilities[j][assignment_row(instance.constraints[j], candidate)];
        if (estimate < 0.0) { // parallel moves can overshoot; the incumbent scores zero
            candidate = incumbent;
            estimate = 0.0;
        }
        WitnessPoint witness;
        witness.solution = candidate;
        witness.beliefs.resize(instance.constraint_count());
        for (int j = 0; j < instance.constraint_count(); ++j) {
            const Constraint& c = instance.constraints[j];
            std::vector<int> cand_scope = restrict_to_scope(c, candidate);
            std::vector<int> inc_scope = restrict_to_scope(c, incumbent);
            witness.beliefs[j] = subproblem_utility(c, cand_scope, inc_scope).belief;
        }
        return std::make_pair(witness, estimate);
    };

    // Alternation: generate a witness against the current solution, then
    // respond to the worst witness seen so far (its value is a constant in
    // the regret, so responding means maximizing own expected value under
    // its beliefs). The myopic steps are where the baseline loses ground.
    WitnessPoint worst_witness;
    double worst_estimate = -std::numeric_limits<double>::infinity();
    int outer_done = 0;
    for (int outer = 0; outer < params.outer_iterations; ++outer) {
        auto [witness, estimate] = max_step(x);
        if (estimate > worst_estimate) {
            worst_estimate = estimate;
            worst_witness = std::move(witness);
        }
        ScalarTables response(instance.constraint_count());
        for (int j = 0; j < instance.constraint_count(); ++j) {
            const Constraint& c = instance.constraints[j];
            response[j].resize(c.rows);
            for (int row = 0; row < c.rows; ++row) {
                double v = 0.0;
                for (int s = 0; s < c.num_states; ++s)
                    v += worst_witness.beliefs[j][s] * c.value(s, row);
                response[j][row] = v;
            }
        }
        for (int round = 0; round < params.inner_iterations; ++round)
            dsa_round(instance, var_edges, response, params.activation_probability, rng, x);
        ++outer_done;
        if (params.deadline && std::chrono::steady_clock::now() > *params.deadline) break;
    }

    OracleResult result;
    result.assignment = x;
    result.iterations.resize(outer_done); // round count only; no master trace
    result.status = (outer_done == params.outer_iterations) ? SolveStatus::Converged
                                                            : SolveStatus::Timeout;
    if (joint_assignment_count(instance) <= params.guard) {
        OracleOptions oracle_options;
        oracle_options.guard = params.guard;
        OracleResult exact = max_regret_oracle(instance, x, oracle_options);
        result.regret = exact.regret;
        result.witness = exact.witness;
    } else {
        SubproblemOutcome sub =
            solve_subproblem(g, tree, instance, x, MaxsumOptions{true, 100});
        result.regret = sub.delta_prime;
        result.witness = std::move(sub.witness);
    }
    return result;
}

} // namespace urdcop
