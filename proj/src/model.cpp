#include "urdcop/model.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "urdcop/errors.hpp"

namespace urdcop {

int Constraint::row_of(std::span<const int> scope_values) const {
    int row = 0;
    for (std::size_t k = 0; k < scope_values.size(); ++k)
        row += scope_values[k] * strides[k];
    return row;
}

void Constraint::decode_row(int row, std::span<int> out) const {
    for (std::size_t k = 0; k < strides.size(); ++k) {
        out[k] = row / strides[k];
        row %= strides[k];
    }
}

int Instance::agent_pos(int agent_id) const {
    auto it = agent_pos_.find(agent_id);
    return it == agent_pos_.end() ? -1 : it->second;
}

void Instance::finalize() {
    ValidationReport report = validate_instance(*this);
    if (!report.ok) {
        std::ostringstream msg;
        msg << "invalid instance:";
        for (const auto& v : report.violations) msg << "\n  " << v;
        throw ValidationError(msg.str());
    }
    agent_pos_.clear();
    for (int i = 0; i < agent_count(); ++i)
        agent_pos_[agents[static_cast<std::size_t>(i)].id] = i;
    for (auto& c : constraints) {
        const int k = c.arity();
        c.scope_pos.resize(static_cast<std::size_t>(k));
        c.scope_sizes.resize(static_cast<std::size_t>(k));
        c.strides.resize(static_cast<std::size_t>(k));
        for (int t = 0; t < k; ++t) {
            c.scope_pos[static_cast<std::size_t>(t)] = agent_pos(c.scope[static_cast<std::size_t>(t)]);
            c.scope_sizes[static_cast<std::size_t>(t)] =
                domain_size(c.scope_pos[static_cast<std::size_t>(t)]);
        }
        int stride = 1;
        for (int t = k - 1; t >= 0; --t) {
            c.strides[static_cast<std::size_t>(t)] = stride;
            stride *= c.scope_sizes[static_cast<std::size_t>(t)];
        }
        c.rows = stride;
    }
}

ValidationReport validate_instance(const Instance& instance) {
    ValidationReport report;
    auto fail = [&report](const std::string& msg) {
        report.ok = false;
        report.violations.push_back(msg);
    };

    std::unordered_map<int, int> seen_ids;
    for (std::size_t i = 0; i < instance.agents.size(); ++i) {
        const Agent& a = instance.agents[i];
        if (seen_ids.count(a.id))
            fail("duplicate agent id " + std::to_string(a.id));
        seen_ids[a.id] = static_cast<int>(i);
        if (a.domain.empty())
            fail("agent " + std::to_string(a.id) + ": empty domain");
    }

    for (const Constraint& c : instance.constraints) {
        const std::string tag = "constraint " + std::to_string(c.id);
        if (c.scope.empty()) {
            fail(tag + ": empty scope");
            continue;
        }
        if (c.num_states < 1)
            fail(tag + ": num_states must be >= 1");
        bool scope_ok = true;
        std::set<int> in_scope;
        long long row_count = 1;
        for (int agent_id : c.scope) {
            auto it = seen_ids.find(agent_id);
            if (it == seen_ids.end()) {
                fail(tag + ": unknown agent in scope (" + std::to_string(agent_id) + ")");
                scope_ok = false;
                continue;
            }
            if (!in_scope.insert(agent_id).second) {
                fail(tag + ": duplicate agent in scope (" + std::to_string(agent_id) + ")");
                scope_ok = false;
            }
            const Agent& a = instance.agents[static_cast<std::size_t>(it->second)];
            row_count *= a.domain.empty() ? 1 : static_cast<long long>(a.domain.size());
        }
        if (scope_ok && c.num_states >= 1) {
            long long expected = row_count * c.num_states;
            if (static_cast<long long>(c.table.size()) != expected)
                fail(tag + ": table size mismatch (expected " + std::to_string(expected) +
                     " entries, got " + std::to_string(c.table.size()) + ")");
        }
        for (double v : c.table) {
            if (!std::isfinite(v)) {
                fail(tag + ": non-finite table entry");
                break;
            }
        }
    }
    return report;
}

bool is_belief_valid(const Belief& belief, int num_states, double tol) {
    if (static_cast<int>(belief.size()) != num_states) return false;
    double sum = 0.0;
    for (double p : belief) {
        if (!(p >= 0.0)) return false;
        sum += p;
    }
    return std::abs(sum - 1.0) <= tol;
}

double expected_constraint_value(const Constraint& c, const Belief& belief,
                                 std::span<const int> scope_values) {
    if (static_cast<int>(belief.size()) != c.num_states)
        throw std::invalid_argument("belief/state arity mismatch for constraint " +
                                    std::to_string(c.id));
    if (static_cast<int>(scope_values.size()) != c.arity())
        throw std::invalid_argument("partial assignment does not cover the scope of constraint " +
                                    std::to_string(c.id));
    const int row = c.row_of(scope_values);
    double sum = 0.0;
    for (int s = 0; s < c.num_states; ++s)
        sum += belief[static_cast<std::size_t>(s)] * c.value(s, row);
    return sum;
}

double expected_total_value(const Instance& instance, const JointBelief& beliefs,
                            const Assignment& assignment) {
    if (static_cast<int>(beliefs.size()) != instance.constraint_count())
        throw std::invalid_argument("joint belief must have one belief per constraint");
    if (static_cast<int>(assignment.size()) != instance.agent_count())
        throw std::invalid_argument("assignment must cover every agent");
    double total = 0.0;
    for (int j = 0; j < instance.constraint_count(); ++j) {
        const Constraint& c = instance.constraints[static_cast<std::size_t>(j)];
        std::vector<int> scope_values = restrict_to_scope(c, assignment);
        total += expected_constraint_value(c, beliefs[static_cast<std::size_t>(j)], scope_values);
    }
    return total;
}

std::vector<int> restrict_to_scope(const Constraint& c, const Assignment& assignment) {
    std::vector<int> values(static_cast<std::size_t>(c.arity()));
    for (int t = 0; t < c.arity(); ++t)
        values[static_cast<std::size_t>(t)] =
            assignment[static_cast<std::size_t>(c.scope_pos[static_cast<std::size_t>(t)])];
    return values;
}

int assignment_row(const Constraint& c, const Assignment& assignment) {
    int row = 0;
    for (int t = 0; t < c.arity(); ++t)
        row += assignment[static_cast<std::size_t>(c.scope_pos[static_cast<std::size_t>(t)])] *
               c.strides[static_cast<std::size_t>(t)];
    return row;
}

} // namespace urdcop
