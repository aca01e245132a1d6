#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "test_support.hpp"
#include "urdcop/errors.hpp"
#include "urdcop/maxsum.hpp"

using namespace urdcop;
using namespace testsupport;

namespace {

ScalarTables random_tables(Rng& rng, const Instance& inst, double lo = -20, double hi = 20) {
    ScalarTables tables(inst.constraint_count());
    for (int j = 0; j < inst.constraint_count(); ++j) {
        tables[j].resize(inst.constraints[j].rows);
        for (double& v : tables[j]) v = rng.next_uniform(lo, hi);
    }
    return tables;
}

ScalarTables deterministic_tables(const Instance& inst) {
    return state_slice_tables(inst, std::vector<int>(inst.constraint_count(), 0));
}

} // namespace

TEST_CASE("variable_message: leaf variables send zeros") {
    Payload out = variable_message({}, 3);
    CHECK(out == Payload{0.0, 0.0, 0.0});
}

TEST_CASE("variable_message normalizes a single payload") {
    Payload out = variable_message({{3.0, 1.0}}, 2);
    CHECK(out[0] == doctest::Approx(1.0));
    CHECK(out[1] == doctest::Approx(-1.0));
}

TEST_CASE("variable_message sums to zero and preserves differences") {
    Rng rng(3);
    for (int trial = 0; trial < 40; ++trial) {
        const int domain = 2 + rng.next_int(4);
        std::vector<Payload> incoming(2, Payload(domain));
        for (auto& payload : incoming)
            for (double& v : payload) v = rng.next_uniform(-10, 10);
        Payload out = variable_message(incoming, domain);
        double sum = 0.0;
        for (double v : out) sum += v;
        CHECK(std::abs(sum) <= 1e-9);
        for (int v = 1; v < domain; ++v) {
            const double raw_diff = incoming[0][v] + incoming[1][v] - incoming[0][0] - incoming[1][0];
            CHECK(out[v] - out[0] == doctest::Approx(raw_diff).epsilon(1e-12));
        }
    }
}

TEST_CASE("variable_message rejects mismatched payloads") {
    CHECK_THROWS_AS(variable_message({{1.0, 2.0, 3.0}}, 2), std::invalid_argument);
}

TEST_CASE("function_message on a unary function returns the table") {
    std::vector<const Payload*> incoming{nullptr};
    Payload out = function_message({3}, {4.0, 9.0, 2.0}, 0, incoming);
    CHECK(out == Payload{4.0, 9.0, 2.0});
}

TEST_CASE("function_message with zero incoming maximizes over completions") {
    // rows: (x0,x1) row-major -> {7, 1, 3, 5}
    Payload zero{0.0, 0.0};
    std::vector<const Payload*> incoming{nullptr, &zero};
    Payload out = function_message({2, 2}, {7, 1, 3, 5}, 0, incoming);
    CHECK(out == Payload{7.0, 5.0});
}

TEST_CASE("function_message matches brute force on ternary functions") {
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<int> sizes{2, 3, 2};
        std::vector<double> table(12);
        for (double& v : table) v = rng.next_uniform(-10, 10);
        Payload q1(3), q2(2);
        for (double& v : q1) v = rng.next_uniform(-5, 5);
        for (double& v : q2) v = rng.next_uniform(-5, 5);
        std::vector<const Payload*> incoming{nullptr, &q1, &q2};
        Payload out = function_message(sizes, table, 0, incoming);
        for (int v0 = 0; v0 < 2; ++v0) {
            double best = -1e300;
            for (int v1 = 0; v1 < 3; ++v1)
                for (int v2 = 0; v2 < 2; ++v2)
                    best = std::max(best, table[(v0 * 3 + v1) * 2 + v2] + q1[v1] + q2[v2]);
            CHECK(out[v0] == doctest::Approx(best).epsilon(1e-12));
        }
    }
}

TEST_CASE("function_message requires every non-target payload") {
    std::vector<const Payload*> incoming{nullptr, nullptr};
    CHECK_THROWS_WITH_AS(function_message({2, 2}, {1, 2, 3, 4}, 0, incoming),
                         doctest::Contains("missing incoming message"), std::invalid_argument);
}

TEST_CASE("marginal sums incoming payloads") {
    CHECK(marginal({{1.0, 2.0}}, 2) == Payload{1.0, 2.0});
    CHECK(marginal({{1.0, 2.0}, {3.0, 4.0}}, 2) == Payload{4.0, 6.0});
    CHECK(marginal({{5.0, 5.0}, {2.0, 2.0}}, 2) == Payload{7.0, 7.0});
}

TEST_CASE("solve_dcop picks the argmax on a single table") {
    Instance inst = make_instance({2}, {{{1}, 1, {4.0, 9.0}}});
    FactorGraph g = build_factor_graph(inst);
    DcopResult result = solve_dcop(g, inst, {{4.0, 9.0}});
    CHECK(result.assignment == Assignment{1});
    CHECK(result.value == 9.0);
}

TEST_CASE("solve_dcop breaks ties toward the lexicographically smallest assignment") {
    Instance inst = make_instance({3, 2}, {{{1, 2}, 1, std::vector<double>(6, 2.5)}});
    FactorGraph g = build_factor_graph(inst);
    DcopResult result = solve_dcop(g, inst, {std::vector<double>(6, 2.5)});
    CHECK(result.assignment == Assignment{0, 0});
    CHECK(result.value == 2.5);
}

TEST_CASE("solve_dcop refuses cyclic graphs without the flag") {
    Instance inst = make_instance({2, 2}, {{{1, 2}, 1, std::vector<double>(4, 0.0)},
                                           {{1, 2}, 1, std::vector<double>(4, 1.0)}});
    FactorGraph g = build_factor_graph(inst);
    ScalarTables tables{{0, 0, 0, 0}, {1, 1, 1, 1}};
    CHECK_THROWS_WITH_AS(solve_dcop(g, inst, tables),
                         doctest::Contains("cyclic factor graph: exactness not guaranteed"),
                         CyclicGraphError);
    MaxsumOptions options;
    options.allow_cycles = true;
    CHECK_NOTHROW(solve_dcop(g, inst, tables, options));
}

TEST_CASE("solve_dcop matches brute force on 100 random acyclic instances") {
    Rng rng(2024);
    int solved = 0;
    for (std::uint64_t seed = 1; solved < 100; ++seed) {
        Instance inst = random_tree_instance(seed, 2 + (int)(seed % 4), 1, 3);
        if (inst.agent_count() > 5) continue;
        bool small_domains = true;
        for (int i = 0; i < inst.agent_count(); ++i)
            if (inst.domain_size(i) > 3) small_domains = false;
        if (!small_domains) continue;
        ++solved;
        FactorGraph g = build_factor_graph(inst);
        ScalarTables tables = random_tables(rng, inst);
        DcopResult result = solve_dcop(g, inst, tables);
        auto [best, best_value] = oracle_best_assignment(inst, tables);
        CHECK(result.assignment == best);
        CHECK(result.value == best_value); // identical summation order, exact
    }
}

TEST_CASE("optimal_value matches brute force including disconnected graphs") {
    Rng rng(31);
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        Instance inst = random_tree_instance(seed, 6, 1, 2);
        FactorGraph g = build_factor_graph(inst);
        ScalarTables tables = random_tables(rng, inst);
        auto [best, best_value] = oracle_best_assignment(inst, tables);
        CHECK(optimal_value(g, inst, tables) == doctest::Approx(best_value).epsilon(1e-12));
    }
}

TEST_CASE("adding a constant to a table leaves the chosen assignment unchanged") {
    Rng rng(8);
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
        Instance inst = random_tree_instance(seed, 5, 1, 2);
        FactorGraph g = build_factor_graph(inst);
        ScalarTables tables = random_tables(rng, inst);
        DcopResult before = solve_dcop(g, inst, tables);
        ScalarTables shifted = tables;
        for (double& v : shifted[0]) v += 37.5;
        DcopResult after = solve_dcop(g, inst, shifted);
        CHECK(before.assignment == after.assignment);
    }
}

TEST_CASE("messages are a fixed point after diameter rounds on trees") {
    Rng rng(12);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Instance inst = random_tree_instance(seed, 6, 1, 3);
        FactorGraph g = build_factor_graph(inst);
        ScalarTables tables = random_tables(rng, inst);
        const int rounds = message_rounds(g);
        MaxsumState at_diameter = run_scalar_maxsum(g, inst, tables, rounds);
        MaxsumState one_more = run_scalar_maxsum(g, inst, tables, rounds + 1);
        for (int j = 0; j < g.num_functions; ++j) {
            for (int t = 0; t < (int)g.fun_variables[j].size(); ++t) {
                for (std::size_t v = 0; v < at_diameter.r[j][t].size(); ++v) {
                    CHECK(at_diameter.r[j][t][v] ==
                          doctest::Approx(one_more.r[j][t][v]).epsilon(1e-12));
                    CHECK(at_diameter.q[j][t][v] ==
                          doctest::Approx(one_more.q[j][t][v]).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("all variable messages sum to zero over their domain") {
    Rng rng(77);
    Instance inst = random_tree_instance(4, 8, 1, 3);
    FactorGraph g = build_factor_graph(inst);
    ScalarTables tables = random_tables(rng, inst);
    MaxsumState state = run_scalar_maxsum(g, inst, tables, message_rounds(g));
    for (int j = 0; j < g.num_functions; ++j) {
        for (int t = 0; t < (int)g.fun_variables[j].size(); ++t) {
            double sum = 0.0;
            for (double v : state.q[j][t]) sum += v;
            CHECK(std::abs(sum) <= 1e-9);
        }
    }
}

TEST_CASE("marginal argmax agrees with the exhaustive max-marginal on trees") {
    Rng rng(91);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Instance inst = random_tree_instance(seed, 5, 1, 2);
        if (inst.agent_count() > 6) continue;
        FactorGraph g = build_factor_graph(inst);
        ScalarTables tables = random_tables(rng, inst);
        MaxsumState state = run_scalar_maxsum(g, inst, tables, message_rounds(g));
        auto [best, best_value] = oracle_best_assignment(inst, tables);
        for (int i = 0; i < inst.agent_count(); ++i) {
            int arg = 0;
            for (int v = 1; v < inst.domain_size(i); ++v)
                if (state.marginals[i][v] > state.marginals[i][arg]) arg = v;
            CHECK(arg == best[i]);
        }
    }
}

TEST_CASE("state_slice_tables picks one state's rows") {
    Instance inst = make_instance({2}, {{{1}, 2, {1, 2, 3, 4}}});
    ScalarTables slice0 = state_slice_tables(inst, {0});
    ScalarTables slice1 = state_slice_tables(inst, {1});
    CHECK(slice0[0] == std::vector<double>{1, 2});
    CHECK(slice1[0] == std::vector<double>{3, 4});
    CHECK(deterministic_tables(inst)[0] == slice0[0]);
}
