#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "test_support.hpp"
#include "urdcop/errors.hpp"
#include "urdcop/io.hpp"

using namespace urdcop;
using namespace testsupport;

TEST_CASE("instance serialization round-trips byte for byte") {
    GenParams params;
    params.num_tasks = 8;
    params.num_states = 3;
    params.seed = 77;
    Instance inst = generate_instance(params).instance;
    const std::string once = instance_to_json(inst);
    Instance parsed = instance_from_json(once);
    const std::string twice = instance_to_json(parsed);
    CHECK(once == twice);
    CHECK(parsed.agent_count() == inst.agent_count());
    CHECK(parsed.constraint_count() == inst.constraint_count());
    for (int j = 0; j < inst.constraint_count(); ++j)
        CHECK(parsed.constraints[j].table == inst.constraints[j].table);
}

TEST_CASE("awkward doubles survive the 17-digit format") {
    for (double value : {0.1, 1.0 / 3.0, 3.141592653589793, -2.2250738585072014e-308,
                         1.7976931348623157e308, 123456789.123456789, -0.0}) {
        const std::string text = format_double(value);
        CHECK(std::stod(text) == value);
    }
}

TEST_CASE("missing fields are parse errors that name the field") {
    CHECK_THROWS_WITH_AS(instance_from_json(R"({"version": "urdcop-1", "agents": []})"),
                         doctest::Contains("\"constraints\""), ParseError);
    CHECK_THROWS_WITH_AS(instance_from_json(R"({"constraints": []})"),
                         doctest::Contains("\"agents\""), ParseError);
    CHECK_THROWS_AS(instance_from_json("{"), ParseError);
    CHECK_THROWS_AS(instance_from_json(
                        R"({"agents": [{"id": 1}], "constraints": []})"),
                    ParseError); // agent missing domain
}

TEST_CASE("table shape problems are validation errors") {
    const char* uneven = R"({
      "version": "urdcop-1",
      "agents": [{"id": 1, "domain": ["a", "b"]}],
      "constraints": [{"id": 1, "scope": [1], "num_states": 2, "table": [[1, 2], [3]]}]
    })";
    CHECK_THROWS_WITH_AS(instance_from_json(uneven), doctest::Contains("table size mismatch"),
                         ValidationError);
    const char* wrong_states = R"({
      "version": "urdcop-1",
      "agents": [{"id": 1, "domain": ["a", "b"]}],
      "constraints": [{"id": 1, "scope": [1], "num_states": 2, "table": [[1, 2]]}]
    })";
    CHECK_THROWS_WITH_AS(instance_from_json(wrong_states),
                         doctest::Contains("table size mismatch"), ValidationError);
}

TEST_CASE("unknown scope agents fail validation with the offending id") {
    const char* bad = R"({
      "agents": [{"id": 1, "domain": ["a"]}],
      "constraints": [{"id": 4, "scope": [2], "num_states": 1, "table": [[0]]}]
    })";
    CHECK_THROWS_WITH_AS(instance_from_json(bad), doctest::Contains("unknown agent in scope"),
                         ValidationError);
}

TEST_CASE("solution documents round-trip") {
    Instance inst = make_instance({2, 2}, {{{1, 2}, 2, std::vector<double>(8, 1.0)}});
    std::vector<IcgIteration> iterations{{kNegInfinity, 4.5, true}, {4.5, 4.5, false}};
    SolutionDoc doc = make_solution_doc(inst, "icg-maxsum", "converged", {0, 1}, 4.5,
                                        iterations, 1);
    const std::string text = solution_to_json(doc);
    SolutionDoc parsed = solution_from_json(text);
    CHECK(parsed.algorithm == "icg-maxsum");
    CHECK(parsed.status == "converged");
    CHECK(parsed.regret == 4.5);
    CHECK(parsed.witness_count == 1);
    REQUIRE(parsed.iterations.size() == 2);
    CHECK(parsed.iterations[0].delta == kNegInfinity); // null <-> sentinel
    CHECK(parsed.iterations[0].delta_prime == 4.5);
    CHECK(parsed.iterations[0].witness_added);
    CHECK_FALSE(parsed.iterations[1].witness_added);
    Assignment assignment = solution_assignment(inst, parsed);
    CHECK(assignment == Assignment{0, 1});
}

TEST_CASE("solution_assignment validates coverage and membership") {
    Instance inst = make_instance({2, 2}, {{{1, 2}, 1, std::vector<double>(4, 0.0)}});
    SolutionDoc unknown_agent;
    unknown_agent.assignment = {{1, "v0"}, {9, "v0"}};
    CHECK_THROWS_WITH_AS(solution_assignment(inst, unknown_agent),
                         doctest::Contains("unknown agent"), ValidationError);
    SolutionDoc foreign_token;
    foreign_token.assignment = {{1, "nope"}, {2, "v0"}};
    CHECK_THROWS_WITH_AS(solution_assignment(inst, foreign_token),
                         doctest::Contains("outside its domain"), ValidationError);
    SolutionDoc incomplete;
    incomplete.assignment = {{1, "v0"}};
    CHECK_THROWS_WITH_AS(solution_assignment(inst, incomplete), doctest::Contains("missing"),
                         ValidationError);
}

TEST_CASE("states sidecar round-trips next to the instance path") {
    CHECK(states_path_for("inst.json") == "inst.states.json");
    CHECK(states_path_for("dir/problem.json") == "dir/problem.states.json");
    CHECK(states_path_for("noext") == "noext.states.json");
    const std::string text = states_to_json({0, 2, 1}, {81.5, 90.0, 99.5}, {10, 20, 30});
    CHECK(states_from_json(text) == std::vector<int>{0, 2, 1});
}

TEST_CASE("instance hashes separate different instances") {
    GenParams params;
    params.num_tasks = 6;
    params.seed = 1;
    Instance a = generate_instance(params).instance;
    params.seed = 2;
    Instance b = generate_instance(params).instance;
    CHECK(instance_hash(a) == instance_hash(a));
    CHECK(instance_hash(a) != instance_hash(b));
    CHECK(instance_hash(a).size() == 16);
}

TEST_CASE("file helpers report failures") {
    CHECK_THROWS_AS(read_text_file("/nonexistent/path/file.json"), IoError);
    CHECK_THROWS_AS(load_instance("/nonexistent/path/file.json"), IoError);
}
