// Exercises the shared library's C surface: handles, status codes, and the
// thread-local error message.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <string>

#include "json.hpp"
#include "urdcop.h"

namespace {

const char* kToggleInstance = R"({
  "version": "urdcop-1",
  "agents": [{"id": 1, "domain": ["A", "B"]}],
  "constraints": [{"id": 1, "scope": [1], "num_states": 2, "table": [[10, 0], [0, 10]]}]
})";

const char* kCyclicInstance = R"({
  "version": "urdcop-1",
  "agents": [{"id": 1, "domain": ["A", "B"]}, {"id": 2, "domain": ["C", "D"]}],
  "constraints": [
    {"id": 1, "scope": [1, 2], "num_states": 1, "table": [[1, 2, 3, 4]]},
    {"id": 2, "scope": [1, 2], "num_states": 1, "table": [[4, 3, 2, 1]]}
  ]
})";

struct Scoped {
    urdcop_instance* instance = nullptr;
    urdcop_result* result = nullptr;
    char* text = nullptr;
    ~Scoped() {
        urdcop_instance_free(instance);
        urdcop_result_free(result);
        urdcop_string_free(text);
    }
};

} // namespace

TEST_CASE("version and error state are always readable") {
    CHECK(urdcop_version() != nullptr);
    CHECK(urdcop_last_error() != nullptr);
}

TEST_CASE("parse, inspect, serialize") {
    Scoped s;
    REQUIRE(urdcop_instance_parse(kToggleInstance, &s.instance) == URDCOP_OK);
    CHECK(urdcop_instance_num_agents(s.instance) == 1);
    CHECK(urdcop_instance_num_constraints(s.instance) == 1);
    int32_t acyclic = 0;
    CHECK(urdcop_instance_is_acyclic(s.instance, &acyclic) == URDCOP_OK);
    CHECK(acyclic == 1);
    REQUIRE(urdcop_instance_to_json(s.instance, &s.text) == URDCOP_OK);
    urdcop_instance* again = nullptr;
    REQUIRE(urdcop_instance_parse(s.text, &again) == URDCOP_OK);
    char* text2 = nullptr;
    REQUIRE(urdcop_instance_to_json(again, &text2) == URDCOP_OK);
    CHECK(std::string(s.text) == text2);
    urdcop_string_free(text2);
    urdcop_instance_free(again);
}

TEST_CASE("parse failures set a status and a message") {
    urdcop_instance* instance = nullptr;
    CHECK(urdcop_instance_parse("{ not json", &instance) == URDCOP_ERR_PARSE);
    CHECK(std::strlen(urdcop_last_error()) > 0);
    CHECK(urdcop_instance_parse(R"({"agents": []})", &instance) == URDCOP_ERR_PARSE);
    const char* invalid = R"({
      "agents": [{"id": 1, "domain": ["A"]}],
      "constraints": [{"id": 1, "scope": [5], "num_states": 1, "table": [[1]]}]
    })";
    CHECK(urdcop_instance_parse(invalid, &instance) == URDCOP_ERR_VALIDATION);
    CHECK(urdcop_instance_load("/no/such/file.json", &instance) == URDCOP_ERR_IO);
    CHECK(urdcop_instance_parse(nullptr, &instance) == URDCOP_ERR_INVALID_ARGUMENT);
}

TEST_CASE("solve via the decentralized solver and check the solution document") {
    Scoped s;
    REQUIRE(urdcop_instance_parse(kToggleInstance, &s.instance) == URDCOP_OK);
    urdcop_solve_params params{};
    params.algorithm = URDCOP_ALGO_ICG_MAXSUM;
    REQUIRE(urdcop_solve(s.instance, &params, &s.result) == URDCOP_OK);
    CHECK(urdcop_result_regret(s.result) == doctest::Approx(10.0));
    CHECK(urdcop_result_iterations(s.result) >= 1);
    CHECK(urdcop_result_witness_count(s.result) >= 1);
    REQUIRE(urdcop_result_to_json(s.result, &s.text) == URDCOP_OK);
    auto doc = nlohmann::json::parse(s.text);
    CHECK(doc["algorithm"] == "icg-maxsum");
    CHECK(doc["status"] == "converged");
    CHECK(doc["assignment"]["1"] == "A");
    CHECK(doc["minimax_regret"].get<double>() == doctest::Approx(10.0));
}

TEST_CASE("all four algorithms agree on the toggle instance") {
    Scoped s;
    REQUIRE(urdcop_instance_parse(kToggleInstance, &s.instance) == URDCOP_OK);
    for (int algo : {URDCOP_ALGO_ICG_MAXSUM, URDCOP_ALGO_ICG_EXACT, URDCOP_ALGO_DSA,
                     URDCOP_ALGO_ORACLE}) {
        urdcop_solve_params params{};
        params.algorithm = algo;
        params.seed = 7;
        urdcop_result* result = nullptr;
        REQUIRE(urdcop_solve(s.instance, &params, &result) == URDCOP_OK);
        CHECK(urdcop_result_regret(result) == doctest::Approx(10.0));
        urdcop_result_free(result);
    }
}

TEST_CASE("cyclic graphs are refused unless allowed") {
    Scoped s;
    REQUIRE(urdcop_instance_parse(kCyclicInstance, &s.instance) == URDCOP_OK);
    int32_t acyclic = 1;
    CHECK(urdcop_instance_is_acyclic(s.instance, &acyclic) == URDCOP_OK);
    CHECK(acyclic == 0);
    urdcop_solve_params params{};
    params.algorithm = URDCOP_ALGO_ICG_MAXSUM;
    urdcop_result* result = nullptr;
    CHECK(urdcop_solve(s.instance, &params, &result) == URDCOP_ERR_CYCLIC_GRAPH);
    CHECK(result == nullptr);
    params.allow_cycles = 1;
    REQUIRE(urdcop_solve(s.instance, &params, &s.result) == URDCOP_OK);
}

TEST_CASE("the iteration cap still returns the best-so-far result") {
    Scoped s;
    REQUIRE(urdcop_instance_parse(kToggleInstance, &s.instance) == URDCOP_OK);
    urdcop_solve_params params{};
    params.algorithm = URDCOP_ALGO_ICG_MAXSUM;
    params.max_iterations = 1;
    CHECK(urdcop_solve(s.instance, &params, &s.result) == URDCOP_ERR_ITERATION_CAP);
    REQUIRE(s.result != nullptr);
    REQUIRE(urdcop_result_to_json(s.result, &s.text) == URDCOP_OK);
    auto doc = nlohmann::json::parse(s.text);
    CHECK(doc["status"] == "iteration-cap");
    CHECK(doc["assignment"].size() == 1);
}

TEST_CASE("generate returns an instance and a states sidecar") {
    urdcop_gen_params params{};
    params.num_tasks = 6;
    params.num_states = 2;
    params.seed = 3;
    Scoped s;
    char* states = nullptr;
    REQUIRE(urdcop_generate(&params, &s.instance, &states) == URDCOP_OK);
    CHECK(urdcop_instance_num_agents(s.instance) == 3);
    CHECK(urdcop_instance_num_constraints(s.instance) == 6);
    auto doc = nlohmann::json::parse(states);
    CHECK(doc["true_states"].size() == 6);
    urdcop_string_free(states);

    char* hash1 = nullptr;
    REQUIRE(urdcop_instance_hash(s.instance, &hash1) == URDCOP_OK);
    urdcop_instance* again = nullptr;
    REQUIRE(urdcop_generate(&params, &again, nullptr) == URDCOP_OK);
    char* hash2 = nullptr;
    REQUIRE(urdcop_instance_hash(again, &hash2) == URDCOP_OK);
    CHECK(std::string(hash1) == hash2);
    urdcop_string_free(hash1);
    urdcop_string_free(hash2);
    urdcop_instance_free(again);
}

TEST_CASE("solution regret and evaluation run from solution JSON") {
    Scoped s;
    REQUIRE(urdcop_instance_parse(kToggleInstance, &s.instance) == URDCOP_OK);
    urdcop_solve_params params{};
    params.algorithm = URDCOP_ALGO_ORACLE;
    REQUIRE(urdcop_solve(s.instance, &params, &s.result) == URDCOP_OK);
    REQUIRE(urdcop_result_to_json(s.result, &s.text) == URDCOP_OK);

    double regret = -1;
    CHECK(urdcop_solution_regret(s.instance, s.text, &regret) == URDCOP_OK);
    CHECK(regret == doctest::Approx(10.0));

    char* report = nullptr;
    REQUIRE(urdcop_evaluate(s.instance, s.text, 12, 5, &report) == URDCOP_OK);
    auto doc = nlohmann::json::parse(report);
    CHECK(doc["runs"] == 12);
    CHECK(doc["regrets"].size() == 12);
    urdcop_string_free(report);

    CHECK(urdcop_solution_regret(s.instance, "{}", &regret) == URDCOP_ERR_PARSE);
}

TEST_CASE("bench runs from a config document") {
    const char* config = R"({
      "algorithms": ["icg-maxsum", "oracle"],
      "sizes": [{"tasks": 4, "states": 2}],
      "seeds": [1],
      "eval_runs": 4
    })";
    char* jsonl = nullptr;
    char* table = nullptr;
    REQUIRE(urdcop_bench_run(config, &jsonl, &table) == URDCOP_OK);
    std::string lines(jsonl);
    CHECK(std::count(lines.begin(), lines.end(), '\n') == 2);
    // both algorithms saw the same instance
    auto first = nlohmann::json::parse(lines.substr(0, lines.find('\n')));
    auto second = nlohmann::json::parse(lines.substr(lines.find('\n') + 1));
    CHECK(first["instance_hash"] == second["instance_hash"]);
    CHECK(std::string(table).find("oracle") != std::string::npos);
    urdcop_string_free(jsonl);
    urdcop_string_free(table);

    CHECK(urdcop_bench_run("{}", &jsonl, &table) == URDCOP_ERR_PARSE);
}
