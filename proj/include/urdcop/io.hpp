#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "urdcop/icg.hpp"
#include "urdcop/model.hpp"

namespace urdcop {

inline constexpr const char* kFileVersion = "urdcop-1";

/// Serializes an instance to its canonical JSON form: fixed field order,
/// doubles at 17 significant digits (lossless for binary64), tables nested
/// state-major then scope-order row-major. parse -> serialize -> parse is the
/// identity on models, and a serialized file is a fixed point byte for byte.
std::string instance_to_json(const Instance& instance);

/// Parses and validates; the returned instance is finalized. Throws ParseError
/// with the offending field, or ValidationError listing every violation.
Instance instance_from_json(const std::string& text);

Instance load_instance(const std::string& path);
void save_instance(const Instance& instance, const std::string& path);

/// Hidden-state sidecar: the true task states (plus generator metadata), kept
/// out of the instance file so solvers cannot read them.
std::string states_to_json(const std::vector<int>& true_states,
                           const std::vector<double>& task_means,
                           const std::vector<double>& task_spreads);
std::vector<int> states_from_json(const std::string& text);

/// Sidecar path for an instance path: "x.json" -> "x.states.json".
std::string states_path_for(const std::string& instance_path);

const char* solve_status_name(SolveStatus status);

/// Solution document: assignment by agent id and domain token, reported
/// regret, and the solver trace.
struct SolutionDoc {
    std::string algorithm;
    std::string status = "ok";
    std::vector<std::pair<int, std::string>> assignment; // (agent id, token)
    double regret = 0.0;
    std::vector<IcgIteration> iterations;
    int witness_count = 0;
};

SolutionDoc make_solution_doc(const Instance& instance, const std::string& algorithm,
                              const std::string& status, const Assignment& assignment,
                              double regret, const std::vector<IcgIteration>& iterations,
                              int witness_count);

std::string solution_to_json(const SolutionDoc& doc);
SolutionDoc solution_from_json(const std::string& text);

/// Resolves a solution document against an instance (tokens to value
/// indices); throws ValidationError when the assignment is incomplete or a
/// token is not in the agent's domain.
Assignment solution_assignment(const Instance& instance, const SolutionDoc& doc);

/// FNV-1a 64 over the canonical serialization, as a hex string.
std::string instance_hash(const Instance& instance);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// Shortest text that round-trips the double at up to 17 significant digits.
std::string format_double(double value);

} // namespace urdcop
