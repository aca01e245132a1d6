#include "urdcop/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "urdcop/errors.hpp"

namespace urdcop {

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

namespace {

void append_escaped(std::string& out, const std::string& s) {
    out += '"';
    for (char ch : s) {
        switch (ch) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if ((unsigned char)ch < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", ch);
                    out += buf;
                } else {
                    out += ch;
                }
        }
    }
    out += '"';
}

const nlohmann::json& require_field(const nlohmann::json& doc, const char* field,
                                    const char* context) {
    if (!doc.contains(field))
        throw ParseError(std::string(context) + ": missing \"" + field + "\" field");
    return doc.at(field);
}

} // namespace

std::string instance_to_json(const Instance& instance) {
    std::string out;
    out += "{\n  \"version\": \"";
    out += kFileVersion;
    out += "\",\n  \"agents\": [\n";
    for (int i = 0; i < instance.agent_count(); ++i) {
        const Agent& a = instance.agents[i];
        out += "    {\"id\": " + std::to_string(a.id) + ", \"domain\": [";
        for (std::size_t d = 0; d < a.domain.size(); ++d) {
            if (d) out += ", ";
            append_escaped(out, a.domain[d]);
        }
        out += "]}";
        out += (i + 1 < instance.agent_count()) ? ",\n" : "\n";
    }
    out += "  ],\n  \"constraints\": [\n";
    for (int j = 0; j < instance.constraint_count(); ++j) {
        const Constraint& c = instance.constraints[j];
        out += "    {\"id\": " + std::to_string(c.id) + ", \"scope\": [";
        for (std::size_t t = 0; t < c.scope.size(); ++t) {
            if (t) out += ", ";
            out += std::to_string(c.scope[t]);
        }
        out += "], \"num_states\": " + std::to_string(c.num_states) + ", \"table\": [\n";
        const int rows = (int)(c.table.size() / c.num_states);
        for (int s = 0; s < c.num_states; ++s) {
            out += "      [";
            for (int row = 0; row < rows; ++row) {
                if (row) out += ", ";
                out += format_double(c.table[(std::size_t)s * rows + row]);
            }
            out += (s + 1 < c.num_states) ? "],\n" : "]\n";
        }
        out += "    ]}";
        out += (j + 1 < instance.constraint_count()) ? ",\n" : "\n";
    }
    out += "  ]\n}\n";
    return out;
}

Instance instance_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("instance: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("instance: top-level value must be an object");

    Instance instance;
    const auto& agents = require_field(doc, "agents", "instance");
    if (!agents.is_array()) throw ParseError("instance: \"agents\" must be an array");
    for (const auto& a : agents) {
        Agent agent;
        agent.id = require_field(a, "id", "agent").get<int>();
        const auto& domain = require_field(a, "domain", "agent");
        if (!domain.is_array())
            throw ParseError("agent " + std::to_string(agent.id) + ": \"domain\" must be an array");
        for (const auto& token : domain) agent.domain.push_back(token.get<std::string>());
        instance.agents.push_back(std::move(agent));
    }

    std::vector<std::string> violations;
    const auto& constraints = require_field(doc, "constraints", "instance");
    if (!constraints.is_array()) throw ParseError("instance: \"constraints\" must be an array");
    for (const auto& entry : constraints) {
        Constraint c;
        c.id = require_field(entry, "id", "constraint").get<int>();
        const auto& scope = require_field(entry, "scope", "constraint");
        for (const auto& agent_id : scope) c.scope.push_back(agent_id.get<int>());
        c.num_states = require_field(entry, "num_states", "constraint").get<int>();
        const auto& table = require_field(entry, "table", "constraint");
        if (!table.is_array())
            throw ParseError("constraint " + std::to_string(c.id) + ": \"table\" must be an array");
        std::size_t state_rows = 0;
        bool first_state = true;
        for (const auto& state_entries : table) {
            if (!state_entries.is_array())
                throw ParseError("constraint " + std::to_string(c.id) +
                                 ": table rows must be arrays");
            if (first_state) {
                state_rows = state_entries.size();
                first_state = false;
            } else if (state_entries.size() != state_rows) {
                violations.push_back("constraint " + std::to_string(c.id) +
                                     ": table size mismatch (uneven state rows)");
            }
            for (const auto& v : state_entries) c.table.push_back(v.get<double>());
        }
        if ((int)table.size() != c.num_states)
            violations.push_back("constraint " + std::to_string(c.id) +
                                 ": table size mismatch (" + std::to_string(table.size()) +
                                 " state blocks for " + std::to_string(c.num_states) +
                                 " states)");
        instance.constraints.push_back(std::move(c));
    }

    ValidationReport report = validate_instance(instance);
    if (!report.ok || !violations.empty()) {
        std::ostringstream msg;
        msg << "invalid instance:";
        for (const auto& v : violations) msg << "\n  " << v;
        for (const auto& v : report.violations) msg << "\n  " << v;
        throw ValidationError(msg.str());
    }
    instance.finalize();
    return instance;
}

Instance load_instance(const std::string& path) { return instance_from_json(read_text_file(path)); }

void save_instance(const Instance& instance, const std::string& path) {
    write_text_file(path, instance_to_json(instance));
}

std::string states_to_json(const std::vector<int>& true_states,
                           const std::vector<double>& task_means,
                           const std::vector<double>& task_spreads) {
    std::string out;
    out += "{\n  \"version\": \"";
    out += kFileVersion;
    out += "\",\n  \"true_states\": [";
    for (std::size_t j = 0; j < true_states.size(); ++j) {
        if (j) out += ", ";
        out += std::to_string(true_states[j]);
    }
    out += "],\n  \"task_means\": [";
    for (std::size_t j = 0; j < task_means.size(); ++j) {
        if (j) out += ", ";
        out += format_double(task_means[j]);
    }
    out += "],\n  \"task_spreads\": [";
    for (std::size_t j = 0; j < task_spreads.size(); ++j) {
        if (j) out += ", ";
        out += format_double(task_spreads[j]);
    }
    out += "]\n}\n";
    return out;
}

std::vector<int> states_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("states: ") + e.what());
    }
    std::vector<int> states;
    for (const auto& s : require_field(doc, "true_states", "states")) states.push_back(s.get<int>());
    return states;
}

std::string states_path_for(const std::string& instance_path) {
    const std::string suffix = ".json";
    if (instance_path.size() > suffix.size() &&
        instance_path.compare(instance_path.size() - suffix.size(), suffix.size(), suffix) == 0)
        return instance_path.substr(0, instance_path.size() - suffix.size()) + ".states.json";
    return instance_path + ".states.json";
}

const char* solve_status_name(SolveStatus status) {
    switch (status) {
        case SolveStatus::Converged: return "converged";
        case SolveStatus::IterationCapReached: return "iteration-cap";
        case SolveStatus::Stalled: return "stalled";
        case SolveStatus::Timeout: return "timeout";
    }
    return "unknown";
}

SolutionDoc make_solution_doc(const Instance& instance, const std::string& algorithm,
                              const std::string& status, const Assignment& assignment,
                              double regret, const std::vector<IcgIteration>& iterations,
                              int witness_count) {
    SolutionDoc doc;
    doc.algorithm = algorithm;
    doc.status = status;
    for (int i = 0; i < instance.agent_count(); ++i)
        doc.assignment.push_back({instance.agents[i].id, instance.agents[i].domain[assignment[i]]});
    doc.regret = regret;
    doc.iterations = iterations;
    doc.witness_count = witness_count;
    return doc;
}

std::string solution_to_json(const SolutionDoc& doc) {
    std::string out;
    out += "{\n  \"version\": \"";
    out += kFileVersion;
    out += "\",\n  \"algorithm\": ";
    append_escaped(out, doc.algorithm);
    out += ",\n  \"status\": ";
    append_escaped(out, doc.status);
    out += ",\n  \"assignment\": {";
    for (std::size_t i = 0; i < doc.assignment.size(); ++i) {
        if (i) out += ", ";
        append_escaped(out, std::to_string(doc.assignment[i].first));
        out += ": ";
        append_escaped(out, doc.assignment[i].second);
    }
    out += "},\n  \"minimax_regret\": ";
    out += std::isinf(doc.regret) ? "null" : format_double(doc.regret);
    out += ",\n  \"witness_count\": " + std::to_string(doc.witness_count);
    out += ",\n  \"iterations\": [";
    for (std::size_t t = 0; t < doc.iterations.size(); ++t) {
        if (t) out += ", ";
        const IcgIteration& it = doc.iterations[t];
        out += "{\"delta\": ";
        out += std::isinf(it.delta) ? "null" : format_double(it.delta);
        out += ", \"delta_prime\": " + format_double(it.delta_prime);
        out += ", \"witness_added\": ";
        out += it.witness_added ? "true" : "false";
        out += "}";
    }
    out += "]\n}\n";
    return out;
}

SolutionDoc solution_from_json(const std::string& text) {
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("solution: ") + e.what());
    }
    SolutionDoc doc;
    doc.algorithm = require_field(parsed, "algorithm", "solution").get<std::string>();
    doc.status = parsed.value("status", std::string("ok"));
    const auto& assignment = require_field(parsed, "assignment", "solution");
    if (!assignment.is_object()) throw ParseError("solution: \"assignment\" must be an object");
    for (const auto& [key, value] : assignment.items()) {
        int agent_id = 0;
        try {
            agent_id = std::stoi(key);
        } catch (const std::exception&) {
            throw ParseError("solution: assignment key \"" + key + "\" is not an agent id");
        }
        doc.assignment.push_back({agent_id, value.get<std::string>()});
    }
    const auto& regret = require_field(parsed, "minimax_regret", "solution");
    doc.regret = regret.is_null() ? kNegInfinity : regret.get<double>();
    doc.witness_count = parsed.value("witness_count", 0);
    if (parsed.contains("iterations")) {
        for (const auto& entry : parsed["iterations"]) {
            IcgIteration it;
            it.delta = entry["delta"].is_null() ? kNegInfinity : entry["delta"].get<double>();
            it.delta_prime = entry.value("delta_prime", 0.0);
            it.witness_added = entry.value("witness_added", false);
            doc.iterations.push_back(it);
        }
    }
    return doc;
}

Assignment solution_assignment(const Instance& instance, const SolutionDoc& doc) {
    Assignment assignment(instance.agent_count(), -1);
    for (const auto& [agent_id, token] : doc.assignment) {
        const int pos = instance.agent_pos(agent_id);
        if (pos < 0)
            throw ValidationError("solution references unknown agent id " +
                                  std::to_string(agent_id));
        const auto& domain = instance.agents[pos].domain;
        int index = -1;
        for (std::size_t d = 0; d < domain.size(); ++d)
            if (domain[d] == token) { index = (int)d; break; }
        if (index < 0)
            throw ValidationError("solution assigns agent " + std::to_string(agent_id) +
                                  " the value \"" + token + "\" outside its domain");
        assignment[pos] = index;
    }
    for (int i = 0; i < instance.agent_count(); ++i)
        if (assignment[i] < 0)
            throw ValidationError("solution is missing an assignment for agent " +
                                  std::to_string(instance.agents[i].id));
    return assignment;
}

std::string instance_hash(const Instance& instance) {
    const std::string text = instance_to_json(instance);
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char ch : text) {
        hash ^= ch;
        hash *= 0x100000001b3ull;
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)hash);
    return buf;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out) throw IoError("write failed for " + path);
}

} // namespace urdcop
