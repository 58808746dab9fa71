#pragma once

#include <filesystem>
#include <string>

#include "lotflow/core.hpp"
#include "lotflow/policy.hpp"
#include "lotflow/sdp.hpp"

namespace lotflow {

// Malformed or schema-violating input file.
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Instance JSON: {"T","B0","I0","p","a","v","h","pi","b","demand"}; demand
// entries are {"kind":"poisson","mean":x} or {"kind":"pmf","values":[...],
// "probs":[...]}. Unknown keys are rejected.
Instance parse_instance_json(const std::string& text);
Instance load_instance(const std::filesystem::path& file);
std::string instance_to_json(const Instance& inst);

// Policy JSON: {"type":"RQ","R":[...],"Q":[...]}, {"type":"RS","R":[...],
// "S":[...]}, {"type":"sS","s":[...],"S":[...]}, {"type":"sQS","s":[...],
// "Qbar":[...],"S":[...]}.
Policy parse_policy_json(const std::string& text);
Policy load_policy(const std::filesystem::path& file);
std::string policy_to_json(const Policy& policy);

// Plain-text dump of an SDP solution (value plus per-period action table,
// states sorted), stable for golden diffs.
std::string solution_dump(const SdpSolution& sol);

void write_text_file(const std::filesystem::path& file, const std::string& text);
std::string read_text_file(const std::filesystem::path& file);

}  // namespace lotflow
