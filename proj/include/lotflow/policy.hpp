#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lotflow/core.hpp"
#include "lotflow/sdp.hpp"

namespace lotflow {

enum class PolicyFamily { RQ, RS, SS, SQS, SDP };

PolicyFamily parse_policy_family(const std::string& name);  // "rq"|"rs"|"ss"|"sqs"
std::string policy_family_name(PolicyFamily family);

// The (s,Qbar,S) rule as printed takes the outer max of Qbar and the
// order-up-to quantity; Cap is the prose "upper bound" variant (outer min).
enum class SqsSemantics { Literal, Cap };

// Tagged union of the four parametric policies plus an SDP action table.
// Only the vectors of the active family are used; all have length T.
struct Policy {
    PolicyFamily family = PolicyFamily::SS;
    std::vector<std::uint8_t> R;   // RQ, RS review schedule
    std::vector<int> Q;            // RQ quantities
    std::vector<int> s;            // SS, SQS reorder points
    std::vector<int> S;            // RS, SS, SQS order-up-to levels
    std::vector<int> Qbar;         // SQS
    const SdpSolution* table = nullptr;  // SDP, not owned
    SqsSemantics sqs_semantics = SqsSemantics::Literal;

    static Policy rq(std::vector<std::uint8_t> R, std::vector<int> Q);
    static Policy rs(std::vector<std::uint8_t> R, std::vector<int> S);
    static Policy ss(std::vector<int> s, std::vector<int> S);
    static Policy sqs(std::vector<int> s, std::vector<int> Qbar, std::vector<int> S);
    static Policy sdp(const SdpSolution& sol);
};

// Order quantity at period t (0-based) in the given pre-transition state.
// Parametric policies never read state.B; the SDP table is keyed on both.
Decision decide(const Policy& policy, int t, const State& state);

// Mean increment, standard error and 95% normal CI over a scenario set.
struct EvalReport {
    double mean = 0.0;
    double stderr_mean = 0.0;
    double ci95 = 0.0;   // half-width, 1.96 * stderr
    int n = 0;
    std::vector<double> increments;  // per-scenario, kept when requested

    std::string csv_row(std::uint64_t seed) const;  // mean,stderr,ci95,n,seed
};

// Mean/stderr/CI over per-scenario increments, summed pairwise by index.
EvalReport make_report(std::vector<double> increments, bool keep_increments = false);

// Chains decide / capital_transition over one demand path and returns the
// final capital increment.
double evaluate_path(const Instance& inst, const Policy& policy, std::span<const int> path);

EvalReport evaluate(const Instance& inst, const Policy& policy, const ScenarioSet& scenarios,
                    int threads = 0, bool keep_increments = false);

}  // namespace lotflow
