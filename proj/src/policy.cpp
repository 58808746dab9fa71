#include "lotflow/policy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "lotflow/parallel.hpp"

namespace lotflow {

PolicyFamily parse_policy_family(const std::string& name) {
    if (name == "rq") return PolicyFamily::RQ;
    if (name == "rs") return PolicyFamily::RS;
    if (name == "ss") return PolicyFamily::SS;
    if (name == "sqs") return PolicyFamily::SQS;
    if (name == "sdp") return PolicyFamily::SDP;
    throw std::invalid_argument("unknown policy family: " + name);
}

std::string policy_family_name(PolicyFamily family) {
    switch (family) {
        case PolicyFamily::RQ: return "rq";
        case PolicyFamily::RS: return "rs";
        case PolicyFamily::SS: return "ss";
        case PolicyFamily::SQS: return "sqs";
        case PolicyFamily::SDP: return "sdp";
    }
    return "?";
}

Policy Policy::rq(std::vector<std::uint8_t> R, std::vector<int> Q) {
    Policy p;
    p.family = PolicyFamily::RQ;
    p.R = std::move(R);
    p.Q = std::move(Q);
    return p;
}

Policy Policy::rs(std::vector<std::uint8_t> R, std::vector<int> S) {
    Policy p;
    p.family = PolicyFamily::RS;
    p.R = std::move(R);
    p.S = std::move(S);
    return p;
}

Policy Policy::ss(std::vector<int> s, std::vector<int> S) {
    Policy p;
    p.family = PolicyFamily::SS;
    p.s = std::move(s);
    p.S = std::move(S);
    return p;
}

Policy Policy::sqs(std::vector<int> s, std::vector<int> Qbar, std::vector<int> S) {
    Policy p;
    p.family = PolicyFamily::SQS;
    p.s = std::move(s);
    p.Qbar = std::move(Qbar);
    p.S = std::move(S);
    return p;
}

Policy Policy::sdp(const SdpSolution& sol) {
    Policy p;
    p.family = PolicyFamily::SDP;
    p.table = &sol;
    return p;
}

Decision decide(const Policy& policy, int t, const State& state) {
    int q = 0;
    switch (policy.family) {
        case PolicyFamily::RQ:
            q = policy.R[t] ? policy.Q[t] : 0;
            break;
        case PolicyFamily::RS:
            q = policy.R[t] ? std::max(0, policy.S[t] - state.I) : 0;
            break;
        case PolicyFamily::SS:
            q = state.I >= policy.s[t] ? 0 : std::max(0, policy.S[t] - state.I);
            break;
        case PolicyFamily::SQS: {
            if (state.I >= policy.s[t]) {
                q = 0;
            } else {
                const int up_to = std::max(0, policy.S[t] - state.I);
                q = policy.sqs_semantics == SqsSemantics::Literal
                        ? std::max(policy.Qbar[t], up_to)
                        : std::min(policy.Qbar[t], up_to);
            }
            break;
        }
        case PolicyFamily::SDP:
            q = action(*policy.table, t, state, /*nearest_fallback=*/true);
            break;
    }
    return Decision::order(q);
}

double evaluate_path(const Instance& inst, const Policy& policy, std::span<const int> path) {
    if (static_cast<int>(path.size()) != inst.T)
        throw std::invalid_argument("path length must equal the horizon");
    State s{inst.I0, round_money(inst.B0)};
    for (int t = 0; t < inst.T; ++t)
        s = capital_transition(s, decide(policy, t, s), path[t], inst);
    return objective(final_capital(s.B, inst.b), inst);
}

namespace {

// Pairwise summation by scenario index; bit-stable regardless of how the
// increments were computed in parallel.
double pairwise_sum(std::span<const double> xs) {
    if (xs.size() <= 8) {
        double acc = 0.0;
        for (double x : xs) acc += x;
        return acc;
    }
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.subspan(0, half)) + pairwise_sum(xs.subspan(half));
}

}  // namespace

EvalReport evaluate(const Instance& inst, const Policy& policy, const ScenarioSet& scenarios,
                    int threads, bool keep_increments) {
    if (scenarios.horizon != inst.T)
        throw std::invalid_argument("scenario horizon does not match the instance");
    const int n = scenarios.n;
    std::vector<double> inc(n);
    parallel_chunks(static_cast<std::size_t>(n), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const std::span<const int> path(scenarios.demands.data() + i * scenarios.horizon,
                                            static_cast<std::size_t>(scenarios.horizon));
            inc[i] = evaluate_path(inst, policy, path);
        }
    });

    return make_report(std::move(inc), keep_increments);
}

EvalReport make_report(std::vector<double> increments, bool keep_increments) {
    const int n = static_cast<int>(increments.size());
    EvalReport rep;
    rep.n = n;
    if (n == 0) return rep;
    rep.mean = pairwise_sum(increments) / n;
    if (n > 1) {
        std::vector<double> sq(increments.size());
        for (int i = 0; i < n; ++i) sq[i] = (increments[i] - rep.mean) * (increments[i] - rep.mean);
        const double var = pairwise_sum(sq) / (n - 1);
        rep.stderr_mean = std::sqrt(var / n);
    }
    rep.ci95 = 1.96 * rep.stderr_mean;
    if (keep_increments) rep.increments = std::move(increments);
    return rep;
}

std::string EvalReport::csv_row(std::uint64_t seed) const {
    std::ostringstream os;
    os << mean << ',' << stderr_mean << ',' << ci95 << ',' << n << ',' << seed;
    return os.str();
}

}  // namespace lotflow
