#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lotflow/core.hpp"
#include "lotflow/policy.hpp"

namespace lotflow {

enum class ReplanMode { CycleCommit, EveryPeriod };

struct HeuristicConfig {
    int samples = 1000;        // Monte-Carlo paths per cycle evaluation
    int step = 1;              // line-search lattice step
    int qmax = -1;             // order-quantity bound; -1 = remaining max demand + backlog
    ReplanMode replan = ReplanMode::CycleCommit;
    std::uint64_t seed = 0;
    double poisson_eps = 1e-6;
    int threads = 0;

    void validate() const;
};

// Replenishment cycle choice: order Q_star at period t, next order no earlier
// than r_star + 1.
struct CyclePlan {
    int t = 0;        // 0-based
    int r_star = 0;   // 0-based, inclusive
    int q_star = 0;
    double avg_increment = 0.0;  // best average capital increment per period
};

// Sample-average total capital increment over periods t..r (0-based,
// inclusive) when Q is ordered at t and nothing afterwards. samples.at(i, k)
// is the demand of absolute period t + k.
double cycle_increment(const Instance& inst, int t, int r, int Q, const State& state,
                       const ScenarioSet& samples);

// Maximizer of cycle_increment over the integer lattice {0, step, 2*step, ...}
// up to qmax, exploiting concavity; ties resolved toward the smallest Q.
std::pair<int, double> best_quantity(const Instance& inst, int t, int r, const State& state,
                                     const ScenarioSet& samples, int qmax, int step = 1);

// One pass of the replenishment-cycle search from period t: Q is the
// single-period maximizer, then r grows while the per-period average
// increment of that Q keeps improving.
CyclePlan plan(const Instance& inst, int t, const State& state, const HeuristicConfig& cfg);

// Rolls the heuristic over one realized demand path; returns per-period
// orders and the final capital increment.
std::pair<std::vector<int>, double> heuristic_replay(const Instance& inst,
                                                     const HeuristicConfig& cfg,
                                                     const std::vector<int>& path);

// Evaluates the rolling heuristic on a scenario set.
EvalReport run_heuristic(const Instance& inst, const HeuristicConfig& cfg,
                         const ScenarioSet& scenarios);

}  // namespace lotflow
