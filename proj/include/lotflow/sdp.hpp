#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lotflow/core.hpp"

namespace lotflow {

enum class SdpMethod {
    Auto,   // exact enumeration while it fits in exact_budget, grid otherwise
    Exact,  // reachable-state enumeration only; throws on explosion
    Grid,   // capital-lattice backward induction
};

struct SdpOptions {
    double poisson_eps = 1e-6;          // tail mass for Poisson truncation
    std::size_t state_cap = 50'000'000; // total reachable-state budget
    int threads = 0;                    // 0 = auto
    SdpMethod method = SdpMethod::Auto;
    double grid_step = 0.01;            // capital lattice step for the grid method
    std::size_t exact_budget = 2'000'000;  // Auto: exact attempted up to this many states
};

struct StateExplosionError : std::runtime_error {
    StateExplosionError(int period, std::size_t states);
    int period;           // 1-based period at which the cap was exceeded
    std::size_t states;
};

struct UnreachableStateError : std::runtime_error {
    UnreachableStateError(int period, const State& state);
};

// Packed (inventory, capital) state key; capital in 1e-4 units.
std::uint64_t pack_state(const State& s);
State unpack_state(std::uint64_t key);

// Optimal order-up-to levels on a strided capital sub-lattice; decisions are
// computed on the full lattice and stored every `stride` columns.
struct GridActions {
    double step = 0.01;
    std::size_t stride = 1;
    std::vector<double> lo;                        // per-period lattice origin
    std::vector<int> Ilo, Ihi;                     // per-period inventory range
    std::vector<std::size_t> M;                    // full lattice columns per period
    std::vector<std::vector<std::int16_t>> level;  // [t][(I - Ilo) * cols + col]
};

// Value function and optimal-action map over reachable states per period.
struct SdpSolution {
    double value = 0.0;                                        // F_1(B0, I0)
    std::vector<std::unordered_map<std::uint64_t, int>> action_table;  // [t][state] -> Q
    std::vector<std::size_t> state_counts;                     // states (or lattice points) per period
    double poisson_eps = 1e-6;
    bool grid = false;  // true when the capital-lattice method produced the value
    GridActions grid_actions;  // populated only for grid solutions

    std::size_t total_states() const;
};

// Exact backward induction over forward-reachable states; argmax ties broken
// toward the smallest order quantity.
SdpSolution solve(const Instance& inst, const SdpOptions& opts = {});

// Optimal order quantity at period t (0-based). With nearest_fallback the
// closest stored state of the period is used (same inventory preferred);
// otherwise an unreachable state throws. Grid solutions answer from the
// stored lattice, clamping to its bounds.
int action(const SdpSolution& sol, int t, const State& state, bool nearest_fallback = false);

// Follows the action table along one realized demand path; returns the
// per-period order quantities and the final capital increment.
std::pair<std::vector<int>, double> replay(const SdpSolution& sol, const Instance& inst,
                                           const std::vector<int>& path);

}  // namespace lotflow
