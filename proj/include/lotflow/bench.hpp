#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lotflow/core.hpp"
#include "lotflow/cycle.hpp"
#include "lotflow/ga.hpp"

namespace lotflow {

// One record of the 640-case test bed: a 6-period Poisson instance tagged
// with its demand pattern and parameter levels.
struct BenchCase {
    int index = 0;
    std::string pattern;
    Instance inst;
};

// 10 patterns x 2^6 parameter levels (B0, p, a, v, pi, b), h = 1, T = 6.
std::vector<BenchCase> build_testbed();

double rmse(std::span<const double> optimal, std::span<const double> achieved);

struct MapeResult {
    double percent = 0.0;
    int excluded = 0;  // cases with |optimal| below the near-zero guard
};

// Mean |optimal - achieved| / |optimal| in percent; near-zero optima are
// excluded and counted.
MapeResult mape(std::span<const double> optimal, std::span<const double> achieved);

// 95% normal-approximation half-width 1.96 * s / sqrt(n); requires n >= 2.
double ci_halfwidth(std::span<const double> sample);

// Delta-method 95% interval for an RMSE, from the squared errors.
std::pair<double, double> rmse_ci(std::span<const double> squared_errors);

struct BenchConfig {
    std::vector<std::string> methods = {"Sim-opt", "GA-sQS", "GA-sS", "GA-RS", "GA-RQ"};
    int eval_scenarios = 100000;
    std::uint64_t seed = 0;
    double poisson_eps = 1e-6;
    std::size_t state_cap = 50'000'000;
    int threads = 0;       // case-level parallelism
    GaConfig ga;           // per-method seeds derived from seed
    // Independent GA runs per method (keyed by method name, default 1); the
    // run with the best training fitness is scored.
    std::map<std::string, int> ga_restarts;
    HeuristicConfig heuristic;
};

struct CaseResult {
    int case_index = 0;
    std::string pattern;
    double optimal = 0.0;                     // SDP value
    std::map<std::string, double> achieved;   // per-method out-of-sample mean
    std::map<std::string, double> seconds;    // informational wall time
    bool failed = false;
    std::string error;
};

struct PivotRow {
    std::string group;   // grouping dimension, e.g. "Ini capital"
    std::string level;   // e.g. "20"; "all" for the General row
    int cases = 0;
    std::map<std::string, double> metric;             // per-method RMSE or MAPE
    std::map<std::string, std::pair<double, double>> ci;  // per-method interval
    std::map<std::string, int> excluded;              // MAPE only
};

struct PivotReport {
    std::vector<std::string> methods;
    std::vector<BenchCase> bed_;
    std::vector<CaseResult> results;

    std::vector<PivotRow> rmse_rows() const;
    std::vector<PivotRow> mape_rows() const;
    std::string rmse_csv() const;
    std::string mape_csv() const;
    std::string ci_csv() const;
    std::string per_case_csv() const;
    int failed_cases() const;
};

// Runs SDP plus every requested method on each case and aggregates by
// parameter level and demand pattern. Failed cases are recorded and excluded
// from their groups.
PivotReport run_pivot(std::span<const BenchCase> bed, const BenchConfig& cfg);

// Seeded k-case subsample of the bed, without replacement.
std::vector<BenchCase> sample_cases(std::span<const BenchCase> bed, int k, std::uint64_t seed);

struct StabilityConfig {
    int num_cases = 32;
    std::vector<int> scenario_sizes = {100, 500, 1000, 1500};
    int runs = 10;
    std::uint64_t seed = 0;
    int eval_scenarios = 10000;
    double poisson_eps = 1e-6;
    std::size_t state_cap = 50'000'000;
    int threads = 0;
    bool vary_run_seed = true;  // false replays one seed per run (degenerate check)
    GaConfig ga;
};

struct StabilityCell {
    double mean_std = 0.0;
    double mean_rmse = 0.0;  // vs the case's SDP optimum
};

struct StabilityReport {
    std::vector<int> scenario_sizes;
    std::vector<PolicyFamily> families;  // sQS, sS, RS, RQ order
    // [size][family] for each test side
    std::vector<std::vector<StabilityCell>> in_sample;
    std::vector<std::vector<StabilityCell>> out_sample;

    std::string csv() const;
};

// GA stability study: re-tunes each sampled case `runs` times per training
// scenario size and reports mean STD / mean RMSE of the training fitness
// (in-sample) and of the benchmark-evaluated fitness (out-of-sample).
StabilityReport stability_test(std::span<const BenchCase> bed, const StabilityConfig& cfg);

}  // namespace lotflow
