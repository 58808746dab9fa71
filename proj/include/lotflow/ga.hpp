#pragma once

#include <cstdint>
#include <vector>

#include "lotflow/core.hpp"
#include "lotflow/policy.hpp"

namespace lotflow {

struct GaConfig {
    int population = 200;          // total, split across subpopulations
    int subpopulations = 2;
    int elite = 10;                // total elite survivors per generation
    double crossover_rate = 0.8;
    double sigma0 = 10.0;          // initial Gaussian mutation sigma
    int max_generations = 10000;
    double tolerance = 1e-6;
    int stall_window = 50;
    int migration_interval = 20;
    double migration_fraction = 0.2;
    int train_scenarios = 1000;
    std::uint64_t seed = 0;
    double poisson_eps = 1e-6;
    int threads = 0;

    void validate() const;
};

// Rank-based fitness scaling: the individual with fitness rank r (1 = best,
// ties broken by index) gets score 1/sqrt(r). Scores returned in input order.
std::vector<double> rank_scale(const std::vector<double>& raw_fitness);

// Shrinking mutation sigma: sigma_k = sigma_{k-1} * (1 - k/G), from sigma_0.
double mutation_sigma(int k, double sigma0, int max_generations);

// Gene i from parent1 where mask[i] is set, else from parent2.
std::vector<double> scattered_crossover(const std::vector<double>& parent1,
                                        const std::vector<double>& parent2,
                                        const std::vector<std::uint8_t>& mask);

struct TuneResult {
    Policy policy;
    double train_fitness = 0.0;    // best training mean increment
    EvalReport benchmark;          // out-of-sample, when a benchmark set is given
    int generations = 0;
};

// Fits the parameters of one policy family by maximizing mean final capital
// increment over a fixed training scenario set (common random numbers across
// individuals and generations). Deterministic given (inst, family, cfg).
TuneResult tune(const Instance& inst, PolicyFamily family, const GaConfig& cfg,
                const ScenarioSet* benchmark = nullptr);

}  // namespace lotflow
