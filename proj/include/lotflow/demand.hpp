#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lotflow {

// One point of a discrete demand distribution.
struct PmfEntry {
    int value = 0;
    double prob = 0.0;
};

using Pmf = std::vector<PmfEntry>;

// Per-period demand model: either an explicit pmf over nonnegative integers
// (values strictly increasing, probabilities summing to 1) or a Poisson mean
// that gets truncated to an explicit pmf before any numeric work.
struct DemandModel {
    enum class Kind { ExplicitPmf, Poisson };

    Kind kind = Kind::ExplicitPmf;
    Pmf pmf;              // when ExplicitPmf
    double mean = 0.0;    // when Poisson

    static DemandModel from_pmf(Pmf pmf);
    static DemandModel poisson(double mean);

    // Explicit pmf of this model; Poisson is truncated at tail mass eps.
    Pmf to_pmf(double eps = 1e-6) const;

    double model_mean() const;
    int max_value(double eps = 1e-6) const;
};

// Smallest support {0..K} holding Poisson mass >= 1 - eps, renormalized
// proportionally over the kept points.
Pmf truncate_poisson(double mean, double eps);

double pmf_mean(const Pmf& pmf);

// Validates an explicit pmf: nonnegative strictly increasing integer values,
// probabilities >= 0 summing to 1 within 1e-12. Throws std::invalid_argument.
void validate_pmf(const Pmf& pmf);

// 6-period mean-demand vectors of the named benchmark patterns
// (STA, LCY1, LCY2, SIN1, SIN2, RAND, EMP1..EMP4).
std::vector<double> pattern_means(const std::string& name);
std::vector<std::string> pattern_names();

// n x T matrix of integer demand realizations. Path i, period t (0-based)
// is drawn from its period model with a counter-based substream keyed by
// (seed, i, t), so regeneration is bit-identical regardless of evaluation
// order or thread count.
struct ScenarioSet {
    std::uint64_t seed = 0;
    int n = 0;
    int horizon = 0;
    std::vector<int> demands;  // row-major, n rows of length horizon

    int at(int scenario, int period) const { return demands[static_cast<std::size_t>(scenario) * horizon + period]; }
};

// Counter-based uniform in [0,1): three rounds of the splitmix64 finalizer
// over the packed key (seed, scenario, period). Fixed for golden outputs.
double counter_uniform(std::uint64_t seed, std::uint64_t scenario, std::uint64_t period);

// Derives an independent substream seed from a base seed and two tags.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag1, std::uint64_t tag2);

// Inverse-CDF draw from an explicit pmf given a uniform in [0,1).
int sample_pmf(const Pmf& pmf, double u);

ScenarioSet generate_scenarios(const std::vector<DemandModel>& models, int n,
                               std::uint64_t seed, double eps = 1e-6);

}  // namespace lotflow
