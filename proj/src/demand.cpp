#include "lotflow/demand.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace lotflow {

DemandModel DemandModel::from_pmf(Pmf pmf) {
    validate_pmf(pmf);
    DemandModel m;
    m.kind = Kind::ExplicitPmf;
    m.pmf = std::move(pmf);
    return m;
}

DemandModel DemandModel::poisson(double mean) {
    if (mean < 0) throw std::invalid_argument("poisson mean must be >= 0");
    DemandModel m;
    m.kind = Kind::Poisson;
    m.mean = mean;
    return m;
}

Pmf DemandModel::to_pmf(double eps) const {
    if (kind == Kind::ExplicitPmf) return pmf;
    return truncate_poisson(mean, eps);
}

double DemandModel::model_mean() const {
    if (kind == Kind::Poisson) return mean;
    return pmf_mean(pmf);
}

int DemandModel::max_value(double eps) const {
    const Pmf p = to_pmf(eps);
    return p.empty() ? 0 : p.back().value;
}

void validate_pmf(const Pmf& pmf) {
    if (pmf.empty()) throw std::invalid_argument("pmf must be nonempty");
    double total = 0.0;
    int prev = -1;
    for (const auto& e : pmf) {
        if (e.value < 0) throw std::invalid_argument("pmf values must be nonnegative");
        if (e.value <= prev) throw std::invalid_argument("pmf values must be strictly increasing");
        if (e.prob < 0) throw std::invalid_argument("pmf probabilities must be nonnegative");
        prev = e.value;
        total += e.prob;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("pmf probabilities must sum to 1");
}

double pmf_mean(const Pmf& pmf) {
    double m = 0.0;
    for (const auto& e : pmf) m += e.value * e.prob;
    return m;
}

Pmf truncate_poisson(double mean, double eps) {
    if (mean < 0) throw std::invalid_argument("poisson mean must be >= 0");
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must be in (0,1)");
    if (mean == 0.0) return {{0, 1.0}};

    // p(k) via the multiplicative recurrence; K = smallest k with cdf >= 1-eps.
    std::vector<double> mass;
    double pk = std::exp(-mean);
    double cdf = pk;
    mass.push_back(pk);
    while (cdf < 1.0 - eps) {
        const int k = static_cast<int>(mass.size());
        pk *= mean / k;
        cdf += pk;
        mass.push_back(pk);
        if (k > 10'000'000) throw std::runtime_error("poisson truncation did not converge");
    }

    Pmf out(mass.size());
    for (std::size_t k = 0; k < mass.size(); ++k)
        out[k] = {static_cast<int>(k), mass[k] / cdf};
    return out;
}

std::vector<std::string> pattern_names() {
    return {"STA", "LCY1", "LCY2", "SIN1", "SIN2", "RAND", "EMP1", "EMP2", "EMP3", "EMP4"};
}

std::vector<double> pattern_means(const std::string& name) {
    static const std::unordered_map<std::string, std::vector<double>> table = {
        {"STA", {7, 7, 7, 7, 7, 7}},
        {"LCY1", {8, 7, 6, 5, 4, 3}},
        {"LCY2", {2, 3, 4, 5, 6, 7}},
        {"SIN1", {8, 5, 2, 1, 2, 5}},
        {"SIN2", {5, 6, 7, 8, 7, 6}},
        {"RAND", {8, 4, 1, 3, 1, 3}},
        {"EMP1", {1, 3, 8, 4, 8, 7}},
        {"EMP2", {1, 4, 7, 3, 5, 8}},
        {"EMP3", {3, 8, 4, 4, 6, 2}},
        {"EMP4", {3, 1, 5, 8, 4, 4}},
    };
    const auto it = table.find(name);
    if (it == table.end()) throw std::invalid_argument("unknown demand pattern: " + name);
    return it->second;
}

namespace {

inline std::uint64_t splitmix_finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag1, std::uint64_t tag2) {
    std::uint64_t z = splitmix_finalize(seed ^ (tag1 * 0xff51afd7ed558ccdULL));
    return splitmix_finalize(z ^ (tag2 * 0xc4ceb9fe1a85ec53ULL));
}

double counter_uniform(std::uint64_t seed, std::uint64_t scenario, std::uint64_t period) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL;
    z = splitmix_finalize(z ^ (scenario * 0xd6e8feb86659fd93ULL));
    z = splitmix_finalize(z ^ (period * 0xa0761d6478bd642fULL));
    z = splitmix_finalize(z);
    return static_cast<double>(z >> 11) * 0x1.0p-53;
}

int sample_pmf(const Pmf& pmf, double u) {
    double cdf = 0.0;
    for (const auto& e : pmf) {
        cdf += e.prob;
        if (u < cdf) return e.value;
    }
    return pmf.back().value;
}

ScenarioSet generate_scenarios(const std::vector<DemandModel>& models, int n,
                               std::uint64_t seed, double eps) {
    if (n < 1) throw std::invalid_argument("scenario count must be >= 1");
    const int T = static_cast<int>(models.size());
    std::vector<Pmf> pmfs(models.size());
    for (std::size_t t = 0; t < models.size(); ++t) pmfs[t] = models[t].to_pmf(eps);

    ScenarioSet set;
    set.seed = seed;
    set.n = n;
    set.horizon = T;
    set.demands.resize(static_cast<std::size_t>(n) * T);
    for (int i = 0; i < n; ++i)
        for (int t = 0; t < T; ++t)
            set.demands[static_cast<std::size_t>(i) * T + t] =
                sample_pmf(pmfs[t], counter_uniform(seed, static_cast<std::uint64_t>(i),
                                                    static_cast<std::uint64_t>(t)));
    return set;
}

}  // namespace lotflow
