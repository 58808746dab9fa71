#include "lotflow/ga.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "lotflow/parallel.hpp"

namespace lotflow {

void GaConfig::validate() const {
    if (subpopulations < 1) throw std::invalid_argument("GaConfig: subpopulations must be >= 1");
    if (population % subpopulations != 0)
        throw std::invalid_argument("GaConfig: population must divide evenly into subpopulations");
    if (population < 2 * elite) throw std::invalid_argument("GaConfig: population must be >= 2*elite");
    if (elite % subpopulations != 0)
        throw std::invalid_argument("GaConfig: elite must divide evenly into subpopulations");
    if (!(crossover_rate > 0.0 && crossover_rate <= 1.0))
        throw std::invalid_argument("GaConfig: crossover rate must be in (0,1]");
    if (tolerance <= 0.0) throw std::invalid_argument("GaConfig: tolerance must be positive");
    if (max_generations < 1 || stall_window < 1 || migration_interval < 1 || train_scenarios < 1)
        throw std::invalid_argument("GaConfig: counts must be >= 1");
}

std::vector<double> rank_scale(const std::vector<double>& raw_fitness) {
    if (raw_fitness.empty()) throw std::invalid_argument("rank_scale: empty fitness list");
    std::vector<std::size_t> order(raw_fitness.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return raw_fitness[i] > raw_fitness[j];
    });
    std::vector<double> scores(raw_fitness.size());
    for (std::size_t r = 0; r < order.size(); ++r)
        scores[order[r]] = 1.0 / std::sqrt(static_cast<double>(r + 1));
    return scores;
}

double mutation_sigma(int k, double sigma0, int max_generations) {
    if (k < 0 || k > max_generations) throw std::invalid_argument("mutation_sigma: bad generation");
    double sigma = sigma0;
    for (int j = 1; j <= k; ++j)
        sigma *= 1.0 - static_cast<double>(j) / max_generations;
    return sigma;
}

std::vector<double> scattered_crossover(const std::vector<double>& parent1,
                                        const std::vector<double>& parent2,
                                        const std::vector<std::uint8_t>& mask) {
    if (parent1.size() != parent2.size() || parent1.size() != mask.size())
        throw std::invalid_argument("scattered_crossover: length mismatch");
    std::vector<double> child(parent1.size());
    for (std::size_t i = 0; i < child.size(); ++i)
        child[i] = mask[i] ? parent1[i] : parent2[i];
    return child;
}

namespace {

struct GeneLayout {
    PolicyFamily family;
    int T;
    std::vector<double> lower, upper;

    std::size_t size() const { return lower.size(); }
};

// R genes live in [0,1] and decode by threshold 0.5; quantity/level genes are
// reals decoded by rounding half-away-from-zero. Bounds come from the total
// maximum demand of the truncated supports.
GeneLayout make_layout(const Instance& inst, PolicyFamily family, double eps) {
    int dtot = 0;
    for (const auto& m : inst.demand) dtot += m.max_value(eps);
    const double lo_level = -static_cast<double>(dtot);
    const double hi = static_cast<double>(dtot);

    GeneLayout layout{family, inst.T, {}, {}};
    const auto add = [&](int count, double lo_, double hi_) {
        layout.lower.insert(layout.lower.end(), count, lo_);
        layout.upper.insert(layout.upper.end(), count, hi_);
    };
    switch (family) {
        case PolicyFamily::RQ:
            add(inst.T, 0.0, 1.0);
            add(inst.T, 0.0, hi);
            break;
        case PolicyFamily::RS:
            add(inst.T, 0.0, 1.0);
            add(inst.T, lo_level, hi);
            break;
        case PolicyFamily::SS:
            add(inst.T, lo_level, hi);  // s
            add(inst.T, lo_level, hi);  // S
            break;
        case PolicyFamily::SQS:
            add(inst.T, lo_level, hi);  // s
            add(inst.T, 0.0, hi);       // Qbar
            add(inst.T, lo_level, hi);  // S
            break;
        case PolicyFamily::SDP:
            throw std::invalid_argument("tune: SDP is not a tunable family");
    }
    return layout;
}

int decode_qty(double gene) { return static_cast<int>(std::round(gene)); }

Policy decode(const GeneLayout& layout, const std::vector<double>& genes) {
    const int T = layout.T;
    const auto bools = [&](int offset) {
        std::vector<std::uint8_t> out(T);
        for (int t = 0; t < T; ++t) out[t] = genes[offset + t] >= 0.5 ? 1 : 0;
        return out;
    };
    const auto ints = [&](int offset) {
        std::vector<int> out(T);
        for (int t = 0; t < T; ++t) out[t] = decode_qty(genes[offset + t]);
        return out;
    };
    switch (layout.family) {
        case PolicyFamily::RQ: return Policy::rq(bools(0), ints(T));
        case PolicyFamily::RS: return Policy::rs(bools(0), ints(T));
        case PolicyFamily::SS: return Policy::ss(ints(0), ints(T));
        case PolicyFamily::SQS: return Policy::sqs(ints(0), ints(T), ints(2 * T));
        case PolicyFamily::SDP: break;
    }
    throw std::logic_error("decode: bad family");
}

std::size_t roulette(const std::vector<double>& scores, double u) {
    const double total = std::accumulate(scores.begin(), scores.end(), 0.0);
    double cum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        cum += scores[i];
        if (u * total < cum) return i;
    }
    return scores.size() - 1;
}

}  // namespace

TuneResult tune(const Instance& inst, PolicyFamily family, const GaConfig& cfg,
                const ScenarioSet* benchmark) {
    inst.validate();
    cfg.validate();
    const GeneLayout layout = make_layout(inst, family, cfg.poisson_eps);
    const std::size_t genes = layout.size();
    const int nsub = cfg.subpopulations;
    const int sub_size = cfg.population / nsub;
    const int sub_elite = cfg.elite / nsub;

    const ScenarioSet train =
        generate_scenarios(inst.demand, cfg.train_scenarios, cfg.seed, cfg.poisson_eps);

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const auto clamp_genes = [&](std::vector<double>& x) {
        for (std::size_t i = 0; i < genes; ++i)
            x[i] = std::clamp(x[i], layout.lower[i], layout.upper[i]);
    };

    std::vector<std::vector<double>> pop(cfg.population, std::vector<double>(genes));
    for (auto& ind : pop)
        for (std::size_t i = 0; i < genes; ++i)
            ind[i] = layout.lower[i] + unit(rng) * (layout.upper[i] - layout.lower[i]);
    // The Qbar genes floor every order, so most random (s,Qbar,S) individuals
    // over-order badly and the search rarely recovers the order-up-to corner
    // where the family reduces to (s,S). Start half of each subpopulation
    // there and let mutation raise the floor only where it pays.
    if (family == PolicyFamily::SQS)
        for (int sp = 0; sp < nsub; ++sp)
            for (int i = sub_size / 2; i < sub_size; ++i)
                std::fill_n(pop[sp * sub_size + i].begin() + inst.T, inst.T, 0.0);

    std::vector<double> fitness(cfg.population, 0.0);
    const auto eval_all = [&] {
        parallel_chunks(pop.size(), cfg.threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                const Policy p = decode(layout, pop[i]);
                fitness[i] = evaluate(inst, p, train, 1).mean;
            }
        });
    };
    eval_all();

    std::vector<double> best_history;
    int generations = 0;
    for (int gen = 1; gen <= cfg.max_generations; ++gen) {
        generations = gen;
        const double sigma = mutation_sigma(gen, cfg.sigma0, cfg.max_generations);

        std::vector<std::vector<double>> next_pop(cfg.population, std::vector<double>(genes));
        for (int sp = 0; sp < nsub; ++sp) {
            const int base = sp * sub_size;
            const std::vector<double> sub_fit(fitness.begin() + base,
                                              fitness.begin() + base + sub_size);
            const std::vector<double> scores = rank_scale(sub_fit);

            std::vector<int> order(sub_size);
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(),
                             [&](int i, int j) { return sub_fit[i] > sub_fit[j]; });

            int filled = 0;
            for (; filled < sub_elite; ++filled)
                next_pop[base + filled] = pop[base + order[filled]];

            const int rest = sub_size - sub_elite;
            const int n_cross = static_cast<int>(std::lround(cfg.crossover_rate * rest));
            for (int c = 0; c < n_cross; ++c, ++filled) {
                const auto& p1 = pop[base + roulette(scores, unit(rng))];
                const auto& p2 = pop[base + roulette(scores, unit(rng))];
                std::vector<std::uint8_t> mask(genes);
                for (auto& m : mask) m = unit(rng) < 0.5 ? 1 : 0;
                auto child = scattered_crossover(p1, p2, mask);
                clamp_genes(child);
                next_pop[base + filled] = std::move(child);
            }
            for (; filled < sub_size; ++filled) {
                auto child = pop[base + roulette(scores, unit(rng))];
                for (std::size_t i = 0; i < genes; ++i) child[i] += sigma * gauss(rng);
                clamp_genes(child);
                next_pop[base + filled] = std::move(child);
            }
        }
        pop = std::move(next_pop);

        // Ring migration: best fraction of each subpopulation replaces the
        // worst of the next one, judged on the previous generation's fitness
        // layout after re-evaluation below.
        eval_all();
        if (nsub > 1 && gen % cfg.migration_interval == 0) {
            const int n_mig = static_cast<int>(std::lround(cfg.migration_fraction * sub_size));
            const std::vector<std::vector<double>> snapshot = pop;
            const std::vector<double> snap_fit = fitness;
            for (int sp = 0; sp < nsub; ++sp) {
                const int src = sp * sub_size;
                const int dst = ((sp + 1) % nsub) * sub_size;
                std::vector<int> src_order(sub_size), dst_order(sub_size);
                std::iota(src_order.begin(), src_order.end(), 0);
                std::iota(dst_order.begin(), dst_order.end(), 0);
                std::stable_sort(src_order.begin(), src_order.end(), [&](int i, int j) {
                    return snap_fit[src + i] > snap_fit[src + j];
                });
                std::stable_sort(dst_order.begin(), dst_order.end(), [&](int i, int j) {
                    return snap_fit[dst + i] < snap_fit[dst + j];
                });
                for (int m = 0; m < n_mig; ++m) {
                    pop[dst + dst_order[m]] = snapshot[src + src_order[m]];
                    fitness[dst + dst_order[m]] = snap_fit[src + src_order[m]];
                }
            }
        }

        const double best = *std::max_element(fitness.begin(), fitness.end());
        best_history.push_back(best);
        if (static_cast<int>(best_history.size()) > cfg.stall_window) {
            const double old = best_history[best_history.size() - 1 - cfg.stall_window];
            if ((best - old) / cfg.stall_window < cfg.tolerance) break;
        }
    }

    const std::size_t best_idx = static_cast<std::size_t>(
        std::max_element(fitness.begin(), fitness.end()) - fitness.begin());
    TuneResult result;
    result.policy = decode(layout, pop[best_idx]);
    result.train_fitness = fitness[best_idx];
    result.generations = generations;
    if (benchmark) result.benchmark = evaluate(inst, result.policy, *benchmark, cfg.threads);
    return result;
}

}  // namespace lotflow
