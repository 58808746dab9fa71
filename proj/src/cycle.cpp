#include "lotflow/cycle.hpp"

#include <algorithm>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <unordered_map>

#include "lotflow/parallel.hpp"
#include "lotflow/sdp.hpp"

namespace lotflow {

void HeuristicConfig::validate() const {
    if (samples < 1) throw std::invalid_argument("HeuristicConfig: samples must be >= 1");
    if (step < 1) throw std::invalid_argument("HeuristicConfig: step must be >= 1");
    if (qmax < -1) throw std::invalid_argument("HeuristicConfig: qmax must be >= 0 or -1 (auto)");
}

double cycle_increment(const Instance& inst, int t, int r, int Q, const State& state,
                       const ScenarioSet& samples) {
    if (t > r || r >= inst.T) throw std::invalid_argument("cycle_increment: bad cycle bounds");
    if (Q < 0) throw std::invalid_argument("cycle_increment: Q must be >= 0");
    if (samples.horizon < r - t + 1)
        throw std::invalid_argument("cycle_increment: samples do not cover the cycle");
    double total = 0.0;
    for (int i = 0; i < samples.n; ++i) {
        State s = state;
        for (int n = t; n <= r; ++n)
            s = capital_transition(s, Decision::order(n == t ? Q : 0), samples.at(i, n - t), inst);
        total += s.B - state.B;
    }
    return total / samples.n;
}

std::pair<int, double> best_quantity(const Instance& inst, int t, int r, const State& state,
                                     const ScenarioSet& samples, int qmax, int step) {
    if (qmax < 0) throw std::invalid_argument("best_quantity: qmax must be >= 0");
    std::unordered_map<int, double> memo;
    const auto f = [&](int k) {
        const auto it = memo.find(k);
        if (it != memo.end()) return it->second;
        const double val = cycle_increment(inst, t, r, k * step, state, samples);
        memo.emplace(k, val);
        return val;
    };

    // The sampled objective is concave in Q along every path, so ternary
    // narrowing on the lattice is exact; the final ascending scan resolves
    // plateau ties toward the smallest Q.
    int lo = 0, hi = qmax / step;
    while (hi - lo > 8) {
        const int m1 = lo + (hi - lo) / 3;
        const int m2 = hi - (hi - lo) / 3;
        if (f(m1) >= f(m2)) hi = m2;
        else lo = m1 + 1;
    }
    int best_k = lo;
    double best = f(lo);
    for (int k = lo + 1; k <= hi; ++k) {
        const double val = f(k);
        if (val > best) {
            best = val;
            best_k = k;
        }
    }
    return {best_k * step, best};
}

namespace {

int auto_qmax(const Instance& inst, int t, const State& state, double eps) {
    int dmax = 0;
    for (int k = t; k < inst.T; ++k) dmax += inst.demand[k].max_value(eps);
    return std::max(0, dmax - state.I);
}

}  // namespace

CyclePlan plan(const Instance& inst, int t, const State& state, const HeuristicConfig& cfg) {
    inst.validate();
    cfg.validate();
    if (t < 0 || t >= inst.T) throw std::invalid_argument("plan: period out of range");

    // One sample set per (seed, t, state) covers the whole remaining horizon,
    // so all candidate (Q, r) share common random numbers.
    const std::vector<DemandModel> rest(inst.demand.begin() + t, inst.demand.end());
    const ScenarioSet samples = generate_scenarios(
        rest, cfg.samples, mix_seed(cfg.seed, static_cast<std::uint64_t>(t), pack_state(state)),
        cfg.poisson_eps);
    const int qmax = cfg.qmax >= 0 ? cfg.qmax : auto_qmax(inst, t, state, cfg.poisson_eps);

    // The quantity is anchored at the single-period maximizer; growing the
    // cycle only decides how long to commit to that order before replanning.
    const auto [q, total] = best_quantity(inst, t, t, state, samples, qmax, cfg.step);
    CyclePlan incumbent{t, t, q, total};
    for (int r = t + 1; r < inst.T; ++r) {
        const double avg = cycle_increment(inst, t, r, q, state, samples) / (r - t + 1);
        if (avg >= incumbent.avg_increment) {
            incumbent.r_star = r;
            incumbent.avg_increment = avg;
        } else {
            break;
        }
    }
    return incumbent;
}

namespace {

struct PlanCache {
    std::unordered_map<std::uint64_t, CyclePlan> map;
    std::mutex mutex;

    CyclePlan get(const Instance& inst, int t, const State& state, const HeuristicConfig& cfg) {
        const std::uint64_t key =
            mix_seed(static_cast<std::uint64_t>(t), pack_state(state), 0x9e3779b97f4a7c15ULL);
        {
            const std::lock_guard<std::mutex> lock(mutex);
            const auto it = map.find(key);
            if (it != map.end()) return it->second;
        }
        const CyclePlan p = plan(inst, t, state, cfg);
        const std::lock_guard<std::mutex> lock(mutex);
        map.emplace(key, p);
        return p;
    }
};

double rollout(const Instance& inst, const HeuristicConfig& cfg, std::span<const int> path,
               PlanCache& cache, std::vector<int>* orders_out) {
    State s{inst.I0, round_money(inst.B0)};
    std::vector<int> orders(inst.T, 0);
    int t = 0;
    while (t < inst.T) {
        const CyclePlan p = cache.get(inst, t, s, cfg);
        orders[t] = p.q_star;
        s = capital_transition(s, Decision::order(p.q_star), path[t], inst);
        if (cfg.replan == ReplanMode::CycleCommit) {
            for (int n = t + 1; n <= p.r_star; ++n)
                s = capital_transition(s, Decision::order(0), path[n], inst);
            t = p.r_star + 1;
        } else {
            ++t;
        }
    }
    if (orders_out) *orders_out = std::move(orders);
    return objective(final_capital(s.B, inst.b), inst);
}

}  // namespace

std::pair<std::vector<int>, double> heuristic_replay(const Instance& inst,
                                                     const HeuristicConfig& cfg,
                                                     const std::vector<int>& path) {
    if (static_cast<int>(path.size()) != inst.T)
        throw std::invalid_argument("path length must equal the horizon");
    PlanCache cache;
    std::vector<int> orders;
    const double inc = rollout(inst, cfg, path, cache, &orders);
    return {std::move(orders), inc};
}

EvalReport run_heuristic(const Instance& inst, const HeuristicConfig& cfg,
                         const ScenarioSet& scenarios) {
    if (scenarios.horizon != inst.T)
        throw std::invalid_argument("scenario horizon does not match the instance");
    PlanCache cache;
    std::vector<double> inc(scenarios.n);
    parallel_chunks(static_cast<std::size_t>(scenarios.n), cfg.threads,
                    [&](std::size_t begin, std::size_t end) {
                        for (std::size_t i = begin; i < end; ++i) {
                            const std::span<const int> path(
                                scenarios.demands.data() + i * scenarios.horizon,
                                static_cast<std::size_t>(scenarios.horizon));
                            inc[i] = rollout(inst, cfg, path, cache, nullptr);
                        }
                    });
    return make_report(std::move(inc));
}

}  // namespace lotflow
