#include "lotflow/sdp.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <cmath>
#include <limits>
#include <mutex>
#include <string>
#include <unordered_set>

#include "lotflow/parallel.hpp"

namespace lotflow {

namespace {

constexpr std::int64_t kInvBias = 1LL << 20;
constexpr std::int64_t kCapBias = 1LL << 42;

}  // namespace

State unpack_state(std::uint64_t key) {
    const std::int64_t inv = static_cast<std::int64_t>(key >> 43) - kInvBias;
    const std::int64_t cap4 = static_cast<std::int64_t>(key & ((1ULL << 43) - 1)) - kCapBias;
    return {static_cast<int>(inv), static_cast<double>(cap4) / 1e4};
}

std::uint64_t pack_state(const State& s) {
    const std::int64_t cap4 = s.capital_key();
    if (s.I <= -kInvBias || s.I >= kInvBias || cap4 <= -kCapBias || cap4 >= kCapBias)
        throw std::runtime_error("state out of packable range");
    return (static_cast<std::uint64_t>(s.I + kInvBias) << 43) |
           static_cast<std::uint64_t>(cap4 + kCapBias);
}

StateExplosionError::StateExplosionError(int period_, std::size_t states_)
    : std::runtime_error("reachable state cap exceeded at period " + std::to_string(period_) +
                         " (" + std::to_string(states_) + " states)"),
      period(period_), states(states_) {}

UnreachableStateError::UnreachableStateError(int period_, const State& state_)
    : std::runtime_error("state (I=" + std::to_string(state_.I) +
                         ", B=" + std::to_string(state_.B) + ") unreachable at period " +
                         std::to_string(period_ + 1)) {}

std::size_t SdpSolution::total_states() const {
    std::size_t n = 0;
    for (auto c : state_counts) n += c;
    return n;
}

namespace {

struct Layer {
    std::vector<std::uint64_t> keys;   // sorted
    std::vector<double> values;        // aligned with keys
};

double lookup(const Layer& layer, std::uint64_t key) {
    const auto it = std::lower_bound(layer.keys.begin(), layer.keys.end(), key);
    assert(it != layer.keys.end() && *it == key);
    return layer.values[static_cast<std::size_t>(it - layer.keys.begin())];
}

}  // namespace

namespace {

SdpSolution solve_exact(const Instance& inst, const std::vector<Pmf>& pmfs,
                        const SdpOptions& opts, std::size_t state_cap) {
    const int T = inst.T;

    // Qmax_t(I) = max(0, sum of remaining max demands - I); ordering beyond
    // that is dominated.
    std::vector<int> dmax_suffix(T + 1, 0);
    for (int t = T - 1; t >= 0; --t) dmax_suffix[t] = dmax_suffix[t + 1] + pmfs[t].back().value;

    const State initial{inst.I0, round_money(inst.B0)};

    // Forward reachability under all feasible actions, level by level.
    std::vector<std::vector<std::uint64_t>> reach(T + 1);
    reach[0] = {pack_state(initial)};
    std::size_t total_states = 1;
    for (int t = 0; t < T; ++t) {
        std::unordered_set<std::uint64_t> next;
        std::mutex merge_mutex;
        parallel_chunks(reach[t].size(), opts.threads, [&](std::size_t begin, std::size_t end) {
            std::unordered_set<std::uint64_t> local;
            for (std::size_t i = begin; i < end; ++i) {
                const State s = unpack_state(reach[t][i]);
                const int qmax = std::max(0, dmax_suffix[t] - s.I);
                for (int q = 0; q <= qmax; ++q) {
                    const Decision dec = Decision::order(q);
                    for (const auto& e : pmfs[t])
                        local.insert(pack_state(capital_transition(s, dec, e.value, inst)));
                }
            }
            const std::lock_guard<std::mutex> lock(merge_mutex);
            next.insert(local.begin(), local.end());
        });
        reach[t + 1].assign(next.begin(), next.end());
        std::sort(reach[t + 1].begin(), reach[t + 1].end());
        total_states += reach[t + 1].size();
        if (total_states > state_cap) throw StateExplosionError(t + 2, total_states);
    }

    // Backward induction; ties broken toward the smallest Q by the strict
    // comparison in ascending order.
    SdpSolution sol;
    sol.poisson_eps = opts.poisson_eps;
    sol.action_table.resize(T);
    sol.state_counts.resize(T + 1);
    for (int t = 0; t <= T; ++t) sol.state_counts[t] = reach[t].size();

    Layer next_layer;
    next_layer.keys = std::move(reach[T]);
    next_layer.values.resize(next_layer.keys.size());
    for (std::size_t i = 0; i < next_layer.keys.size(); ++i) {
        const State s = unpack_state(next_layer.keys[i]);
        next_layer.values[i] = -inst.b * std::max(-s.B, 0.0);
    }

    for (int t = T - 1; t >= 0; --t) {
        Layer layer;
        layer.keys = std::move(reach[t]);
        layer.values.resize(layer.keys.size());
        std::vector<int> best_q(layer.keys.size(), 0);
        parallel_chunks(layer.keys.size(), opts.threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                const State s = unpack_state(layer.keys[i]);
                const int qmax = std::max(0, dmax_suffix[t] - s.I);
                double best = -std::numeric_limits<double>::infinity();
                int arg = 0;
                for (int q = 0; q <= qmax; ++q) {
                    const Decision dec = Decision::order(q);
                    double expect = 0.0;
                    for (const auto& e : pmfs[t]) {
                        const State ns = capital_transition(s, dec, e.value, inst);
                        expect += e.prob * (ns.B - s.B + lookup(next_layer, pack_state(ns)));
                    }
                    if (expect > best) {
                        best = expect;
                        arg = q;
                    }
                }
                layer.values[i] = best;
                best_q[i] = arg;
            }
        });
        auto& actions = sol.action_table[t];
        actions.reserve(layer.keys.size());
        for (std::size_t i = 0; i < layer.keys.size(); ++i) actions.emplace(layer.keys[i], best_q[i]);
        next_layer = std::move(layer);
    }

    sol.value = next_layer.values.front();
    return sol;
}

// Capital-lattice backward induction for instances whose exact reachable
// state space explodes. The transition separates through the inventory
// position y = I + Q: revenue p*min(D + I-, Q + I+) equals
// p*min(D, y) + p*max(-I, 0), so the one-period cash flow is a (y, D) term
// plus an I-only shift. Each backup is then a demand-weighted sum of shifted
// value rows over the capital lattice, and the maximum over Q > 0 is a
// suffix maximum over y. Capital off the lattice is linearly interpolated.
SdpSolution solve_grid(const Instance& inst, const std::vector<Pmf>& pmfs,
                       const SdpOptions& opts) {
    const int T = inst.T;
    const double u = opts.grid_step;
    if (!(u > 0)) throw std::invalid_argument("grid_step must be positive");

    std::vector<int> dsuf(T + 1, 0);
    for (int t = T - 1; t >= 0; --t) dsuf[t] = dsuf[t + 1] + pmfs[t].back().value;

    const auto interest = [&](double B) { return B - inst.b * std::max(-B, 0.0); };
    // cash flow of one period split as flow(y, d) + shift(I) - a*1{Q>0}
    const auto flow = [&](int y, int d) {
        return inst.p * std::min(y, d) - inst.h * std::max(y - d, 0) -
               inst.pi * std::max(d - y, 0) - inst.v * y;
    };
    const auto shift = [&](int I) { return inst.v * I + inst.p * std::max(-I, 0); };

    // Per-period inventory, inventory-position and capital ranges covering
    // every transition image.
    std::vector<int> Ilo(T + 1), Ihi(T + 1), yhi(T);
    Ilo[0] = Ihi[0] = inst.I0;
    for (int t = 0; t < T; ++t) {
        yhi[t] = std::max(Ihi[t], dsuf[t]);
        Ilo[t + 1] = Ilo[t] - pmfs[t].back().value;
        Ihi[t + 1] = yhi[t];
    }

    std::vector<double> lo(T + 1), hi(T + 1), smin(T), smax(T);
    lo[0] = hi[0] = round_money(inst.B0);
    for (int t = 0; t < T; ++t) {
        smin[t] = smax[t] = shift(Ilo[t]);
        for (int I = Ilo[t] + 1; I <= Ihi[t]; ++I) {
            smin[t] = std::min(smin[t], shift(I));
            smax[t] = std::max(smax[t], shift(I));
        }
        double cmin = 0.0, cmax = 0.0;
        bool first = true;
        for (int y = Ilo[t]; y <= yhi[t]; ++y)
            for (const auto& e : pmfs[t]) {
                const double c = flow(y, e.value);
                cmin = first ? c : std::min(cmin, c);
                cmax = first ? c : std::max(cmax, c);
                first = false;
            }
        lo[t + 1] = interest(lo[t]) + cmin + smin[t] - inst.a;
        hi[t + 1] = interest(hi[t]) + cmax + smax[t];
    }

    std::vector<std::size_t> M(T + 1);
    std::size_t peak_bytes = 0;
    for (int t = 0; t <= T; ++t) {
        M[t] = static_cast<std::size_t>(std::ceil((hi[t] - lo[t]) / u)) + 1;
        const std::size_t layer = M[t] * static_cast<std::size_t>(Ihi[t] - Ilo[t] + 1);
        if (t > 0) peak_bytes = std::max(peak_bytes, 4 * (layer + M[t - 1] *
                                         static_cast<std::size_t>(Ihi[t - 1] - Ilo[t - 1] + 1)));
    }
    // two float layers plus working rows must fit comfortably in memory
    if (peak_bytes > 3ULL * 1024 * 1024 * 1024)
        throw StateExplosionError(T + 1, peak_bytes / 4);

    SdpSolution sol;
    sol.poisson_eps = opts.poisson_eps;
    sol.grid = true;
    sol.action_table.resize(T);
    sol.state_counts.resize(T + 1);
    for (int t = 0; t <= T; ++t)
        sol.state_counts[t] = M[t] * static_cast<std::size_t>(Ihi[t] - Ilo[t] + 1);

    // order-up-to levels are kept on a strided sub-lattice to bound memory;
    // decisions themselves are taken on the full lattice
    std::size_t action_points = 0;
    for (int t = 0; t < T; ++t) action_points += sol.state_counts[t];
    GridActions& ga = sol.grid_actions;
    ga.step = u;
    ga.stride = std::max<std::size_t>(1, (action_points + 30'000'000 - 1) / 30'000'000);
    ga.lo.assign(lo.begin(), lo.begin() + T);
    ga.Ilo.assign(Ilo.begin(), Ilo.begin() + T);
    ga.Ihi.assign(Ihi.begin(), Ihi.begin() + T);
    ga.M.assign(M.begin(), M.begin() + T);
    ga.level.resize(T);
    for (int t = 0; t < T; ++t) {
        const std::size_t cols = (M[t] - 1) / ga.stride + 1;
        ga.level[t].assign(static_cast<std::size_t>(Ihi[t] - Ilo[t] + 1) * cols, 0);
    }

    const auto lerp = [](const std::vector<float>& row, double kf) {
        const double kc = std::clamp(kf, 0.0, static_cast<double>(row.size() - 1));
        const std::size_t k0 = static_cast<std::size_t>(kc);
        const std::size_t k1 = std::min(k0 + 1, row.size() - 1);
        const double fr = kc - static_cast<double>(k0);
        return (1.0 - fr) * row[k0] + fr * row[k1];
    };

    // terminal layer: B_{T+1} = B_T - b*max(-B_T, 0), independent of I
    const int nIT = Ihi[T] - Ilo[T] + 1;
    std::vector<float> next(static_cast<std::size_t>(nIT) * M[T]);
    for (std::size_t j = 0; j < M[T]; ++j) {
        const float v0 = static_cast<float>(interest(lo[T] + static_cast<double>(j) * u));
        for (int i = 0; i < nIT; ++i) next[static_cast<std::size_t>(i) * M[T] + j] = v0;
    }

    for (int t = T - 1; t >= 0; --t) {
        const std::size_t Mt = M[t], Mn = M[t + 1];
        // A's lattice holds x = interest-adjusted capital plus shift(I),
        // before flow(y, d) and the fixed cost; aligned with period t+1
        const double alo_raw = interest(lo[t]) + smin[t] - inst.a;
        const double ahi_raw = interest(hi[t]) + smax[t];
        const double alo = lo[t + 1] + std::floor((alo_raw - lo[t + 1]) / u) * u;
        const std::size_t MA = static_cast<std::size_t>(std::ceil((ahi_raw - alo) / u)) + 2;
        const int ymax = dsuf[t];

        std::vector<float> cur(static_cast<std::size_t>(Ihi[t] - Ilo[t] + 1) * Mt);
        std::vector<float> arow(MA), srow(MA, 0.0f);
        std::vector<std::int16_t> sarg(MA, 0);
        std::vector<double> acc(MA);
        const std::size_t cols = (Mt - 1) / ga.stride + 1;
        bool have_s = false;
        // z walks order-up-to levels and inventory rows together
        for (int z = std::max(yhi[t], Ihi[t]); z >= Ilo[t]; --z) {
            // A(z, x) = E_D[ W_{t+1}(z - D, x + flow(z, D)) ]
            std::fill(acc.begin(), acc.end(), 0.0);
            for (const auto& e : pmfs[t]) {
                const int irow = std::clamp(z - e.value, Ilo[t + 1], Ihi[t + 1]) - Ilo[t + 1];
                const float* src = next.data() + static_cast<std::size_t>(irow) * Mn;
                const std::ptrdiff_t off =
                    std::llround((alo + flow(z, e.value) - lo[t + 1]) / u);
                const std::ptrdiff_t ma = static_cast<std::ptrdiff_t>(MA);
                const std::ptrdiff_t mn = static_cast<std::ptrdiff_t>(Mn);
                const std::ptrdiff_t k_lo = std::clamp<std::ptrdiff_t>(-off, 0, ma);
                const std::ptrdiff_t k_hi = std::clamp<std::ptrdiff_t>(mn - off, k_lo, ma);
                const double w = e.prob;
                for (std::ptrdiff_t k = 0; k < k_lo; ++k) acc[k] += w * src[0];
                for (std::ptrdiff_t k = k_lo; k < k_hi; ++k) acc[k] += w * src[k + off];
                for (std::ptrdiff_t k = k_hi; k < ma; ++k) acc[k] += w * src[mn - 1];
            }
            for (std::size_t k = 0; k < MA; ++k) arow[k] = static_cast<float>(acc[k]);

            // best of Q = 0 and the best order-up-to level y > I, for I = z
            if (z <= Ihi[t]) {
                const double s = shift(z);
                float* out = cur.data() + static_cast<std::size_t>(z - Ilo[t]) * Mt;
                for (std::size_t j = 0; j < Mt; ++j) {
                    const double x = interest(lo[t] + static_cast<double>(j) * u) + s;
                    const double kf = (x - alo) / u;
                    double best = lerp(arow, kf);
                    if (z < ymax && have_s) best = std::max(best, lerp(srow, kf - inst.a / u));
                    out[j] = static_cast<float>(best);
                }
                std::int16_t* lev =
                    ga.level[t].data() + static_cast<std::size_t>(z - Ilo[t]) * cols;
                for (std::size_t col = 0; col < cols; ++col) {
                    const std::size_t j = std::min(col * ga.stride, Mt - 1);
                    const double x = interest(lo[t] + static_cast<double>(j) * u) + s;
                    const double kf = (x - alo) / u;
                    int y_best = z;
                    if (z < ymax && have_s) {
                        const double kq = kf - inst.a / u;
                        if (lerp(srow, kq) > lerp(arow, kf)) {
                            const std::size_t kn = static_cast<std::size_t>(
                                std::clamp(std::llround(kq), 0LL,
                                           static_cast<long long>(MA - 1)));
                            y_best = sarg[kn];
                        }
                    }
                    lev[col] = static_cast<std::int16_t>(y_best);
                }
            }
            if (z <= ymax) {
                if (!have_s) {
                    srow = arow;
                    std::fill(sarg.begin(), sarg.end(), static_cast<std::int16_t>(z));
                    have_s = true;
                } else {
                    for (std::size_t k = 0; k < MA; ++k) {
                        if (arow[k] >= srow[k]) {
                            srow[k] = arow[k];
                            sarg[k] = static_cast<std::int16_t>(z);
                        }
                    }
                }
            }
        }
        next.swap(cur);
    }

    sol.value = static_cast<double>(next[0]) - round_money(inst.B0);
    return sol;
}

}  // namespace

SdpSolution solve(const Instance& inst, const SdpOptions& opts) {
    inst.validate();
    std::vector<Pmf> pmfs(inst.T);
    for (int t = 0; t < inst.T; ++t) pmfs[t] = inst.demand[t].to_pmf(opts.poisson_eps);

    if (opts.method != SdpMethod::Grid) {
        const std::size_t cap = opts.method == SdpMethod::Exact
                                    ? opts.state_cap
                                    : std::min(opts.state_cap, opts.exact_budget);
        try {
            return solve_exact(inst, pmfs, opts, cap);
        } catch (const StateExplosionError&) {
            if (opts.method == SdpMethod::Exact) throw;
        }
    }
    return solve_grid(inst, pmfs, opts);
}

int action(const SdpSolution& sol, int t, const State& state, bool nearest_fallback) {
    if (sol.grid) {
        const GridActions& ga = sol.grid_actions;
        if (t < 0 || t >= static_cast<int>(ga.level.size()))
            throw std::out_of_range("period out of range");
        const std::size_t cols = (ga.M[t] - 1) / ga.stride + 1;
        const int I = std::clamp(state.I, ga.Ilo[t], ga.Ihi[t]);
        const long long j = std::clamp(
            std::llround((state.B - ga.lo[t]) / ga.step), 0LL,
            static_cast<long long>(ga.M[t] - 1));
        const std::size_t col = std::min(
            static_cast<std::size_t>((static_cast<std::size_t>(j) + ga.stride / 2) / ga.stride),
            cols - 1);
        const int level = ga.level[t][static_cast<std::size_t>(I - ga.Ilo[t]) * cols + col];
        return std::max(0, level - state.I);
    }
    if (t < 0 || t >= static_cast<int>(sol.action_table.size()))
        throw std::out_of_range("period out of range");
    const auto& table = sol.action_table[t];
    const auto it = table.find(pack_state(state));
    if (it != table.end()) return it->second;
    if (!nearest_fallback) throw UnreachableStateError(t, state);

    // Closest stored state: same inventory preferred, then capital distance.
    bool found = false;
    int best_q = 0;
    std::uint64_t best_key = 0;
    std::int64_t best_di = 0, best_db = 0;
    for (const auto& [key, q] : table) {
        const State s = unpack_state(key);
        const std::int64_t di = std::abs(static_cast<std::int64_t>(s.I) - state.I);
        const std::int64_t db = std::abs(s.capital_key() - state.capital_key());
        if (!found || di < best_di || (di == best_di && db < best_db) ||
            (di == best_di && db == best_db && key < best_key)) {
            found = true;
            best_q = q;
            best_key = key;
            best_di = di;
            best_db = db;
        }
    }
    if (!found) throw UnreachableStateError(t, state);
    return best_q;
}

std::pair<std::vector<int>, double> replay(const SdpSolution& sol, const Instance& inst,
                                           const std::vector<int>& path) {
    if (static_cast<int>(path.size()) != inst.T)
        throw std::invalid_argument("path length must equal the horizon");
    State s{inst.I0, round_money(inst.B0)};
    std::vector<int> orders(inst.T, 0);
    for (int t = 0; t < inst.T; ++t) {
        orders[t] = action(sol, t, s);
        s = capital_transition(s, Decision::order(orders[t]), path[t], inst);
    }
    return {std::move(orders), objective(final_capital(s.B, inst.b), inst)};
}

}  // namespace lotflow
