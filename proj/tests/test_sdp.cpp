#include <doctest.h>

#include <limits>
#include <random>

#include "lotflow/policy.hpp"
#include "lotflow/sdp.hpp"
#include "test_util.hpp"

using namespace lotflow;

namespace {

// Brute-force oracle: exhaustive decision-tree enumeration of the optimal
// expected increment, independent of the solver's reachability machinery.
double brute_force(const Instance& inst, const std::vector<Pmf>& pmfs, int t, const State& s,
                   int qmax) {
    if (t == inst.T) return -inst.b * std::max(-s.B, 0.0);
    double best = -std::numeric_limits<double>::infinity();
    for (int q = 0; q <= qmax; ++q) {
        double expect = 0.0;
        for (const auto& e : pmfs[t]) {
            const State ns = capital_transition(s, Decision::order(q), e.value, inst);
            expect += e.prob * (ns.B - s.B + brute_force(inst, pmfs, t + 1, ns, qmax));
        }
        best = std::max(best, expect);
    }
    return best;
}

double brute_force_value(const Instance& inst, int qmax) {
    std::vector<Pmf> pmfs;
    for (const auto& m : inst.demand) pmfs.push_back(m.to_pmf());
    return brute_force(inst, pmfs, 0, {inst.I0, round_money(inst.B0)}, qmax);
}

}  // namespace

TEST_CASE("example instance solves to 1.30 exactly") {
    const SdpSolution sol = solve(example_instance());
    CHECK(sol.value == doctest::Approx(1.30).epsilon(1e-12));
}

TEST_CASE("no demand, single period") {
    Instance inst = example_instance();
    inst.T = 1;
    inst.demand = {DemandModel::from_pmf({{0, 1.0}})};
    const SdpSolution sol = solve(inst);
    CHECK(sol.value == doctest::Approx(0.0));
    CHECK(action(sol, 0, {0, round_money(inst.B0)}) == 0);
}

TEST_CASE("example action table matches the published samples") {
    const Instance inst = example_instance();
    const SdpSolution sol = solve(inst);
    CHECK(action(sol, 0, {0, 5}) == 0);
    CHECK(action(sol, 1, {-2, 1}) == 5);
    CHECK(action(sol, 1, {-1, 3}) == 4);
}

TEST_CASE("replay reproduces the published sample paths") {
    const Instance inst = example_instance();
    const SdpSolution sol = solve(inst);
    const auto check = [&](std::vector<int> path, std::vector<int> orders, double inc) {
        const auto [q, value] = replay(sol, inst, path);
        CHECK(q == orders);
        CHECK(value == doctest::Approx(inc).epsilon(1e-12));
    };
    check({2, 1, 2}, {0, 5, 0}, 3.8);
    check({2, 1, 1}, {0, 5, 0}, -2.2);
    check({2, 2, 2}, {0, 5, 0}, 3.0);
    check({1, 1, 2}, {0, 4, 0}, 1.4);
    check({1, 2, 1}, {0, 4, 0}, 3.0);
}

TEST_CASE("matches the brute-force oracle on random small instances") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> horizon(1, 3), support(1, 3), value(0, 4);
    std::uniform_real_distribution<double> cost(0.0, 6.0), rate(0.0, 0.3), cap(-5.0, 15.0);
    for (int trial = 0; trial < 60; ++trial) {
        Instance inst;
        inst.T = horizon(rng);
        inst.B0 = round_money(cap(rng));
        inst.I0 = value(rng) - 2;
        inst.p = round_money(cost(rng) + 2.0);
        inst.a = round_money(cost(rng));
        inst.v = round_money(cost(rng) / 3);
        inst.h = round_money(cost(rng) / 4);
        inst.pi = round_money(cost(rng) / 2);
        inst.b = round_money(rate(rng));
        for (int t = 0; t < inst.T; ++t) {
            const int k = support(rng);
            Pmf pmf;
            int v0 = value(rng);
            for (int j = 0; j < k; ++j) {
                pmf.push_back({v0, 0.0});
                v0 += 1 + value(rng);
            }
            for (auto& e : pmf) e.prob = 1.0 / k;
            inst.demand.push_back(DemandModel::from_pmf(std::move(pmf)));
        }
        const SdpSolution sol = solve(inst);
        // Oracle bound mirrors the solver's Qmax at the root.
        int dtot = 0;
        for (const auto& m : inst.demand) dtot += m.max_value();
        const double oracle = brute_force_value(inst, std::max(0, dtot - std::min(inst.I0, 0) +
                                                                       std::max(-inst.I0, 0)));
        CHECK(sol.value == doctest::Approx(oracle).epsilon(1e-9));
    }
}

TEST_CASE("grid method matches exact enumeration on random small instances") {
    std::mt19937_64 rng(19);
    std::uniform_int_distribution<int> horizon(1, 3), value(0, 4), rate_pick(0, 1);
    std::uniform_real_distribution<double> cost(0.0, 6.0), cap(-5.0, 15.0);
    for (int trial = 0; trial < 8; ++trial) {
        Instance inst;
        inst.T = horizon(rng);
        inst.B0 = round_money(cap(rng));
        inst.I0 = value(rng) - 2;
        inst.p = 4.0;
        inst.v = 2.0;
        inst.h = 1.0;
        inst.pi = 3.0;
        inst.a = round_money(cost(rng) * 2);
        inst.b = rate_pick(rng) ? 0.2 : 0.05;
        for (int t = 0; t < inst.T; ++t)
            inst.demand.push_back(DemandModel::poisson(1.0 + value(rng) % 3));
        SdpOptions exact;
        exact.method = SdpMethod::Exact;
        SdpOptions grid;
        grid.method = SdpMethod::Grid;
        const SdpSolution a = solve(inst, exact);
        const SdpSolution b = solve(inst, grid);
        CHECK(b.grid);
        // lattice interpolation and money rounding leave a sub-step residue
        CHECK(std::abs(b.value - a.value) <= 5e-4);
    }
}

TEST_CASE("grid action table replays to the optimal value") {
    Instance inst = example_instance();
    SdpOptions grid;
    grid.method = SdpMethod::Grid;
    const SdpSolution sol = solve(inst, grid);
    REQUIRE(sol.grid);
    CHECK(sol.value == doctest::Approx(1.30).epsilon(1e-6));
    CHECK(action(sol, 0, {0, 5}) == 0);
    CHECK(action(sol, 1, {-2, 1}) == 5);
    CHECK(action(sol, 1, {-1, 3}) == 4);
    const ScenarioSet set = generate_scenarios(inst.demand, 50000, 11);
    const EvalReport rep = evaluate(inst, Policy::sdp(sol), set);
    CHECK(std::abs(rep.mean - sol.value) <= rep.ci95);
}

TEST_CASE("boundary vanishes when b = 0") {
    Instance inst = example_instance();
    inst.b = 0.0;
    const SdpSolution sol = solve(inst);
    const double oracle = brute_force_value(inst, 8);
    CHECK(sol.value == doctest::Approx(oracle).epsilon(1e-9));
}

TEST_CASE("simulation of the action table is consistent with the value") {
    const Instance inst = example_instance();
    const SdpSolution sol = solve(inst);
    const ScenarioSet set = generate_scenarios(inst.demand, 100000, 3);
    const EvalReport rep = evaluate(inst, Policy::sdp(sol), set);
    CHECK(std::abs(rep.mean - sol.value) <= rep.ci95);
}

TEST_CASE("parametric policies never beat the optimum") {
    const Instance inst = example_instance();
    const SdpSolution sol = solve(inst);
    const ScenarioSet set = generate_scenarios(inst.demand, 50000, 5);
    const Policy table5_ss = Policy::ss({0, 7, 0}, {5, 3, 3});
    const Policy table5_rq = Policy::rq({0, 1, 0}, {0, 5, 0});
    for (const Policy* p : {&table5_ss, &table5_rq}) {
        const EvalReport rep = evaluate(inst, *p, set);
        CHECK(rep.mean <= sol.value + 3 * rep.ci95);
    }
}

TEST_CASE("unreachable state handling") {
    const Instance inst = example_instance();
    const SdpSolution sol = solve(inst);
    const State odd{25, 9999.0};
    CHECK_THROWS_AS(action(sol, 1, odd), UnreachableStateError);
    CHECK_NOTHROW(action(sol, 1, odd, true));
}

TEST_CASE("state cap triggers a state-explosion error") {
    const Instance inst = example_instance();
    SdpOptions opts;
    opts.state_cap = 10;
    opts.method = SdpMethod::Exact;
    CHECK_THROWS_AS(solve(inst, opts), StateExplosionError);
    // the default mode falls back to the grid method instead of throwing
    opts.method = SdpMethod::Auto;
    CHECK(solve(inst, opts).grid);
}

TEST_CASE("solver is deterministic across thread counts") {
    const Instance inst = example_instance();
    SdpOptions one;
    one.threads = 1;
    SdpOptions many;
    many.threads = 4;
    const SdpSolution a = solve(inst, one);
    const SdpSolution b = solve(inst, many);
    CHECK(a.value == b.value);
    REQUIRE(a.action_table.size() == b.action_table.size());
    for (std::size_t t = 0; t < a.action_table.size(); ++t) {
        REQUIRE(a.action_table[t].size() == b.action_table[t].size());
        for (const auto& [key, q] : a.action_table[t]) CHECK(b.action_table[t].at(key) == q);
    }
}
