#include <doctest.h>

#include <cmath>
#include <set>

#include "lotflow/bench.hpp"
#include "test_util.hpp"

using namespace lotflow;

TEST_CASE("testbed shape") {
    const std::vector<BenchCase> bed = build_testbed();
    REQUIRE(bed.size() == 640);
    std::set<std::string> patterns;
    for (const auto& bc : bed) {
        patterns.insert(bc.pattern);
        CHECK(bc.inst.T == 6);
        CHECK(bc.inst.h == 1.0);
        CHECK(bc.inst.I0 == 0);
        CHECK_NOTHROW(bc.inst.validate());
    }
    CHECK(patterns.size() == 10);
    CHECK(bed[0].index == 0);
    CHECK(bed[639].index == 639);

    int b0_high = 0;
    for (const auto& bc : bed)
        if (bc.inst.B0 == 20.0) ++b0_high;
    CHECK(b0_high == 320);
}

TEST_CASE("error metrics") {
    const std::vector<double> opt = {2.0, -1.0, 4.0};
    const std::vector<double> ach = {1.0, -1.0, 2.0};
    CHECK(rmse(opt, ach) == doctest::Approx(std::sqrt(5.0 / 3.0)));
    const MapeResult m = mape(opt, ach);
    CHECK(m.percent == doctest::Approx(100.0 * (0.5 + 0.0 + 0.5) / 3.0));
    CHECK(m.excluded == 0);

    const MapeResult guarded = mape(std::vector<double>{0.0, 2.0}, std::vector<double>{1.0, 1.0});
    CHECK(guarded.excluded == 1);
    CHECK(guarded.percent == doctest::Approx(50.0));

    CHECK_THROWS_AS(rmse(std::vector<double>{}, std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("confidence intervals") {
    CHECK(ci_halfwidth(std::vector<double>{0.0, 2.0}) ==
          doctest::Approx(1.96 * std::sqrt(2.0) / std::sqrt(2.0)));
    const auto [lo, hi] = rmse_ci(std::vector<double>{1.0, 1.0, 1.0, 1.0});
    CHECK(lo == doctest::Approx(1.0));
    CHECK(hi == doctest::Approx(1.0));
    const auto [lo2, hi2] = rmse_ci(std::vector<double>{0.0, 2.0});
    CHECK(lo2 == 0.0);  // clamped at zero
    CHECK(hi2 == doctest::Approx(std::sqrt(1.0 + 1.96 * std::sqrt(2.0) / std::sqrt(2.0))));
    CHECK_THROWS_AS(ci_halfwidth(std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("case subsampling is seeded and without replacement") {
    const std::vector<BenchCase> bed = build_testbed();
    const std::vector<BenchCase> a = sample_cases(bed, 64, 5);
    const std::vector<BenchCase> b = sample_cases(bed, 64, 5);
    const std::vector<BenchCase> c = sample_cases(bed, 64, 6);
    REQUIRE(a.size() == 64);
    std::set<int> seen;
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].index == b[i].index);
        seen.insert(a[i].index);
    }
    CHECK(seen.size() == 64);
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].index != c[i].index) differs = true;
    CHECK(differs);
}

TEST_CASE("pivot on a small custom bed") {
    // Two copies of the 3-period example instance with different capital so
    // the grouping has two levels to split on.
    std::vector<BenchCase> bed;
    for (int i = 0; i < 2; ++i) {
        Instance inst = example_instance();
        inst.B0 = i == 0 ? 5 : 20;
        bed.push_back({i, "STA", std::move(inst)});
    }

    BenchConfig cfg;
    cfg.methods = {"SDP", "Sim-opt", "GA-sS"};
    cfg.eval_scenarios = 20000;
    cfg.ga.population = 40;
    cfg.ga.elite = 4;
    cfg.ga.max_generations = 60;
    cfg.ga.stall_window = 20;
    cfg.ga.train_scenarios = 300;
    cfg.heuristic.samples = 300;

    const PivotReport report = run_pivot(bed, cfg);
    REQUIRE(report.failed_cases() == 0);
    REQUIRE(report.results.size() == 2);
    CHECK(report.results[0].optimal == doctest::Approx(1.30));

    const std::vector<PivotRow> rows = report.rmse_rows();
    const PivotRow& general = rows.back();
    CHECK(general.group == "General");
    CHECK(general.cases == 2);
    // a tabulated SDP method has zero error by construction
    CHECK(general.metric.at("SDP") == doctest::Approx(0.0));
    CHECK(general.metric.at("GA-sS") < 1.0);

    // per-level rows partition the General row
    int covered = 0;
    for (const auto& row : rows)
        if (row.group == "Ini capital") covered += row.cases;
    CHECK(covered == 2);

    // out-of-sample means are within CI of exact policy values for SDP
    for (const auto& r : report.results) CHECK(std::abs(r.achieved.at("SDP") - r.optimal) < 1e-9);

    // csv renderers include every method column
    const std::string rmse_csv = report.rmse_csv();
    CHECK(rmse_csv.find("group,level,cases,SDP,Sim-opt,GA-sS") == 0);
    CHECK(report.per_case_csv().find("case,pattern") == 0);
    CHECK(report.ci_csv().find("metric,group") == 0);
}

TEST_CASE("stability report on a tiny configuration") {
    std::vector<BenchCase> bed;
    for (int i = 0; i < 4; ++i) bed.push_back({i, "STA", example_instance()});

    StabilityConfig cfg;
    cfg.num_cases = 2;
    cfg.scenario_sizes = {50, 100};
    cfg.runs = 3;
    cfg.eval_scenarios = 2000;
    cfg.ga.population = 20;
    cfg.ga.elite = 2;
    cfg.ga.max_generations = 15;
    cfg.ga.stall_window = 100;
    cfg.ga.train_scenarios = 50;

    const StabilityReport rep = stability_test(bed, cfg);
    REQUIRE(rep.scenario_sizes == std::vector<int>{50, 100});
    REQUIRE(rep.families.size() == 4);
    REQUIRE(rep.in_sample.size() == 2);
    REQUIRE(rep.in_sample[0].size() == 4);
    for (const auto& row : rep.in_sample)
        for (const auto& cell : row) {
            CHECK(cell.mean_std >= 0.0);
            CHECK(cell.mean_rmse >= 0.0);
        }
    const std::string csv = rep.csv();
    CHECK(csv.find("scenarios,test,statistic,sQS,sS,RS,RQ") == 0);

    // replaying one seed per run collapses the run-to-run spread
    StabilityConfig fixed = cfg;
    fixed.vary_run_seed = false;
    const StabilityReport flat = stability_test(bed, fixed);
    for (const auto& row : flat.in_sample)
        for (const auto& cell : row) CHECK(cell.mean_std == doctest::Approx(0.0));
}
