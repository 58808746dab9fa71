#include "lotflow/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "lotflow/parallel.hpp"
#include "lotflow/sdp.hpp"

namespace lotflow {

namespace {

constexpr double kMapeGuard = 1e-9;

double mean_of(std::span<const double> xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean_of(xs);
    double acc = 0.0;
    for (double x : xs) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

}  // namespace

std::vector<BenchCase> build_testbed() {
    const double levels_B0[] = {0, 20};
    const double levels_p[] = {5, 10};
    const double levels_a[] = {10, 15};
    const double levels_v[] = {1, 2};
    const double levels_pi[] = {2, 4};
    const double levels_b[] = {0.05, 0.2};

    std::vector<BenchCase> bed;
    bed.reserve(640);
    int index = 0;
    for (const auto& pattern : pattern_names()) {
        const std::vector<double> means = pattern_means(pattern);
        for (double B0 : levels_B0)
            for (double p : levels_p)
                for (double a : levels_a)
                    for (double v : levels_v)
                        for (double pi : levels_pi)
                            for (double b : levels_b) {
                                Instance inst;
                                inst.T = 6;
                                inst.B0 = B0;
                                inst.I0 = 0;
                                inst.p = p;
                                inst.a = a;
                                inst.v = v;
                                inst.h = 1;
                                inst.pi = pi;
                                inst.b = b;
                                for (double mu : means)
                                    inst.demand.push_back(DemandModel::poisson(mu));
                                bed.push_back({index++, pattern, std::move(inst)});
                            }
    }
    return bed;
}

double rmse(std::span<const double> optimal, std::span<const double> achieved) {
    if (optimal.size() != achieved.size() || optimal.empty())
        throw std::invalid_argument("rmse: lists must be nonempty and equal length");
    double acc = 0.0;
    for (std::size_t i = 0; i < optimal.size(); ++i) {
        const double e = optimal[i] - achieved[i];
        acc += e * e;
    }
    return std::sqrt(acc / static_cast<double>(optimal.size()));
}

MapeResult mape(std::span<const double> optimal, std::span<const double> achieved) {
    if (optimal.size() != achieved.size() || optimal.empty())
        throw std::invalid_argument("mape: lists must be nonempty and equal length");
    MapeResult res;
    double acc = 0.0;
    int used = 0;
    for (std::size_t i = 0; i < optimal.size(); ++i) {
        if (std::abs(optimal[i]) < kMapeGuard) {
            ++res.excluded;
            continue;
        }
        acc += std::abs(optimal[i] - achieved[i]) / std::abs(optimal[i]);
        ++used;
    }
    res.percent = used > 0 ? 100.0 * acc / used : 0.0;
    return res;
}

double ci_halfwidth(std::span<const double> sample) {
    if (sample.size() < 2) throw std::invalid_argument("ci_halfwidth: need n >= 2");
    return 1.96 * sample_std(sample) / std::sqrt(static_cast<double>(sample.size()));
}

std::pair<double, double> rmse_ci(std::span<const double> squared_errors) {
    if (squared_errors.size() < 2) throw std::invalid_argument("rmse_ci: need n >= 2");
    const double m = mean_of(squared_errors);
    const double hw = 1.96 * sample_std(squared_errors) /
                      std::sqrt(static_cast<double>(squared_errors.size()));
    return {std::sqrt(std::max(0.0, m - hw)), std::sqrt(m + hw)};
}

namespace {

PolicyFamily method_family(const std::string& method) {
    if (method == "GA-sQS") return PolicyFamily::SQS;
    if (method == "GA-sS") return PolicyFamily::SS;
    if (method == "GA-RS") return PolicyFamily::RS;
    if (method == "GA-RQ") return PolicyFamily::RQ;
    throw std::invalid_argument("unknown GA method: " + method);
}

CaseResult run_case(const BenchCase& bc, const BenchConfig& cfg) {
    CaseResult res;
    res.case_index = bc.index;
    res.pattern = bc.pattern;
    const auto timed = [&](const std::string& method, const auto& fn) {
        const auto start = std::chrono::steady_clock::now();
        res.achieved[method] = fn();
        res.seconds[method] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    try {
        SdpOptions so;
        so.poisson_eps = cfg.poisson_eps;
        so.state_cap = cfg.state_cap;
        so.threads = 1;
        const SdpSolution sol = solve(bc.inst, so);
        res.optimal = sol.value;

        const ScenarioSet bench = generate_scenarios(
            bc.inst.demand, cfg.eval_scenarios,
            mix_seed(cfg.seed, static_cast<std::uint64_t>(bc.index), 1), cfg.poisson_eps);

        for (const auto& method : cfg.methods) {
            if (method == "SDP") {
                timed(method, [&] { return sol.value; });
            } else if (method == "Sim-opt") {
                timed(method, [&] {
                    HeuristicConfig hc = cfg.heuristic;
                    hc.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(bc.index), 2);
                    hc.poisson_eps = cfg.poisson_eps;
                    hc.threads = 1;
                    return run_heuristic(bc.inst, hc, bench).mean;
                });
            } else {
                const PolicyFamily family = method_family(method);
                const auto it = cfg.ga_restarts.find(method);
                const int restarts = it == cfg.ga_restarts.end() ? 1 : it->second;
                timed(method, [&] {
                    TuneResult best;
                    best.train_fitness = -std::numeric_limits<double>::infinity();
                    for (int r = 0; r < restarts; ++r) {
                        GaConfig g = cfg.ga;
                        g.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(bc.index),
                                          10 + static_cast<std::uint64_t>(family) +
                                              100 * static_cast<std::uint64_t>(r));
                        g.poisson_eps = cfg.poisson_eps;
                        g.threads = 1;
                        TuneResult run = tune(bc.inst, family, g, &bench);
                        if (run.train_fitness > best.train_fitness) best = std::move(run);
                    }
                    return best.benchmark.mean;
                });
            }
        }
    } catch (const std::exception& e) {
        res.failed = true;
        res.error = e.what();
    }
    return res;
}

struct Group {
    std::string group;
    std::string level;
    std::vector<const CaseResult*> cases;
};

std::string level_str(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
}

std::vector<Group> make_groups(std::span<const BenchCase> bed,
                               const std::vector<CaseResult>& results) {
    // Every case falls into exactly one level per grouping dimension.
    std::vector<std::pair<std::string, std::function<std::string(const BenchCase&)>>> dims = {
        {"Ini capital", [](const BenchCase& c) { return level_str(c.inst.B0); }},
        {"Interest rate", [](const BenchCase& c) { return level_str(c.inst.b); }},
        {"Selling price", [](const BenchCase& c) { return level_str(c.inst.p); }},
        {"Fixed order cost", [](const BenchCase& c) { return level_str(c.inst.a); }},
        {"Vari order cost", [](const BenchCase& c) { return level_str(c.inst.v); }},
        {"Penalty cost", [](const BenchCase& c) { return level_str(c.inst.pi); }},
        {"Demand pattern", [](const BenchCase& c) { return c.pattern; }},
    };
    std::vector<Group> groups;
    for (const auto& [name, keyfn] : dims) {
        std::vector<std::string> levels;
        for (const auto& bc : bed) {
            const std::string lv = keyfn(bc);
            if (std::find(levels.begin(), levels.end(), lv) == levels.end()) levels.push_back(lv);
        }
        std::sort(levels.begin(), levels.end());
        for (const auto& lv : levels) {
            Group g{name, lv, {}};
            for (std::size_t i = 0; i < bed.size(); ++i)
                if (!results[i].failed && keyfn(bed[i]) == lv) g.cases.push_back(&results[i]);
            groups.push_back(std::move(g));
        }
    }
    Group general{"General", "all", {}};
    for (const auto& r : results)
        if (!r.failed) general.cases.push_back(&r);
    groups.push_back(std::move(general));
    return groups;
}

}  // namespace

PivotReport run_pivot(std::span<const BenchCase> bed, const BenchConfig& cfg) {
    cfg.ga.validate();
    cfg.heuristic.validate();
    PivotReport report;
    report.methods = cfg.methods;
    report.results.resize(bed.size());
    parallel_chunks(bed.size(), cfg.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) report.results[i] = run_case(bed[i], cfg);
    });
    report.bed_.assign(bed.begin(), bed.end());
    return report;
}

std::vector<PivotRow> PivotReport::rmse_rows() const {
    std::vector<PivotRow> rows;
    for (const auto& g : make_groups(bed_, results)) {
        PivotRow row{g.group, g.level, static_cast<int>(g.cases.size()), {}, {}, {}};
        for (const auto& method : methods) {
            std::vector<double> opt, ach, sq;
            for (const auto* r : g.cases) {
                opt.push_back(r->optimal);
                ach.push_back(r->achieved.at(method));
                const double e = r->optimal - r->achieved.at(method);
                sq.push_back(e * e);
            }
            if (opt.empty()) continue;
            row.metric[method] = rmse(opt, ach);
            if (sq.size() >= 2) row.ci[method] = rmse_ci(sq);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<PivotRow> PivotReport::mape_rows() const {
    std::vector<PivotRow> rows;
    for (const auto& g : make_groups(bed_, results)) {
        PivotRow row{g.group, g.level, static_cast<int>(g.cases.size()), {}, {}, {}};
        for (const auto& method : methods) {
            std::vector<double> opt, ach, pct;
            for (const auto* r : g.cases) {
                opt.push_back(r->optimal);
                ach.push_back(r->achieved.at(method));
                if (std::abs(r->optimal) >= kMapeGuard)
                    pct.push_back(100.0 * std::abs(r->optimal - r->achieved.at(method)) /
                                  std::abs(r->optimal));
            }
            if (opt.empty()) continue;
            const MapeResult m = mape(opt, ach);
            row.metric[method] = m.percent;
            row.excluded[method] = m.excluded;
            if (pct.size() >= 2) {
                const double hw = ci_halfwidth(pct);
                row.ci[method] = {m.percent - hw, m.percent + hw};
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

std::string pivot_csv(const std::vector<PivotRow>& rows, const std::vector<std::string>& methods,
                      int decimals) {
    std::ostringstream os;
    os << "group,level,cases";
    for (const auto& m : methods) os << ',' << m;
    os << '\n';
    os << std::fixed << std::setprecision(decimals);
    for (const auto& row : rows) {
        os << row.group << ',' << row.level << ',' << row.cases;
        for (const auto& m : methods) {
            os << ',';
            const auto it = row.metric.find(m);
            if (it != row.metric.end()) os << it->second;
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace

std::string PivotReport::rmse_csv() const { return pivot_csv(rmse_rows(), methods, 4); }

std::string PivotReport::mape_csv() const { return pivot_csv(mape_rows(), methods, 2); }

std::string PivotReport::ci_csv() const {
    std::ostringstream os;
    os << "metric,group,level,cases";
    for (const auto& m : methods) os << ',' << m << "_lo," << m << "_hi";
    os << '\n';
    os << std::fixed << std::setprecision(4);
    const auto emit = [&](const char* metric, const std::vector<PivotRow>& rows) {
        for (const auto& row : rows) {
            os << metric << ',' << row.group << ',' << row.level << ',' << row.cases;
            for (const auto& m : methods) {
                const auto it = row.ci.find(m);
                if (it != row.ci.end()) os << ',' << it->second.first << ',' << it->second.second;
                else os << ",,";
            }
            os << '\n';
        }
    };
    emit("RMSE", rmse_rows());
    emit("MAPE", mape_rows());
    return os.str();
}

std::string PivotReport::per_case_csv() const {
    std::ostringstream os;
    os << "case,pattern,B0,p,a,v,pi,b,optimal";
    for (const auto& m : methods) os << ',' << m;
    os << ",failed,error\n";
    os << std::fixed << std::setprecision(4);
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        const auto& inst = bed_[i].inst;
        os << r.case_index << ',' << r.pattern << ',' << inst.B0 << ',' << inst.p << ','
           << inst.a << ',' << inst.v << ',' << inst.pi << ',' << inst.b << ',' << r.optimal;
        for (const auto& m : methods) {
            os << ',';
            const auto it = r.achieved.find(m);
            if (it != r.achieved.end()) os << it->second;
        }
        os << ',' << (r.failed ? 1 : 0) << ',' << r.error << '\n';
    }
    return os.str();
}

int PivotReport::failed_cases() const {
    int n = 0;
    for (const auto& r : results)
        if (r.failed) ++n;
    return n;
}

std::vector<BenchCase> sample_cases(std::span<const BenchCase> bed, int k, std::uint64_t seed) {
    if (k < 0 || k > static_cast<int>(bed.size()))
        throw std::invalid_argument("sample_cases: k out of range");
    std::vector<std::size_t> idx(bed.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(k));
    std::sort(idx.begin(), idx.end());
    std::vector<BenchCase> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(bed[i]);
    return out;
}

StabilityReport stability_test(std::span<const BenchCase> bed, const StabilityConfig& cfg) {
    cfg.ga.validate();
    const std::vector<BenchCase> cases = sample_cases(bed, cfg.num_cases, mix_seed(cfg.seed, 7, 1));
    const std::vector<PolicyFamily> families = {PolicyFamily::SQS, PolicyFamily::SS,
                                                PolicyFamily::RS, PolicyFamily::RQ};

    struct CaseData {
        double optimal = 0.0;
        ScenarioSet bench;
    };
    std::vector<CaseData> data(cases.size());
    parallel_chunks(cases.size(), cfg.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t c = begin; c < end; ++c) {
            SdpOptions so;
            so.poisson_eps = cfg.poisson_eps;
            so.state_cap = cfg.state_cap;
            so.threads = 1;
            data[c].optimal = solve(cases[c].inst, so).value;
            data[c].bench = generate_scenarios(
                cases[c].inst.demand, cfg.eval_scenarios,
                mix_seed(cfg.seed, static_cast<std::uint64_t>(cases[c].index), 2),
                cfg.poisson_eps);
        }
    });

    StabilityReport report;
    report.scenario_sizes = cfg.scenario_sizes;
    report.families = families;
    report.in_sample.assign(cfg.scenario_sizes.size(),
                            std::vector<StabilityCell>(families.size()));
    report.out_sample = report.in_sample;

    // Flattened (case, size, family, run) tuning jobs.
    const std::size_t n_sizes = cfg.scenario_sizes.size();
    const std::size_t n_fams = families.size();
    const std::size_t n_runs = static_cast<std::size_t>(cfg.runs);
    const std::size_t jobs = cases.size() * n_sizes * n_fams * n_runs;
    std::vector<double> fit_in(jobs, 0.0), fit_out(jobs, 0.0);
    parallel_chunks(jobs, cfg.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            const std::size_t run = j % n_runs;
            const std::size_t fam = (j / n_runs) % n_fams;
            const std::size_t size_i = (j / (n_runs * n_fams)) % n_sizes;
            const std::size_t c = j / (n_runs * n_fams * n_sizes);
            GaConfig g = cfg.ga;
            g.train_scenarios = cfg.scenario_sizes[size_i];
            g.poisson_eps = cfg.poisson_eps;
            g.threads = 1;
            const std::uint64_t run_tag = cfg.vary_run_seed ? run : 0;
            g.seed = mix_seed(cfg.seed + 1000 + static_cast<std::uint64_t>(cases[c].index),
                              (size_i << 8) | fam, run_tag);
            const TuneResult r = tune(cases[c].inst, families[fam], g, &data[c].bench);
            fit_in[j] = r.train_fitness;
            fit_out[j] = r.benchmark.mean;
        }
    });

    for (std::size_t size_i = 0; size_i < n_sizes; ++size_i) {
        for (std::size_t fam = 0; fam < n_fams; ++fam) {
            double std_in = 0, rmse_in = 0, std_out = 0, rmse_out = 0;
            for (std::size_t c = 0; c < cases.size(); ++c) {
                std::vector<double> in(n_runs), out(n_runs);
                for (std::size_t run = 0; run < n_runs; ++run) {
                    const std::size_t j =
                        ((c * n_sizes + size_i) * n_fams + fam) * n_runs + run;
                    in[run] = fit_in[j];
                    out[run] = fit_out[j];
                }
                const auto rmse_vs_opt = [&](std::span<const double> xs) {
                    double acc = 0.0;
                    for (double x : xs) acc += (x - data[c].optimal) * (x - data[c].optimal);
                    return std::sqrt(acc / static_cast<double>(xs.size()));
                };
                std_in += sample_std(in);
                std_out += sample_std(out);
                rmse_in += rmse_vs_opt(in);
                rmse_out += rmse_vs_opt(out);
            }
            const double nc = static_cast<double>(cases.size());
            report.in_sample[size_i][fam] = {std_in / nc, rmse_in / nc};
            report.out_sample[size_i][fam] = {std_out / nc, rmse_out / nc};
        }
    }
    return report;
}

std::string StabilityReport::csv() const {
    std::ostringstream os;
    os << "scenarios,test,statistic,sQS,sS,RS,RQ\n";
    os << std::fixed << std::setprecision(4);
    for (std::size_t s = 0; s < scenario_sizes.size(); ++s) {
        const auto emit = [&](const char* test, const char* stat,
                              const std::vector<StabilityCell>& cells, bool use_std) {
            os << scenario_sizes[s] << ',' << test << ',' << stat;
            for (const auto& cell : cells) os << ',' << (use_std ? cell.mean_std : cell.mean_rmse);
            os << '\n';
        };
        emit("in", "STD", in_sample[s], true);
        emit("in", "RMSE", in_sample[s], false);
        emit("out", "STD", out_sample[s], true);
        emit("out", "RMSE", out_sample[s], false);
    }
    return os.str();
}

}  // namespace lotflow
