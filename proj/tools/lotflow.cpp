// lotflow: solvers and benchmark harness for capital-constrained stochastic
// lot sizing with business overdraft.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lotflow/bench.hpp"
#include "lotflow/core.hpp"
#include "lotflow/cycle.hpp"
#include "lotflow/ga.hpp"
#include "lotflow/io.hpp"
#include "lotflow/policy.hpp"
#include "lotflow/sdp.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lotflow;

namespace {

constexpr const char* kVersion = "lotflow 0.1.0";

constexpr int kExitSchema = 2;
constexpr int kExitStateExplosion = 3;
constexpr int kExitUnwritable = 4;

std::string money_str(double x) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << round_money(x);
    return os.str();
}

std::vector<std::vector<int>> load_paths(const fs::path& file, int T) {
    std::ifstream in(file);
    if (!in) throw SchemaError("cannot open path file: " + file.string());
    std::vector<std::vector<int>> paths;
    std::string line;
    while (std::getline(in, line)) {
        for (auto& c : line)
            if (c == ',') c = ' ';
        std::istringstream is(line);
        std::vector<int> path;
        int d;
        while (is >> d) path.push_back(d);
        if (path.empty()) continue;
        if (static_cast<int>(path.size()) != T)
            throw SchemaError("path length " + std::to_string(path.size()) +
                              " != horizon " + std::to_string(T));
        paths.push_back(std::move(path));
    }
    return paths;
}

void write_manifest(const fs::path& file, const std::string& command, const json& params,
                    const std::vector<std::string>& outputs) {
    json m;
    m["tool"] = kVersion;
    m["command"] = command;
    m["params"] = params;
    m["outputs"] = outputs;
    write_text_file(file, m.dump(2) + "\n");
}

void add_ga_options(CLI::App* cmd, GaConfig& ga) {
    cmd->add_option("--population", ga.population, "GA population size");
    cmd->add_option("--subpopulations", ga.subpopulations, "number of subpopulations");
    cmd->add_option("--elite", ga.elite, "elite survivors per generation");
    cmd->add_option("--crossover-rate", ga.crossover_rate, "crossover fraction");
    cmd->add_option("--sigma0", ga.sigma0, "initial mutation sigma");
    cmd->add_option("--max-generations", ga.max_generations, "generation cap");
    cmd->add_option("--tolerance", ga.tolerance, "stall tolerance");
    cmd->add_option("--stall-window", ga.stall_window, "stall window (generations)");
    cmd->add_option("--migration-interval", ga.migration_interval, "generations between migrations");
    cmd->add_option("--migration-fraction", ga.migration_fraction, "migrating fraction");
    cmd->add_option("--train-scenarios", ga.train_scenarios, "training scenario count");
}

json ga_json(const GaConfig& g) {
    return json{{"population", g.population},
                {"subpopulations", g.subpopulations},
                {"elite", g.elite},
                {"crossover_rate", g.crossover_rate},
                {"sigma0", g.sigma0},
                {"max_generations", g.max_generations},
                {"tolerance", g.tolerance},
                {"stall_window", g.stall_window},
                {"migration_interval", g.migration_interval},
                {"migration_fraction", g.migration_fraction},
                {"train_scenarios", g.train_scenarios},
                {"seed", g.seed}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic lot sizing with capital flow and business overdraft"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--threads", threads, "worker thread cap (0 = auto)")->envname("LOTFLOW_THREADS");

    // sdp
    auto* sdp_cmd = app.add_subcommand("sdp", "solve an instance by dynamic programming");
    std::string sdp_instance, sdp_replay, sdp_dump, sdp_method = "auto";
    double sdp_eps = 1e-6, sdp_grid_step = 0.01;
    std::size_t sdp_cap = 50'000'000;
    sdp_cmd->add_option("instance", sdp_instance, "instance JSON file")->required();
    sdp_cmd->add_option("--replay", sdp_replay, "file of demand paths to replay");
    sdp_cmd->add_option("--dump", sdp_dump, "write the action-table dump here");
    sdp_cmd->add_option("--eps", sdp_eps, "Poisson truncation tail mass");
    sdp_cmd->add_option("--state-cap", sdp_cap, "reachable-state budget");
    sdp_cmd->add_option("--method", sdp_method, "auto|exact|grid")
        ->check(CLI::IsMember({"auto", "exact", "grid"}));
    sdp_cmd->add_option("--grid-step", sdp_grid_step, "capital lattice step for the grid method");

    // tune
    auto* tune_cmd = app.add_subcommand("tune", "fit a policy family with the genetic algorithm");
    std::string tune_instance, tune_policy, tune_out, tune_report;
    int tune_bench_n = 100000;
    GaConfig ga;
    tune_cmd->add_option("instance", tune_instance, "instance JSON file")->required();
    tune_cmd->add_option("--policy", tune_policy, "rq|rs|ss|sqs")->required();
    tune_cmd->add_option("--seed", ga.seed, "RNG seed");
    tune_cmd->add_option("--scenarios", tune_bench_n, "benchmark scenario count");
    tune_cmd->add_option("--out", tune_out, "write the tuned policy here");
    tune_cmd->add_option("--report", tune_report, "write the evaluation CSV here");
    add_ga_options(tune_cmd, ga);

    // heuristic
    auto* heur_cmd = app.add_subcommand("heuristic", "replenishment-cycle simulation heuristic");
    std::string heur_instance, heur_paths, heur_replan = "cycle";
    HeuristicConfig hc;
    int heur_bench_n = 100000;
    heur_cmd->add_option("instance", heur_instance, "instance JSON file")->required();
    heur_cmd->add_option("--samples", hc.samples, "Monte-Carlo samples per cycle evaluation");
    heur_cmd->add_option("--step", hc.step, "line-search step");
    heur_cmd->add_option("--replan", heur_replan, "cycle|period")
        ->check(CLI::IsMember({"cycle", "period"}));
    heur_cmd->add_option("--seed", hc.seed, "RNG seed");
    heur_cmd->add_option("--scenarios", heur_bench_n, "evaluation scenario count");
    heur_cmd->add_option("--paths", heur_paths, "file of demand paths to replay");

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "evaluate a policy file by simulation");
    std::string sim_instance, sim_policy;
    int sim_n = 100000;
    std::uint64_t sim_seed = 0;
    sim_cmd->add_option("instance", sim_instance, "instance JSON file")->required();
    sim_cmd->add_option("--policy-file", sim_policy, "policy JSON file")->required();
    sim_cmd->add_option("--scenarios", sim_n, "scenario count");
    sim_cmd->add_option("--seed", sim_seed, "RNG seed");

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "run the 640-case benchmark study");
    BenchConfig bc;
    std::string bench_out = "bench_out";
    int bench_subset = 640;
    bench_cmd->add_option("--scenarios", bc.eval_scenarios, "evaluation scenario count");
    bench_cmd->add_option("--seed", bc.seed, "RNG seed");
    bench_cmd->add_option("--out", bench_out, "output directory");
    bench_cmd->add_option("--subset", bench_subset, "seeded case subsample size");
    bench_cmd->add_option("--heuristic-samples", bc.heuristic.samples,
                          "Monte-Carlo samples per heuristic cycle evaluation");
    add_ga_options(bench_cmd, bc.ga);

    // stability
    auto* stab_cmd = app.add_subcommand("stability", "GA in-/out-of-sample stability study");
    StabilityConfig sc;
    std::string stab_out = "stability.csv";
    stab_cmd->add_option("--cases", sc.num_cases, "number of sampled cases");
    stab_cmd->add_option("--runs", sc.runs, "GA runs per case and size");
    stab_cmd->add_option("--sizes", sc.scenario_sizes, "training scenario sizes");
    stab_cmd->add_option("--scenarios", sc.eval_scenarios, "benchmark scenario count");
    stab_cmd->add_option("--seed", sc.seed, "RNG seed");
    stab_cmd->add_option("--out", stab_out, "output CSV path");
    add_ga_options(stab_cmd, sc.ga);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitSchema;
    }

    try {
        if (*sdp_cmd) {
            const Instance inst = load_instance(sdp_instance);
            SdpOptions opts;
            opts.poisson_eps = sdp_eps;
            opts.state_cap = sdp_cap;
            opts.threads = threads;
            opts.grid_step = sdp_grid_step;
            if (sdp_method == "exact") opts.method = SdpMethod::Exact;
            if (sdp_method == "grid") opts.method = SdpMethod::Grid;
            const SdpSolution sol = solve(inst, opts);
            std::cout << money_str(sol.value) << "\n";
            if (!sdp_dump.empty()) write_text_file(sdp_dump, solution_dump(sol));
            if (!sdp_replay.empty()) {
                for (const auto& path : load_paths(sdp_replay, inst.T)) {
                    const auto [orders, inc] = replay(sol, inst, path);
                    std::cout << "D=";
                    for (std::size_t t = 0; t < path.size(); ++t)
                        std::cout << (t ? "," : "") << path[t];
                    std::cout << " Q=";
                    for (std::size_t t = 0; t < orders.size(); ++t)
                        std::cout << (t ? "," : "") << orders[t];
                    std::cout << " increment=" << money_str(inc) << "\n";
                }
            }
        } else if (*tune_cmd) {
            const Instance inst = load_instance(tune_instance);
            const PolicyFamily family = parse_policy_family(tune_policy);
            ga.threads = threads;
            const ScenarioSet bench =
                generate_scenarios(inst.demand, tune_bench_n, mix_seed(ga.seed, 0xbe, 0xc4));
            const TuneResult result = tune(inst, family, ga, &bench);
            std::cout << "train_fitness=" << money_str(result.train_fitness)
                      << " generations=" << result.generations << "\n";
            std::cout << "benchmark mean=" << money_str(result.benchmark.mean)
                      << " stderr=" << money_str(result.benchmark.stderr_mean)
                      << " ci95=" << money_str(result.benchmark.ci95)
                      << " n=" << result.benchmark.n << "\n";
            if (!tune_out.empty()) write_text_file(tune_out, policy_to_json(result.policy));
            if (!tune_report.empty())
                write_text_file(tune_report, "mean,stderr,ci95,n,seed\n" +
                                                 result.benchmark.csv_row(ga.seed) + "\n");
        } else if (*heur_cmd) {
            const Instance inst = load_instance(heur_instance);
            hc.replan = heur_replan == "period" ? ReplanMode::EveryPeriod : ReplanMode::CycleCommit;
            hc.threads = threads;
            const ScenarioSet eval_set =
                generate_scenarios(inst.demand, heur_bench_n, mix_seed(hc.seed, 0x5e, 0xa1));
            const EvalReport rep = run_heuristic(inst, hc, eval_set);
            std::cout << "mean=" << money_str(rep.mean) << " stderr=" << money_str(rep.stderr_mean)
                      << " ci95=" << money_str(rep.ci95) << " n=" << rep.n << "\n";
            if (!heur_paths.empty()) {
                for (const auto& path : load_paths(heur_paths, inst.T)) {
                    const auto [orders, inc] = heuristic_replay(inst, hc, path);
                    std::cout << "D=";
                    for (std::size_t t = 0; t < path.size(); ++t)
                        std::cout << (t ? "," : "") << path[t];
                    std::cout << " Q=";
                    for (std::size_t t = 0; t < orders.size(); ++t)
                        std::cout << (t ? "," : "") << orders[t];
                    std::cout << " increment=" << money_str(inc) << "\n";
                }
            }
        } else if (*sim_cmd) {
            const Instance inst = load_instance(sim_instance);
            const Policy policy = load_policy(sim_policy);
            const ScenarioSet set =
                generate_scenarios(inst.demand, sim_n, mix_seed(sim_seed, 0xbe, 0xc4));
            const EvalReport rep = evaluate(inst, policy, set, threads);
            std::cout << "mean=" << money_str(rep.mean) << " stderr=" << money_str(rep.stderr_mean)
                      << " ci95=" << money_str(rep.ci95) << " n=" << rep.n << "\n";
        } else if (*bench_cmd) {
            bc.threads = threads;
            std::error_code ec;
            fs::create_directories(bench_out, ec);
            {
                std::ofstream probe(fs::path(bench_out) / ".write_probe");
                if (!probe) {
                    std::cerr << "error: output directory is not writable: " << bench_out << "\n";
                    return kExitUnwritable;
                }
            }
            fs::remove(fs::path(bench_out) / ".write_probe", ec);

            const std::vector<BenchCase> bed = build_testbed();
            const std::vector<BenchCase> subset =
                bench_subset >= static_cast<int>(bed.size())
                    ? bed
                    : sample_cases(bed, bench_subset, mix_seed(bc.seed, 0x5b, 0x5e));
            const PivotReport report = run_pivot(subset, bc);
            const fs::path dir(bench_out);
            write_text_file(dir / "pivot_rmse.csv", report.rmse_csv());
            write_text_file(dir / "pivot_mape.csv", report.mape_csv());
            write_text_file(dir / "pivot_ci.csv", report.ci_csv());
            write_text_file(dir / "per_case.csv", report.per_case_csv());
            write_manifest(dir / "manifest.json", "bench",
                           json{{"scenarios", bc.eval_scenarios},
                                {"seed", bc.seed},
                                {"subset", bench_subset},
                                {"heuristic_samples", bc.heuristic.samples},
                                {"ga", ga_json(bc.ga)}},
                           {"pivot_rmse.csv", "pivot_mape.csv", "pivot_ci.csv", "per_case.csv"});
            if (report.failed_cases() > 0) {
                std::cerr << report.failed_cases() << " of " << report.results.size()
                          << " cases failed\n";
                return 1;
            }
            std::cout << "wrote " << (dir / "pivot_rmse.csv").string() << " and siblings\n";
        } else if (*stab_cmd) {
            sc.threads = threads;
            const std::vector<BenchCase> bed = build_testbed();
            const StabilityReport report = stability_test(bed, sc);
            write_text_file(stab_out, report.csv());
            write_manifest(fs::path(stab_out).replace_extension(".manifest.json"), "stability",
                           json{{"cases", sc.num_cases},
                                {"runs", sc.runs},
                                {"sizes", sc.scenario_sizes},
                                {"scenarios", sc.eval_scenarios},
                                {"seed", sc.seed},
                                {"ga", ga_json(sc.ga)}},
                           {stab_out});
            std::cout << "wrote " << stab_out << "\n";
        }
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSchema;
    } catch (const StateExplosionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitStateExplosion;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSchema;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
