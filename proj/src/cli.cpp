#include "tvcsl/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "tvcsl/bench.hpp"
#include "tvcsl/estimators.hpp"
#include "tvcsl/grid.hpp"
#include "tvcsl/heart.hpp"
#include "tvcsl/io.hpp"
#include "tvcsl/manifest.hpp"
#include "tvcsl/rng.hpp"
#include "tvcsl/simulate.hpp"

namespace tvcsl {

namespace {

namespace fs = std::filesystem;

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void write_coef_csv(const std::vector<CoefRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(10);
    out << "term,coef,se,p\n";
    for (const auto& r : rows) {
        out << r.term << ',' << r.coef << ',' << r.se << ',' << r.p << '\n';
    }
}

int run_simulate(const std::vector<std::string>& argv, int n, std::uint64_t seed,
                 double rate_floor, const std::string& out_path) {
    Timer timer;
    SimConfig config;
    config.n = n;
    config.seed = seed;
    config.spec = default_spec(rate_floor);
    SimResult result = generate(config);
    write_dataset_csv(result.data, out_path);
    const std::string truth_path = out_path + ".truth.csv";
    write_truth_csv(result.truth, truth_path);

    RunManifest manifest;
    manifest.command_line = argv;
    manifest.seeds = {seed};
    std::ostringstream cfg;
    cfg << "simulate;n=" << n << ";seed=" << seed << ";rate_floor=" << rate_floor
        << ";out=" << out_path;
    manifest.config_hash = config_hash(cfg.str());
    manifest.outputs = {out_path, truth_path};
    manifest.wall_time_s = timer.seconds();
    write_manifest(manifest, manifest_path_for_file(out_path));
    std::cout << "wrote " << out_path << " and " << truth_path << "\n";
    return 0;
}

int run_fit(const std::vector<std::string>& argv, const std::string& method,
            const std::string& eta_name, const std::string& hte_name,
            const std::string& propensity, const std::string& data_path,
            std::uint64_t seed, const std::string& out_path) {
    Timer timer;
    Dataset data = read_dataset_csv(data_path);
    BasisSpec eta_spec, hte_spec;
    eta_spec.kind = parse_basis_kind(eta_name);
    hte_spec.kind = parse_basis_kind(hte_name);
    EstimatorOptions opts;
    opts.seed = Rng::derive(seed, 1);

    HteModel model;
    if (method == "s-lasso") {
        model = s_lasso_fit(data, eta_spec, hte_spec, opts);
    } else {
        CrossFitPlan plan = make_cross_fit_plan(data, Rng::derive(seed, 2));
        model = tvcsl_fit(data, eta_spec, hte_spec,
                          propensity_subset(propensity == "misspecified", data.p), plan,
                          opts);
    }
    for (const auto& w : model.warnings) std::cerr << "warning: " << w << "\n";

    nlohmann::json j;
    j["version"] = kVersion;
    j["method"] = method;
    j["eta_basis"] = eta_name;
    j["hte_basis"] = hte_name;
    j["propensity"] = propensity;
    j["seed"] = seed;
    j["data"] = data_path;
    j["n_subjects"] = data.subjects.size();
    std::vector<std::string> covs;
    for (int c : model.covariates) covs.push_back(data.column_names[c]);
    j["covariates"] = covs;
    nlohmann::json hte;
    hte["intercept"] = model.intercept;
    nlohmann::json terms = nlohmann::json::array();
    for (int k = 0; k < model.beta.size(); ++k) {
        terms.push_back({{"term", model.basis.names()[k]}, {"coef", model.beta[k]}});
    }
    hte["terms"] = std::move(terms);
    j["hte"] = std::move(hte);
    j["diagnostics"] = {{"converged", model.converged},
                        {"lambda_selected", model.lambda_selected},
                        {"second_stage_iterations", model.second_stage_iterations},
                        {"warnings", model.warnings}};
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << j.dump(2) << '\n';
    out.close();

    RunManifest manifest;
    manifest.command_line = argv;
    manifest.seeds = {seed};
    std::ostringstream cfg;
    cfg << "fit;method=" << method << ";eta=" << eta_name << ";hte=" << hte_name
        << ";propensity=" << propensity << ";data=" << data_path << ";seed=" << seed
        << ";out=" << out_path;
    manifest.config_hash = config_hash(cfg.str());
    manifest.outputs = {out_path};
    manifest.wall_time_s = timer.seconds();
    write_manifest(manifest, manifest_path_for_file(out_path));
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int run_benchmark(const std::vector<std::string>& argv, const std::string& grid_path,
                  const std::string& out_dir, int reps_override,
                  std::int64_t seed_override, int threads) {
    Timer timer;
    GridConfig config = parse_grid_file(grid_path);
    if (reps_override > 0) config.reps = reps_override;
    if (seed_override >= 0) config.base_seed = static_cast<std::uint64_t>(seed_override);
    const std::vector<BenchCell> cells = expand_grid(config);
    fs::create_directories(out_dir);

    std::vector<BenchResult> results;
    for (const auto& cell : cells) {
        std::cout << "cell n=" << cell.n << " method=" << cell.method
                  << " eta=" << basis_kind_name(cell.eta_basis.kind)
                  << " hte=" << basis_kind_name(cell.hte_basis.kind) << " propensity="
                  << (cell.misspecified_propensity ? "misspecified" : "correct")
                  << " ..." << std::flush;
        results.push_back(run_cell(cell, threads));
        const auto& r = results.back();
        std::cout << " emse=" << r.emse_mean << " (ok=" << r.reps_ok
                  << " failed=" << r.reps_failed << ", " << r.wall_time_s << "s)\n";
        for (const auto& msg : r.failure_messages) std::cerr << "warning: " << msg << "\n";
    }
    std::vector<std::string> outputs = write_bench_csvs(results, out_dir);

    nlohmann::json summary = nlohmann::json::array();
    bool any_cell_failed = false;
    for (const auto& r : results) {
        any_cell_failed = any_cell_failed || r.cell_failed;
        summary.push_back({{"n", r.cell.n},
                           {"method", r.cell.method},
                           {"eta_basis", basis_kind_name(r.cell.eta_basis.kind)},
                           {"hte_basis", basis_kind_name(r.cell.hte_basis.kind)},
                           {"propensity", r.cell.misspecified_propensity ? "misspecified"
                                                                         : "correct"},
                           {"emse_mean", r.emse_mean},
                           {"emse_mc_se", r.emse_mc_se},
                           {"per_rep_emse", r.per_rep_emse},
                           {"reps_ok", r.reps_ok},
                           {"reps_failed", r.reps_failed},
                           {"cell_failed", r.cell_failed},
                           {"wall_time_s", r.wall_time_s},
                           {"failures", r.failure_messages}});
    }
    const std::string summary_path = (fs::path(out_dir) / "summary.json").string();
    {
        std::ofstream out(summary_path);
        if (!out) throw std::runtime_error("cannot write " + summary_path);
        out << summary.dump(2) << '\n';
    }
    outputs.push_back(summary_path);

    RunManifest manifest;
    manifest.command_line = argv;
    manifest.seeds = {config.base_seed};
    std::ostringstream cfg;
    cfg << "benchmark;grid=" << grid_path << ";reps=" << config.reps
        << ";base_seed=" << config.base_seed << ";out_dir=" << out_dir;
    manifest.config_hash = config_hash(cfg.str());
    manifest.outputs = outputs;
    manifest.wall_time_s = timer.seconds();
    write_manifest(manifest, manifest_path_for_dir(out_dir));
    if (any_cell_failed) {
        std::cerr << "error: at least one cell exceeded the 10% failed-replication cap\n";
        return 1;
    }
    return 0;
}

int run_analyze_heart(const std::vector<std::string>& argv, const std::string& data_path,
                      const std::string& analysis, int reps, std::uint64_t seed,
                      const std::string& out_dir, int threads) {
    Timer timer;
    HeartIngest ingest = ingest_heart(data_path);
    for (const auto& w : ingest.warnings) std::cerr << "warning: " << w << "\n";
    fs::create_directories(out_dir);
    std::vector<std::string> outputs;

    if (analysis == "summary") {
        const std::string path = (fs::path(out_dir) / "summary.csv").string();
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path);
        out.precision(10);
        out << "variable,mean,sd\n";
        for (const auto& row : heart_summary(ingest.data)) {
            out << row.variable << ',' << row.mean << ',' << row.sd << '\n';
        }
        outputs.push_back(path);
    } else if (analysis == "table3") {
        FixedVsTvResult result = compare_fixed_vs_timevarying(ingest.data);
        const std::string fixed_path = (fs::path(out_dir) / "fixed.csv").string();
        const std::string tv_path = (fs::path(out_dir) / "time_varying.csv").string();
        write_coef_csv(result.fixed, fixed_path);
        write_coef_csv(result.time_varying, tv_path);
        outputs = {fixed_path, tv_path};
    } else {
        SemiSynthResult result = semi_synthetic_study(ingest.data, reps, seed, threads);
        const std::string path = (fs::path(out_dir) / "semisynthetic.csv").string();
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path);
        out.precision(10);
        out << "method,eta_basis,mse_mean,mse_mc_se,reps_ok,reps_failed\n";
        for (const auto& cell : result.cells) {
            out << cell.method << ',' << basis_kind_name(cell.eta_basis) << ','
                << cell.mse_mean << ',' << cell.mse_mc_se << ',' << cell.reps_ok << ','
                << cell.reps_failed << '\n';
            for (const auto& msg : cell.failure_messages) {
                std::cerr << "warning: " << cell.method << "/"
                          << basis_kind_name(cell.eta_basis) << " " << msg << "\n";
            }
        }
        outputs.push_back(path);
        std::cout << "adoption model: rate = " << result.alpha0 << " + " << result.alpha_year
                  << " * year\n";
    }

    RunManifest manifest;
    manifest.command_line = argv;
    if (analysis == "semisynthetic") manifest.seeds = {seed};
    std::ostringstream cfg;
    cfg << "analyze-heart;data=" << data_path << ";analysis=" << analysis
        << ";reps=" << reps << ";seed=" << seed << ";out=" << out_dir;
    manifest.config_hash = config_hash(cfg.str());
    manifest.outputs = outputs;
    manifest.wall_time_s = timer.seconds();
    write_manifest(manifest, manifest_path_for_dir(out_dir));
    for (const auto& p : outputs) std::cout << "wrote " << p << "\n";
    return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
    CLI::App app{"Heterogeneous treatment effects for time-to-event outcomes under "
                 "staggered adoption"};
    app.require_subcommand(1);
    int threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;

    auto* sim = app.add_subcommand("simulate", "Draw a synthetic dataset with ground truth");
    int sim_n = 0;
    std::uint64_t sim_seed = 0;
    double sim_rate_floor = 0.05;
    std::string sim_out;
    sim->add_option("--n", sim_n, "Number of subjects")->required()->check(CLI::PositiveNumber);
    sim->add_option("--seed", sim_seed, "RNG seed")->required();
    sim->add_option("--rate-floor", sim_rate_floor, "Adoption rate floor")
        ->check(CLI::PositiveNumber);
    sim->add_option("--out", sim_out, "Output dataset CSV path")->required();

    auto* fit = app.add_subcommand("fit", "Fit a heterogeneous effect model");
    std::string fit_method, fit_eta = "linear", fit_hte = "linear", fit_prop = "correct";
    std::string fit_data, fit_out;
    std::uint64_t fit_seed = 0;
    fit->add_option("--method", fit_method, "Estimator")
        ->required()
        ->check(CLI::IsMember({"s-lasso", "tv-csl"}));
    fit->add_option("--eta-basis", fit_eta, "Baseline nuisance basis")
        ->check(CLI::IsMember({"linear", "complex"}));
    fit->add_option("--hte-basis", fit_hte, "Treatment effect basis")
        ->check(CLI::IsMember({"linear", "complex"}));
    fit->add_option("--propensity", fit_prop, "Adoption model specification")
        ->check(CLI::IsMember({"correct", "misspecified"}));
    fit->add_option("--data", fit_data, "Input dataset CSV")->required();
    fit->add_option("--seed", fit_seed, "RNG seed")->required();
    fit->add_option("--out", fit_out, "Output JSON path")->required();

    auto* bench = app.add_subcommand("benchmark", "Run a Monte Carlo comparison grid");
    std::string bench_grid, bench_out_dir;
    int bench_reps = 0;
    std::int64_t bench_seed = -1;
    bench->add_option("--grid", bench_grid, "Grid description file (TOML)")->required();
    bench->add_option("--out-dir", bench_out_dir, "Output directory")->required();
    bench->add_option("--reps", bench_reps, "Override replication count")
        ->check(CLI::PositiveNumber);
    bench->add_option("--base-seed", bench_seed, "Override base seed")
        ->check(CLI::NonNegativeNumber);
    bench->add_option("--threads", threads, "Worker thread cap")->check(CLI::PositiveNumber);

    auto* heart = app.add_subcommand("analyze-heart", "Transplant registry analyses");
    std::string heart_data, heart_analysis, heart_out;
    int heart_reps = 100;
    std::uint64_t heart_seed = 1;
    heart->add_option("--data", heart_data, "Registry CSV")->required();
    heart->add_option("--analysis", heart_analysis, "Which analysis to run")
        ->required()
        ->check(CLI::IsMember({"summary", "table3", "semisynthetic"}));
    heart->add_option("--reps", heart_reps, "Semi-synthetic replications")
        ->check(CLI::PositiveNumber);
    heart->add_option("--seed", heart_seed, "RNG seed");
    heart->add_option("--out", heart_out, "Output directory")->required();
    heart->add_option("--threads", threads, "Worker thread cap")->check(CLI::PositiveNumber);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(sim)) {
            return run_simulate(args, sim_n, sim_seed, sim_rate_floor, sim_out);
        }
        if (app.got_subcommand(fit)) {
            return run_fit(args, fit_method, fit_eta, fit_hte, fit_prop, fit_data,
                           fit_seed, fit_out);
        }
        if (app.got_subcommand(bench)) {
            return run_benchmark(args, bench_grid, bench_out_dir, bench_reps, bench_seed,
                                 threads);
        }
        return run_analyze_heart(args, heart_data, heart_analysis, heart_reps, heart_seed,
                                 heart_out, threads);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace tvcsl
