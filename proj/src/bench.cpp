#include "tvcsl/bench.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>

#include "tvcsl/parallel.hpp"
#include "tvcsl/rng.hpp"
#include "tvcsl/simulate.hpp"

namespace tvcsl {

namespace {

constexpr std::uint64_t kTestSalt = 0x7E57;

}  // namespace

double emse(const HteModel& model, const MatrixXd& test_x, const VectorXd& tau_true) {
    if (test_x.rows() != tau_true.size()) {
        throw std::invalid_argument("test covariates and truths disagree in length");
    }
    double acc = 0.0;
    std::vector<double> x(test_x.cols());
    for (Eigen::Index i = 0; i < test_x.rows(); ++i) {
        for (Eigen::Index j = 0; j < test_x.cols(); ++j) x[j] = test_x(i, j);
        const double d = predict_hte(model, x) - tau_true[i];
        acc += d * d;
    }
    return acc / static_cast<double>(test_x.rows());
}

std::vector<int> propensity_subset(bool misspecified, int p) {
    if (misspecified) {
        if (p < 2) throw std::invalid_argument("misspecified propensity needs p >= 2");
        return {1};
    }
    std::vector<int> all(p);
    for (int j = 0; j < p; ++j) all[j] = j;
    return all;
}

BenchResult run_cell(const BenchCell& cell, int threads) {
    if (cell.reps < 1) throw std::invalid_argument("reps must be >= 1");
    if (cell.method != "s-lasso" && cell.method != "tv-csl") {
        throw std::invalid_argument("unknown method '" + cell.method + "'");
    }
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<double> values(cell.reps, std::nan(""));
    std::vector<std::string> errors(cell.reps);

    parallel_for(cell.reps, threads, [&](int rep) {
        try {
            SimConfig train_cfg;
            train_cfg.n = cell.n;
            train_cfg.seed = cell.base_seed + static_cast<std::uint64_t>(rep);
            train_cfg.spec = default_spec(cell.rate_floor);
            SimResult train = generate(train_cfg);

            SimConfig test_cfg = train_cfg;
            test_cfg.n = cell.test_n;
            test_cfg.seed = Rng::derive(train_cfg.seed, kTestSalt);
            SimResult test = generate(test_cfg);
            MatrixXd test_x = covariate_matrix(test.data);
            VectorXd tau_true(test.truth.size());
            for (std::size_t i = 0; i < test.truth.size(); ++i) {
                tau_true[i] = test.truth[i].tau_true;
            }

            EstimatorOptions opts;
            opts.seed = Rng::derive(train_cfg.seed, 1);
            HteModel model;
            if (cell.method == "s-lasso") {
                model = s_lasso_fit(train.data, cell.eta_basis, cell.hte_basis, opts);
            } else {
                CrossFitPlan plan =
                    make_cross_fit_plan(train.data, Rng::derive(train_cfg.seed, 2));
                model = tvcsl_fit(train.data, cell.eta_basis, cell.hte_basis,
                                  propensity_subset(cell.misspecified_propensity,
                                                    train.data.p),
                                  plan, opts);
                if (!model.converged) {
                    throw std::runtime_error("second stage did not converge");
                }
            }
            values[rep] = emse(model, test_x, tau_true);
        } catch (const std::exception& e) {
            errors[rep] = e.what();
        }
    });

    BenchResult out;
    out.cell = cell;
    for (int r = 0; r < cell.reps; ++r) {
        if (std::isnan(values[r])) {
            ++out.reps_failed;
            out.failure_messages.push_back("rep " + std::to_string(r) + ": " + errors[r]);
        } else {
            ++out.reps_ok;
            out.per_rep_emse.push_back(values[r]);
        }
    }
    if (out.reps_ok > 0) {
        double mean = 0.0;
        for (double v : out.per_rep_emse) mean += v;
        mean /= out.reps_ok;
        out.emse_mean = mean;
        if (out.reps_ok > 1) {
            double ss = 0.0;
            for (double v : out.per_rep_emse) ss += (v - mean) * (v - mean);
            out.emse_mc_se = std::sqrt(ss / (out.reps_ok - 1)) / std::sqrt(out.reps_ok);
        }
    }
    out.cell_failed = out.reps_failed * 10 > cell.reps;
    out.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

std::vector<std::string> write_bench_csvs(const std::vector<BenchResult>& results,
                                          const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::map<std::string, std::vector<const BenchResult*>> panels;
    for (const auto& r : results) {
        const std::string key = "panel_eta-" + basis_kind_name(r.cell.eta_basis.kind) +
                                "_hte-" + basis_kind_name(r.cell.hte_basis.kind) + ".csv";
        panels[key].push_back(&r);
    }
    std::vector<std::string> written;
    for (const auto& [name, rows] : panels) {
        const std::string path = (fs::path(out_dir) / name).string();
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path);
        out << "n,method,eta_basis,hte_basis,propensity,emse_mean,emse_mc_se,"
               "reps_ok,reps_failed\n";
        out.precision(10);
        for (const BenchResult* r : rows) {
            out << r->cell.n << ',' << r->cell.method << ','
                << basis_kind_name(r->cell.eta_basis.kind) << ','
                << basis_kind_name(r->cell.hte_basis.kind) << ','
                << (r->cell.misspecified_propensity ? "misspecified" : "correct") << ','
                << r->emse_mean << ',' << r->emse_mc_se << ',' << r->reps_ok << ','
                << r->reps_failed << '\n';
        }
        written.push_back(path);
    }
    return written;
}

}  // namespace tvcsl
