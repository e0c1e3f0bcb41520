#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tvcsl/basis.hpp"
#include "tvcsl/estimators.hpp"
#include "tvcsl/types.hpp"

namespace tvcsl {

struct BenchCell {
    std::string method;  // "s-lasso" | "tv-csl"
    BasisSpec eta_basis;
    BasisSpec hte_basis;
    bool misspecified_propensity = false;
    int n = 0;
    int reps = 1;
    std::uint64_t base_seed = 0;
    int test_n = 2000;
    double rate_floor = 0.05;
};

struct BenchResult {
    BenchCell cell;
    double emse_mean = 0.0;
    double emse_mc_se = 0.0;
    std::vector<double> per_rep_emse;  // successful replications, in rep order
    int reps_ok = 0;
    int reps_failed = 0;
    bool cell_failed = false;  // more than 10% failed replications
    double wall_time_s = 0.0;
    std::vector<std::string> failure_messages;
};

// Mean squared prediction error of tau_hat over a test covariate sample.
double emse(const HteModel& model, const MatrixXd& test_x, const VectorXd& tau_true);

// Replicates generate-fit-score with train seed base_seed + rep and an
// independently seeded test set per replication. Failed replications are
// excluded and counted; more than 10% marks the cell failed. Results are
// byte-identical for any thread count.
BenchResult run_cell(const BenchCell& cell, int threads = 1);

// Propensity covariate subsets used by benchmark and CLI fits: the correct
// variant uses every covariate, the misspecified one only the second.
std::vector<int> propensity_subset(bool misspecified, int p);

// One CSV per (eta_basis, hte_basis) panel, columns
// n,method,eta_basis,hte_basis,propensity,emse_mean,emse_mc_se,reps_ok,reps_failed.
// Returns the written file paths.
std::vector<std::string> write_bench_csvs(const std::vector<BenchResult>& results,
                                          const std::string& out_dir);

}  // namespace tvcsl
