#pragma once

#include <cstdint>
#include <vector>

#include "tvcsl/coxtv.hpp"
#include "tvcsl/types.hpp"

namespace tvcsl {

struct LassoOptions {
    int n_lambda = 50;
    double lambda_min_ratio = 0.001;
    int k_folds = 10;
    std::uint64_t fold_seed = 0;
    double cd_tol = 1e-7;   // coefficient max-change criterion, CD and outer loop
    int max_outer = 50;     // quadratic-approximation refreshes per lambda
    int max_cycles = 2000;  // CD cycles per quadratic solve
};

struct LassoPath {
    VectorXd lambdas;             // strictly decreasing
    std::vector<VectorXd> betas;  // one per lambda
    VectorXd cv_deviance;         // filled by cv_select_lambda
    double lambda_selected = 0.0;
    int selected_index = -1;
};

// Maximizes (1/n) log-PL - lambda * sum_{penalized j} |beta_j| by cyclic
// coordinate descent with soft thresholding on the local quadratic
// approximation of the partial likelihood, cycling the active set until the
// coefficient max-change drops below cd_tol. `penalized` holds 0/1 flags per
// design column. Throws on divergence (non-finite objective).
VectorXd lasso_cox_fit(const CoxTvProblem& problem, const std::vector<int>& penalized,
                       double lambda, const VectorXd& beta0, const LassoOptions& opts = {});

// Smallest lambda at which every penalized coefficient is zero, with
// unpenalized coordinates profiled out first. Also returns the profiled
// coefficient vector through beta_null.
double lasso_lambda_max(const CoxTvProblem& problem, const std::vector<int>& penalized,
                        VectorXd* beta_null = nullptr);

// Warm-started path over a log-spaced lambda grid from lambda_max down to
// lambda_min_ratio * lambda_max.
LassoPath lasso_path(const CoxTvProblem& problem, const std::vector<int>& penalized,
                     const LassoOptions& opts = {});

// K-fold cross-validation by subject of the held-out partial-likelihood
// deviance -2 * [L_all(beta_k) - L_train(beta_k)] summed over folds, evaluated
// on the full-data lambda grid; selects the minimizing lambda (min rule).
// Folds are redrawn (up to 10 times) until every fold contains an event.
LassoPath cv_select_lambda(const CoxTvProblem& problem, const std::vector<int>& penalized,
                           const LassoOptions& opts = {});

}  // namespace tvcsl
