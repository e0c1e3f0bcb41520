#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tvcsl/basis.hpp"
#include "tvcsl/lasso.hpp"
#include "tvcsl/newton.hpp"
#include "tvcsl/types.hpp"

namespace tvcsl {

// Fitted heterogeneous log hazard ratio tau_hat(x) = intercept + beta' phi(x),
// where phi is the (possibly reduced) HTE basis fitted on training covariates.
struct HteModel {
    FittedBasis basis;
    double intercept = 0.0;
    VectorXd beta;
    std::vector<int> covariates;  // original covariate indices feeding the basis

    std::string method;
    bool converged = true;
    std::vector<double> lambda_selected;  // one per lasso stage performed
    int second_stage_iterations = 0;
    std::vector<std::string> warnings;
};

double predict_hte(const HteModel& model, const std::vector<double>& x);

// Full result of the penalized stage shared by S-Lasso and the TV-CSL first
// stage: baseline part eta0_hat(x) = gamma' phi_eta(x) and treatment part
// tau_hat(x) = omega0 + omega' phi_hte(x).
struct StageModel {
    FittedBasis eta_basis;
    FittedBasis hte_basis;
    VectorXd gamma;  // eta-block coefficients
    double omega0 = 0.0;
    VectorXd omega;  // hte-block coefficients
    double lambda = 0.0;

    double eta0_at(const std::vector<double>& x) const;
    double tau_at(const std::vector<double>& x) const;
};

// Two-fold partition by subject. Redrawn until every fold has at least one
// event and one adoption observed within follow-up; folds violating the
// binary-covariate minority rule (fewer than 3 minority-class subjects) force
// a redraw, and covariates still violating it after 20 draws are dropped.
struct CrossFitPlan {
    int n_folds = 2;
    std::map<std::int64_t, int> fold_assignment;
    std::uint64_t seed = 0;
    std::vector<int> dropped_covariates;
};

CrossFitPlan make_cross_fit_plan(const Dataset& data, std::uint64_t seed, int n_folds = 2);

struct EstimatorOptions {
    std::uint64_t seed = 0;
    LassoOptions lasso;
    NewtonOptions newton;
    bool symmetric_folds = true;          // tv-csl: accumulate both fold directions
    double propensity_rate_floor = 0.01;
};

// Single penalized fit of the combined design [phi_eta(x), W, W * phi_hte(x)]
// over the episode expansion, with the treatment main effect unpenalized and
// the penalty chosen by cross-validation. Throws when no subject adopts within
// follow-up (treated block identically zero).
HteModel s_lasso_fit(const Dataset& data, const BasisSpec& eta_basis,
                     const BasisSpec& hte_basis, const EstimatorOptions& opts = {});

// The S-Lasso fit with both model parts exposed; x maps are over all
// covariates of the training data.
StageModel first_stage_fit(const Dataset& data, const BasisSpec& eta_basis,
                           const BasisSpec& hte_basis, const EstimatorOptions& opts = {});

// Two-stage cross-fitted estimator: per fold, fit the adoption propensity and
// a penalized time-varying Cox outcome model, then maximize the orthogonalized
// second-stage partial likelihood on the complementary fold with offsets
// nu_t(x) = tau_hat(x) a_t(x) + eta0_hat(x) and covariates
// (W(t) - a_t(x)) phi(x), both recomputed at every event time. By default both
// fold directions are accumulated into one objective (symmetric cross-fitting);
// opts.symmetric_folds = false keeps the single printed direction.
HteModel tvcsl_fit(const Dataset& data, const BasisSpec& eta_basis,
                   const BasisSpec& hte_basis, const std::vector<int>& propensity_subset,
                   const CrossFitPlan& plan, const EstimatorOptions& opts = {});

// Injected nuisance functions for the second stage alone: no cross-fitting is
// involved, the orthogonalized partial likelihood runs over the full data with
// the supplied eta0/tau/adoption-rate maps. Used for oracle-nuisance
// calibration and convergence-rate studies.
struct NuisanceOverride {
    std::function<double(const std::vector<double>&)> eta0;
    std::function<double(const std::vector<double>&)> tau;
    std::function<double(const std::vector<double>&)> prop_rate;  // <= 0 disables a_t
};

HteModel tvcsl_second_stage_only(const Dataset& data, const BasisSpec& hte_basis,
                                 const NuisanceOverride& nuisances,
                                 const EstimatorOptions& opts = {});

}  // namespace tvcsl
