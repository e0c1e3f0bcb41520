#include "tvcsl/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "tvcsl/coxtv.hpp"
#include "tvcsl/propensity.hpp"
#include "tvcsl/rng.hpp"
#include "tvcsl/second_stage.hpp"

namespace tvcsl {

namespace {

bool adopts_within_followup(const SubjectRecord& s) {
    return s.adoption_time < s.observed_time;
}

MatrixXd covariate_matrix_subset(const Dataset& data, const std::vector<int>& cols) {
    MatrixXd x(data.subjects.size(), cols.size());
    for (std::size_t i = 0; i < data.subjects.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            x(i, j) = data.subjects[i].x[cols[j]];
        }
    }
    return x;
}

std::vector<double> subset_x(const std::vector<double>& x, const std::vector<int>& cols) {
    std::vector<double> out(cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) out[j] = x[cols[j]];
    return out;
}

std::vector<std::string> subset_names(const Dataset& data, const std::vector<int>& cols) {
    std::vector<std::string> out;
    for (int c : cols) out.push_back(data.column_names[c]);
    return out;
}

std::vector<int> all_covariates(const Dataset& data) {
    std::vector<int> cols(data.p);
    for (int j = 0; j < data.p; ++j) cols[j] = j;
    return cols;
}

std::vector<int> remove_dropped(const std::vector<int>& cols,
                                const std::vector<int>& dropped) {
    std::vector<int> out;
    for (int c : cols) {
        if (std::find(dropped.begin(), dropped.end(), c) == dropped.end()) {
            out.push_back(c);
        }
    }
    if (out.empty()) throw std::invalid_argument("all covariates dropped");
    return out;
}

// Shared penalized stage: lasso Cox on [phi_eta(x), W, W * phi_hte(x)] with the
// treatment main effect unpenalized and the penalty chosen by cross-validated
// deviance. Serves as the whole of S-Lasso and as the TV-CSL first stage.
StageModel fit_stage_lasso(const Dataset& data, const std::vector<int>& used_covariates,
                           const BasisSpec& eta_spec, const BasisSpec& hte_spec,
                           LassoOptions lasso_opts, std::uint64_t fold_seed) {
    if (std::none_of(data.subjects.begin(), data.subjects.end(), adopts_within_followup)) {
        throw std::invalid_argument(
            "no subject adopts within follow-up: treated design block is identically "
            "zero and the HLHR is unidentifiable");
    }
    const MatrixXd x = covariate_matrix_subset(data, used_covariates);
    const auto names = subset_names(data, used_covariates);
    StageModel fit;
    fit.eta_basis = fit_basis(x, eta_spec, names);
    fit.hte_basis = fit_basis(x, hte_spec, names);

    const MatrixXd eta_cols = fit.eta_basis.transform(x);
    const MatrixXd hte_cols = fit.hte_basis.transform(x);
    const int q_eta = static_cast<int>(eta_cols.cols());
    const int q_hte = static_cast<int>(hte_cols.cols());

    std::vector<EpisodeRow> rows = expand_to_episodes(data);
    std::map<std::int64_t, int> pos;
    for (std::size_t i = 0; i < data.subjects.size(); ++i) {
        pos[data.subjects[i].id] = static_cast<int>(i);
    }
    MatrixXd design(rows.size(), q_eta + 1 + q_hte);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const int i = pos.at(rows[r].subject_id);
        const double w = rows[r].treated ? 1.0 : 0.0;
        design.block(r, 0, 1, q_eta) = eta_cols.row(i);
        design(r, q_eta) = w;
        design.block(r, q_eta + 1, 1, q_hte) = w * hte_cols.row(i);
    }
    const auto m = static_cast<Eigen::Index>(rows.size());
    CoxTvProblem problem(std::move(rows), std::move(design), VectorXd::Zero(m));

    std::vector<int> penalized(problem.dim(), 1);
    penalized[q_eta] = 0;  // treatment main effect stays unshrunk
    lasso_opts.fold_seed = fold_seed;
    LassoPath path = cv_select_lambda(problem, penalized, lasso_opts);
    const VectorXd& beta = path.betas[path.selected_index];
    fit.gamma = beta.head(q_eta);
    fit.omega0 = beta[q_eta];
    fit.omega = beta.tail(q_hte);
    fit.lambda = path.lambda_selected;
    return fit;
}

Dataset subset_dataset(const Dataset& data, const CrossFitPlan& plan, int fold,
                       bool keep_fold) {
    Dataset out;
    out.p = data.p;
    out.column_names = data.column_names;
    for (const auto& s : data.subjects) {
        const bool in_fold = plan.fold_assignment.at(s.id) == fold;
        if (in_fold == keep_fold) out.subjects.push_back(s);
    }
    return out;
}

}  // namespace

double predict_hte(const HteModel& model, const std::vector<double>& x) {
    return model.intercept + model.basis.transform(subset_x(x, model.covariates)).dot(model.beta);
}

double StageModel::eta0_at(const std::vector<double>& x) const {
    return eta_basis.transform(x).dot(gamma);
}

double StageModel::tau_at(const std::vector<double>& x) const {
    return omega0 + hte_basis.transform(x).dot(omega);
}

StageModel first_stage_fit(const Dataset& data, const BasisSpec& eta_basis,
                           const BasisSpec& hte_basis, const EstimatorOptions& opts) {
    validate(data);
    return fit_stage_lasso(data, all_covariates(data), eta_basis, hte_basis, opts.lasso,
                           Rng::derive(opts.seed, 11));
}

CrossFitPlan make_cross_fit_plan(const Dataset& data, std::uint64_t seed, int n_folds) {
    if (n_folds < 2) throw std::invalid_argument("cross-fitting needs >= 2 folds");
    if (static_cast<int>(data.subjects.size()) < 2 * n_folds) {
        throw std::invalid_argument("too few subjects for cross-fitting");
    }
    // Detect binary covariates once; the minority rule applies per fold.
    std::vector<int> binary_cols;
    for (int j = 0; j < data.p; ++j) {
        std::set<double> vals;
        for (const auto& s : data.subjects) {
            vals.insert(s.x[j]);
            if (vals.size() > 2) break;
        }
        if (vals.size() <= 2) binary_cols.push_back(j);
    }

    CrossFitPlan plan;
    plan.n_folds = n_folds;
    plan.seed = seed;
    std::vector<int> violating_binary;
    for (int attempt = 0; attempt < 20; ++attempt) {
        Rng rng(seed, 900 + attempt);
        std::vector<std::size_t> perm(data.subjects.size());
        for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
        for (std::size_t i = perm.size(); i > 1; --i) {
            std::swap(perm[i - 1], perm[rng.next_u64() % i]);
        }
        std::map<std::int64_t, int> fold;
        std::vector<int> events(n_folds, 0), adoptions(n_folds, 0);
        for (std::size_t i = 0; i < perm.size(); ++i) {
            const auto& s = data.subjects[perm[i]];
            const int f = static_cast<int>(i % n_folds);
            fold[s.id] = f;
            if (s.event) ++events[f];
            if (adopts_within_followup(s)) ++adoptions[f];
        }
        const bool viable =
            std::all_of(events.begin(), events.end(), [](int c) { return c > 0; }) &&
            std::all_of(adoptions.begin(), adoptions.end(), [](int c) { return c > 0; });
        if (!viable) continue;

        violating_binary.clear();
        for (int j : binary_cols) {
            std::set<double> vals;
            for (const auto& s : data.subjects) vals.insert(s.x[j]);
            if (vals.size() < 2) continue;  // constant column; basis handles it
            const double lo = *vals.begin();
            for (int f = 0; f < n_folds; ++f) {
                int n_lo = 0, n_hi = 0;
                for (const auto& s : data.subjects) {
                    if (fold[s.id] != f) continue;
                    (s.x[j] == lo ? n_lo : n_hi) += 1;
                }
                if (std::min(n_lo, n_hi) < 3) {
                    violating_binary.push_back(j);
                    break;
                }
            }
        }
        plan.fold_assignment = std::move(fold);
        if (violating_binary.empty()) return plan;
    }
    if (plan.fold_assignment.empty()) {
        throw std::runtime_error(
            "could not draw cross-fitting folds with events and adoptions in every fold");
    }
    // Fold constraints satisfied but a binary covariate stayed degenerate:
    // keep the last assignment and drop the covariate from the bases.
    std::sort(violating_binary.begin(), violating_binary.end());
    violating_binary.erase(std::unique(violating_binary.begin(), violating_binary.end()),
                           violating_binary.end());
    plan.dropped_covariates = std::move(violating_binary);
    return plan;
}

HteModel s_lasso_fit(const Dataset& data, const BasisSpec& eta_basis,
                     const BasisSpec& hte_basis, const EstimatorOptions& opts) {
    StageModel stage = first_stage_fit(data, eta_basis, hte_basis, opts);
    HteModel model;
    model.basis = stage.hte_basis;
    model.intercept = stage.omega0;
    model.beta = stage.omega;
    model.covariates = all_covariates(data);
    model.method = "s-lasso";
    model.lambda_selected = {stage.lambda};
    return model;
}

HteModel tvcsl_fit(const Dataset& data, const BasisSpec& eta_basis,
                   const BasisSpec& hte_basis, const std::vector<int>& propensity_subset,
                   const CrossFitPlan& plan, const EstimatorOptions& opts) {
    validate(data);
    if (plan.n_folds != 2) throw std::invalid_argument("tvcsl_fit expects a 2-fold plan");
    for (const auto& s : data.subjects) {
        if (plan.fold_assignment.find(s.id) == plan.fold_assignment.end()) {
            throw std::invalid_argument("cross-fit plan is missing subject " +
                                        std::to_string(s.id));
        }
    }
    HteModel model;
    model.method = "tv-csl";
    const auto covariates = remove_dropped(all_covariates(data), plan.dropped_covariates);
    for (int j : plan.dropped_covariates) {
        model.warnings.push_back("covariate '" + data.column_names[j] +
                                 "' dropped: binary minority class below 3 in a fold");
    }

    // The target parametrization is shared across folds: fit the HTE basis on
    // the full covariate sample. Nuisance bases stay fold-specific.
    const MatrixXd x_all = covariate_matrix_subset(data, covariates);
    FittedBasis target_basis = fit_basis(x_all, hte_basis, subset_names(data, covariates));

    struct FoldNuisance {
        StageModel stage;
        PropensityModel propensity;
    };
    std::map<int, FoldNuisance> nuisance;
    const int directions = opts.symmetric_folds ? 2 : 1;
    for (int k = 0; k < directions; ++k) {
        Dataset train = subset_dataset(data, plan, k, true);
        FoldNuisance fn;
        fn.stage = fit_stage_lasso(train, covariates, eta_basis, hte_basis, opts.lasso,
                                   Rng::derive(opts.seed, 21 + k));
        fn.propensity =
            fit_propensity(train, propensity_subset, opts.propensity_rate_floor);
        nuisance.emplace(k, std::move(fn));
        model.lambda_selected.push_back(nuisance.at(k).stage.lambda);
    }

    std::vector<SecondStageSubject> subjects;
    for (const auto& s : data.subjects) {
        const int fold = plan.fold_assignment.at(s.id);
        // Nuisances come from the other fold; in single-direction mode only
        // fold 1 enters the objective, with fold-0 nuisances.
        const int nuisance_fold = 1 - fold;
        if (!opts.symmetric_folds && (fold != 1)) continue;
        const auto& fn = nuisance.at(nuisance_fold);
        const auto x_used = subset_x(s.x, covariates);
        SecondStageSubject out;
        out.id = s.id;
        out.adoption = s.adoption_time;
        out.observed = s.observed_time;
        out.event = s.event;
        VectorXd phi(target_basis.dim() + 1);
        phi[0] = 1.0;
        phi.tail(target_basis.dim()) = target_basis.transform(x_used);
        out.phi = std::move(phi);
        out.tau_hat = fn.stage.tau_at(x_used);
        out.eta0_hat = fn.stage.eta0_at(x_used);
        out.prop_rate = fn.propensity.rate(s.x);
        out.stratum = opts.symmetric_folds ? fold : 0;
        subjects.push_back(std::move(out));
    }
    SecondStageProblem problem(std::move(subjects));
    FitResult fit = newton_fit(problem, VectorXd::Zero(problem.dim()), opts.newton);

    model.basis = std::move(target_basis);
    model.intercept = fit.beta[0];
    model.beta = fit.beta.tail(fit.beta.size() - 1);
    model.covariates = covariates;
    model.converged = fit.converged;
    model.second_stage_iterations = fit.n_iterations;
    if (!fit.converged) {
        model.warnings.push_back("second-stage Newton did not converge: gradient norm " +
                                 std::to_string(fit.gradient_norm));
    }
    return model;
}

HteModel tvcsl_second_stage_only(const Dataset& data, const BasisSpec& hte_basis,
                                 const NuisanceOverride& nuisances,
                                 const EstimatorOptions& opts) {
    validate(data);
    if (!nuisances.eta0 || !nuisances.tau) {
        throw std::invalid_argument("nuisance override needs eta0 and tau maps");
    }
    const auto covariates = all_covariates(data);
    const MatrixXd x_all = covariate_matrix_subset(data, covariates);
    FittedBasis target_basis = fit_basis(x_all, hte_basis, data.column_names);

    std::vector<SecondStageSubject> subjects;
    for (const auto& s : data.subjects) {
        SecondStageSubject out;
        out.id = s.id;
        out.adoption = s.adoption_time;
        out.observed = s.observed_time;
        out.event = s.event;
        VectorXd phi(target_basis.dim() + 1);
        phi[0] = 1.0;
        phi.tail(target_basis.dim()) = target_basis.transform(s.x);
        out.phi = std::move(phi);
        out.tau_hat = nuisances.tau(s.x);
        out.eta0_hat = nuisances.eta0(s.x);
        out.prop_rate = nuisances.prop_rate ? nuisances.prop_rate(s.x) : 0.0;
        out.stratum = 0;
        subjects.push_back(std::move(out));
    }
    SecondStageProblem problem(std::move(subjects));
    FitResult fit = newton_fit(problem, VectorXd::Zero(problem.dim()), opts.newton);

    HteModel model;
    model.method = "tv-csl-second-stage";
    model.basis = std::move(target_basis);
    model.intercept = fit.beta[0];
    model.beta = fit.beta.tail(fit.beta.size() - 1);
    model.covariates = covariates;
    model.converged = fit.converged;
    model.second_stage_iterations = fit.n_iterations;
    return model;
}

}  // namespace tvcsl
