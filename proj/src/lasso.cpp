#include "tvcsl/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "tvcsl/rng.hpp"

namespace tvcsl {

namespace {

double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

// Penalized weighted-least-squares solve of one quadratic approximation.
// Coordinate updates run against the Gram matrix of the weighted design
// (covariance form), so a cycle costs O(q^2) independent of the row count.
// Returns the coefficient max-change of the final cycle.
double coordinate_descent(const MatrixXd& z, const VectorXd& weight, const VectorXd& resid,
                          const std::vector<int>& penalized, double lambda, double n,
                          const LassoOptions& opts, VectorXd& beta,
                          std::vector<char>& ever_active) {
    const int q = static_cast<int>(z.cols());
    const MatrixXd wz = z.array().colwise() * weight.array();
    const MatrixXd gram = wz.transpose() * z / n;  // symmetric: z' diag(w) z
    VectorXd grad = wz.transpose() * resid / n;    // kept current as beta moves
    auto update_one = [&](int j) {
        const double curv = gram(j, j);
        if (curv <= 0.0) return 0.0;
        const double old = beta[j];
        const double grad_j = grad[j] + curv * old;
        double next;
        if (penalized[j]) {
            next = soft_threshold(grad_j, lambda) / curv;
        } else {
            next = grad_j / curv;
        }
        const double delta = next - old;
        if (delta != 0.0) {
            grad.noalias() -= delta * gram.col(j);
            beta[j] = next;
            if (next != 0.0) ever_active[j] = 1;
        }
        return std::abs(delta);
    };
    double change = 0.0;
    for (int cycle = 0; cycle < opts.max_cycles; ++cycle) {
        // Active-set cycling: sweep currently nonzero (or unpenalized)
        // coordinates until stable, then one full pass to admit violators.
        change = 0.0;
        for (int j = 0; j < q; ++j) {
            if (ever_active[j] || !penalized[j]) change = std::max(change, update_one(j));
        }
        if (change < opts.cd_tol) {
            double full_change = 0.0;
            for (int j = 0; j < q; ++j) full_change = std::max(full_change, update_one(j));
            if (full_change < opts.cd_tol) return full_change;
        }
    }
    return change;
}

}  // namespace

VectorXd lasso_cox_fit(const CoxTvProblem& problem, const std::vector<int>& penalized,
                       double lambda, const VectorXd& beta0, const LassoOptions& opts) {
    if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
    if (static_cast<int>(penalized.size()) != problem.dim()) {
        throw std::invalid_argument("penalized flag length != design width");
    }
    const double n = static_cast<double>(problem.n_subjects());
    const MatrixXd& z = problem.design();
    VectorXd beta = beta0.size() == problem.dim() ? beta0 : VectorXd::Zero(problem.dim());
    std::vector<char> ever_active(problem.dim(), 0);
    for (int j = 0; j < problem.dim(); ++j) ever_active[j] = beta[j] != 0.0;

    auto objective = [&](const VectorXd& b) {
        double pen = 0.0;
        for (int j = 0; j < problem.dim(); ++j) {
            if (penalized[j]) pen += std::abs(b[j]);
        }
        // pen == 0 guards against 0 * inf when profiling with infinite lambda.
        return problem.value(b) - (pen > 0.0 ? lambda * pen : 0.0);
    };
    double obj = objective(beta);
    if (!std::isfinite(obj)) throw std::runtime_error("lasso: non-finite starting objective");

    for (int outer = 0; outer < opts.max_outer; ++outer) {
        auto rd = problem.row_derivs(beta);
        VectorXd weight = rd.lp_curv;
        VectorXd resid(problem.n_rows());
        for (int e = 0; e < problem.n_rows(); ++e) {
            // Working residual g/c; rows with zero curvature carry zero
            // gradient as well and are dropped.
            resid[e] = weight[e] > 1e-12 ? rd.lp_grad[e] / weight[e] : 0.0;
            if (weight[e] <= 1e-12) weight[e] = 0.0;
        }
        const VectorXd before = beta;
        coordinate_descent(z, weight, resid, penalized, lambda, n, opts, beta, ever_active);
        // Guard the quadratic step: halve toward the previous iterate until the
        // true penalized objective stops decreasing.
        double new_obj = objective(beta);
        int halvings = 0;
        while ((!std::isfinite(new_obj) || new_obj < obj - 1e-12) && halvings < 20) {
            beta = 0.5 * (beta + before);
            new_obj = objective(beta);
            ++halvings;
        }
        if (!std::isfinite(new_obj)) {
            throw std::runtime_error("lasso: diverging linear predictors");
        }
        const bool obj_stable = std::abs(new_obj - obj) <= 1e-10 * (1.0 + std::abs(obj));
        obj = new_obj;
        if (obj_stable || (beta - before).cwiseAbs().maxCoeff() < opts.cd_tol) break;
    }
    return beta;
}

double lasso_lambda_max(const CoxTvProblem& problem, const std::vector<int>& penalized,
                        VectorXd* beta_null) {
    VectorXd beta = VectorXd::Zero(problem.dim());
    const bool any_unpenalized =
        std::any_of(penalized.begin(), penalized.end(), [](int f) { return !f; });
    if (any_unpenalized) {
        // Profile out unpenalized coordinates with an infinite-penalty fit.
        beta = lasso_cox_fit(problem, penalized, kInfTime, beta);
    }
    auto d = problem.value_grad_hess(beta);
    double lam = 0.0;
    for (int j = 0; j < problem.dim(); ++j) {
        if (penalized[j]) lam = std::max(lam, std::abs(d.grad[j]));
    }
    if (beta_null != nullptr) *beta_null = beta;
    return lam;
}

LassoPath lasso_path(const CoxTvProblem& problem, const std::vector<int>& penalized,
                     const LassoOptions& opts) {
    LassoPath path;
    VectorXd warm;
    const double lam_max = lasso_lambda_max(problem, penalized, &warm);
    if (lam_max <= 0.0) {
        // Penalized gradient already zero at the profiled fit: degenerate path.
        path.lambdas = VectorXd::Zero(1);
        path.betas.push_back(warm);
        return path;
    }
    path.lambdas.resize(opts.n_lambda);
    const double lo = std::log(lam_max * opts.lambda_min_ratio);
    const double hi = std::log(lam_max);
    for (int k = 0; k < opts.n_lambda; ++k) {
        const double f = opts.n_lambda == 1 ? 0.0 : static_cast<double>(k) / (opts.n_lambda - 1);
        path.lambdas[k] = std::exp(hi + f * (lo - hi));
    }
    for (int k = 0; k < opts.n_lambda; ++k) {
        warm = lasso_cox_fit(problem, penalized, path.lambdas[k], warm, opts);
        path.betas.push_back(warm);
    }
    return path;
}

namespace {

// Fold id per subject, redrawn until every fold holds at least one event.
std::map<std::int64_t, int> subject_folds(const CoxTvProblem& problem, int k_folds,
                                          std::uint64_t seed) {
    std::map<std::int64_t, bool> subject_event;
    for (const auto& r : problem.rows()) {
        subject_event[r.subject_id] = subject_event[r.subject_id] || r.event;
    }
    std::vector<std::int64_t> ids;
    for (const auto& [id, ev] : subject_event) ids.push_back(id);
    if (static_cast<int>(ids.size()) < k_folds) {
        throw std::invalid_argument("fewer subjects than folds");
    }
    for (int attempt = 0; attempt < 10; ++attempt) {
        Rng rng(seed, 700 + attempt);
        std::vector<std::int64_t> perm = ids;
        for (std::size_t i = perm.size(); i > 1; --i) {
            std::swap(perm[i - 1], perm[rng.next_u64() % i]);
        }
        std::map<std::int64_t, int> fold;
        std::vector<int> events(k_folds, 0);
        for (std::size_t i = 0; i < perm.size(); ++i) {
            const int f = static_cast<int>(i % k_folds);
            fold[perm[i]] = f;
            if (subject_event[perm[i]]) ++events[f];
        }
        if (std::all_of(events.begin(), events.end(), [](int c) { return c > 0; })) {
            return fold;
        }
    }
    throw std::runtime_error("could not draw folds with an event in every fold");
}

CoxTvProblem subset_problem(const CoxTvProblem& problem,
                            const std::map<std::int64_t, int>& fold, int exclude_fold) {
    std::vector<EpisodeRow> rows;
    std::vector<int> keep;
    for (int i = 0; i < problem.n_rows(); ++i) {
        if (fold.at(problem.rows()[i].subject_id) != exclude_fold) {
            rows.push_back(problem.rows()[i]);
            keep.push_back(i);
        }
    }
    MatrixXd design(keep.size(), problem.dim());
    VectorXd offsets(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        design.row(i) = problem.design().row(keep[i]);
        offsets[i] = problem.offsets()[keep[i]];
    }
    return CoxTvProblem(std::move(rows), std::move(design), std::move(offsets));
}

}  // namespace

LassoPath cv_select_lambda(const CoxTvProblem& problem, const std::vector<int>& penalized,
                           const LassoOptions& opts) {
    if (opts.k_folds < 2) throw std::invalid_argument("k_folds must be >= 2");
    LassoPath path = lasso_path(problem, penalized, opts);
    const int n_lambda = static_cast<int>(path.lambdas.size());
    path.cv_deviance = VectorXd::Zero(n_lambda);
    const auto fold = subject_folds(problem, opts.k_folds, opts.fold_seed);
    const double n_all = static_cast<double>(problem.n_subjects());
    for (int k = 0; k < opts.k_folds; ++k) {
        CoxTvProblem train = subset_problem(problem, fold, k);
        const double n_train = static_cast<double>(train.n_subjects());
        VectorXd warm = VectorXd::Zero(problem.dim());
        for (int l = 0; l < n_lambda; ++l) {
            warm = lasso_cox_fit(train, penalized, path.lambdas[l], warm, opts);
            const double l_all = problem.value(warm) * n_all;
            const double l_train = train.value(warm) * n_train;
            path.cv_deviance[l] += -2.0 * (l_all - l_train);
        }
    }
    int best = 0;
    for (int l = 1; l < n_lambda; ++l) {
        if (path.cv_deviance[l] < path.cv_deviance[best]) best = l;
    }
    path.selected_index = best;
    path.lambda_selected = path.lambdas[best];
    return path;
}

}  // namespace tvcsl
