#include "tvcsl/newton.hpp"

#include <cmath>
#include <stdexcept>

namespace tvcsl {

FitResult maximize_concave(const std::function<ObjectiveEval(const VectorXd&)>& eval,
                           const VectorXd& beta0, const NewtonOptions& opts,
                           double se_scale) {
    FitResult res;
    res.beta = beta0;
    ObjectiveEval d = eval(res.beta);
    if (!std::isfinite(d.value)) {
        throw std::runtime_error("non-finite objective at the starting point");
    }
    double rel_change = kInfTime;
    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        res.n_iterations = iter;
        res.gradient_norm = d.grad.norm();
        res.log_pl = d.value;
        if (res.gradient_norm < opts.tol && (iter == 1 || rel_change < opts.tol)) {
            res.converged = true;
            break;
        }
        // Ascent direction: Newton step on the negated (PSD) Hessian, falling
        // back to the gradient when the solve is unusable.
        VectorXd dir;
        Eigen::LDLT<MatrixXd> ldlt(-d.hess);
        if (ldlt.info() == Eigen::Success) dir = ldlt.solve(d.grad);
        if (ldlt.info() != Eigen::Success || dir.size() == 0 || !dir.allFinite() ||
            d.grad.dot(dir) <= 0.0) {
            dir = d.grad;
        }
        double step = 1.0;
        bool improved = false;
        for (int h = 0; h <= opts.max_halvings; ++h, step *= 0.5) {
            const VectorXd trial = res.beta + step * dir;
            ObjectiveEval cand = eval(trial);
            if (std::isfinite(cand.value) && cand.value >= d.value) {
                rel_change = std::abs(cand.value - d.value) /
                             std::max(std::abs(d.value), 1e-10);
                res.beta = trial;
                d = std::move(cand);
                improved = true;
                break;
            }
        }
        if (!improved) {
            // No ascent within the halving budget; report the current point.
            res.converged = d.grad.norm() < opts.tol;
            break;
        }
    }
    res.log_pl = d.value;
    res.gradient_norm = d.grad.norm();
    if (opts.compute_se && res.beta.size() > 0) {
        Eigen::LDLT<MatrixXd> ldlt(MatrixXd(-d.hess * se_scale));
        if (ldlt.info() == Eigen::Success) {
            const MatrixXd cov =
                ldlt.solve(MatrixXd::Identity(res.beta.size(), res.beta.size()));
            VectorXd se(res.beta.size());
            for (Eigen::Index j = 0; j < res.beta.size(); ++j) {
                se[j] = std::sqrt(std::max(0.0, cov(j, j)));
            }
            res.standard_errors = std::move(se);
        }
    }
    return res;
}

}  // namespace tvcsl
