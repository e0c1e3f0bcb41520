#pragma once

#include <functional>

#include "tvcsl/types.hpp"

namespace tvcsl {

struct NewtonOptions {
    double tol = 1e-8;
    int max_iter = 100;
    int max_halvings = 20;
    bool compute_se = false;
};

struct ObjectiveEval {
    double value = 0.0;
    VectorXd grad;
    MatrixXd hess;  // negative semidefinite for concave objectives
};

// Newton ascent with step-halving for concave objectives. Converged means the
// relative objective change and the gradient norm both fell below tol; a
// singular or indefinite Hessian solve falls back to a gradient step. When
// compute_se is set, standard errors are sqrt(diag((-hess * se_scale)^-1)) at
// the optimum (se_scale rescales a normalized objective to the full one).
FitResult maximize_concave(const std::function<ObjectiveEval(const VectorXd&)>& eval,
                           const VectorXd& beta0, const NewtonOptions& opts,
                           double se_scale = 1.0);

}  // namespace tvcsl
