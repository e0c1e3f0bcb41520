#pragma once

#include <vector>

#include "tvcsl/newton.hpp"
#include "tvcsl/types.hpp"

namespace tvcsl {

// Time-varying Cox partial likelihood over counting-process episodes with
// per-row offsets and Breslow tie handling. The log partial likelihood is
// normalized by the number of distinct subjects:
//
//   (1/n) * sum over event times t of [ sum_{events e at t} lp_e
//                                       - d_t * log sum_{j at risk at t} exp(lp_j) ]
//
// where lp = offset + z' beta and "at risk at t" means start < t <= stop.
// Evaluation sweeps event times in decreasing order, maintaining running
// risk-set sums; per-event risk-set materialization never happens.
class CoxTvProblem {
public:
    CoxTvProblem(std::vector<EpisodeRow> rows, MatrixXd design, VectorXd offsets);

    int n_rows() const { return static_cast<int>(rows_.size()); }
    int dim() const { return static_cast<int>(design_.cols()); }
    int n_subjects() const { return n_subjects_; }
    int n_events() const { return n_events_; }
    const std::vector<EpisodeRow>& rows() const { return rows_; }
    const MatrixXd& design() const { return design_; }
    const VectorXd& offsets() const { return offsets_; }

    // Normalized log partial likelihood.
    double value(const VectorXd& beta) const;

    struct Derivs {
        double value = 0.0;
        VectorXd grad;   // normalized
        MatrixXd hess;   // normalized, negative semidefinite
    };
    Derivs value_grad_hess(const VectorXd& beta) const;

    // First and second derivatives of the *unnormalized* log partial likelihood
    // with respect to each row's linear predictor; curv is the negated second
    // derivative (the IRLS weight), clamped at zero.
    struct RowDerivs {
        double value = 0.0;  // normalized, as in value()
        VectorXd lp_grad;
        VectorXd lp_curv;
    };
    RowDerivs row_derivs(const VectorXd& beta) const;

private:
    struct Sums;
    void sweep(const VectorXd& beta, bool want_gh, bool want_row, Sums& out) const;

    std::vector<EpisodeRow> rows_;
    MatrixXd design_;
    VectorXd offsets_;
    int n_subjects_ = 0;
    int n_events_ = 0;
    std::vector<int> by_stop_;   // row indices, stop descending
    std::vector<int> by_start_;  // row indices, start descending
    std::vector<double> event_times_;            // distinct, descending
    std::vector<std::vector<int>> event_rows_;   // event row indices per time
};

// Newton maximization with step-halving; converged means the relative change
// in log-PL and the gradient norm both fell below tol. A singular Hessian
// falls back to a gradient step. Standard errors come from the inverse of the
// negative unnormalized Hessian.
FitResult newton_fit(const CoxTvProblem& problem, const VectorXd& beta0,
                     const NewtonOptions& opts = {});

// Step-function baseline cumulative hazard with jumps at distinct event times.
struct BaselineHazard {
    std::vector<double> times;       // ascending
    std::vector<double> increments;  // dLambda0 at each time, positive

    // Lambda0(t) = sum of increments at times <= t.
    double cumulative(double t) const;
};

// Breslow estimator: dLambda0(t) = d_t / sum_{j at risk at t} exp(lp_j), with
// lp the full per-episode linear predictor (offset included).
BaselineHazard breslow_baseline(const std::vector<EpisodeRow>& rows, const VectorXd& lp);

}  // namespace tvcsl
