#pragma once

#include <cstdint>
#include <vector>

#include "tvcsl/newton.hpp"
#include "tvcsl/types.hpp"

namespace tvcsl {

// One subject of the orthogonalized second-stage partial likelihood. At each
// event time t the subject contributes linear predictor
//
//   nu(t) + (W(t) - a(t)) * phi' beta,   nu(t) = tau_hat * a(t) + eta0_hat,
//
// with W(t) = 1(adoption < t) and a(t) = 1 - exp(-prop_rate * t) (identically
// zero when prop_rate <= 0, which reduces the fit to a plain offset model).
// Both the offset and the regression covariates are recomputed at every event
// time during the risk-set sweep.
struct SecondStageSubject {
    std::int64_t id = 0;
    double adoption = kInfTime;
    double observed = 0.0;
    bool event = false;
    VectorXd phi;           // HTE basis value, including a leading constant
    double tau_hat = 0.0;   // first-stage HLHR at this subject's covariates
    double eta0_hat = 0.0;  // first-stage control log relative hazard
    double prop_rate = 0.0; // clamped adoption rate behind a_t(x)
    int stratum = 0;        // cross-fitting stratum; risk sets never cross strata
};

class SecondStageProblem {
public:
    explicit SecondStageProblem(std::vector<SecondStageSubject> subjects);

    int dim() const { return dim_; }
    int n_subjects() const { return static_cast<int>(subjects_.size()); }
    int n_events() const { return n_events_; }
    const std::vector<SecondStageSubject>& subjects() const { return subjects_; }

    double value(const VectorXd& beta) const;
    ObjectiveEval value_grad_hess(const VectorXd& beta) const;

private:
    void sweep(const VectorXd& beta, bool want_gh, ObjectiveEval& out) const;

    std::vector<SecondStageSubject> subjects_;
    int dim_ = 0;
    int n_events_ = 0;
    // Per stratum: subject indices sorted by observed time descending, and the
    // distinct event times (descending) with their event subject indices.
    struct Stratum {
        std::vector<int> by_observed;
        std::vector<double> event_times;
        std::vector<std::vector<int>> event_subjects;
    };
    std::vector<Stratum> strata_;
};

FitResult newton_fit(const SecondStageProblem& problem, const VectorXd& beta0,
                     const NewtonOptions& opts = {});

}  // namespace tvcsl
