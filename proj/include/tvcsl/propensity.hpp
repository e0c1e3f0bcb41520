#pragma once

#include <vector>

#include "tvcsl/types.hpp"

namespace tvcsl {

// Time-varying adoption propensity a_t(x) = P(A <= t | event observed, X = x)
// under an exponential adoption law whose rate is linear in a covariate
// subset, clamped below at rate_floor so the CDF stays proper.
struct PropensityModel {
    double intercept = 0.0;
    VectorXd theta;             // one coefficient per subset entry
    std::vector<int> subset;    // covariate indices (0-based) entering the rate
    double rate_floor = 0.01;

    double rate(const std::vector<double>& x) const;
    double evaluate(const std::vector<double>& x, double t) const;  // a_t(x) in [0,1]
};

// Maximum likelihood over uncensored subjects only (the estimand conditions on
// event observation). Adoptions observed within follow-up (A <= U) contribute
// exponential density terms; adoptions beyond follow-up or at infinity
// contribute right-censored-at-U survival terms. Throws std::invalid_argument
// when fewer than 10 uncensored subjects have an observed adoption, and
// std::runtime_error instructing a constant-rate fallback when no uncensored
// subject adopts at all.
PropensityModel fit_propensity(const Dataset& data, const std::vector<int>& subset,
                               double rate_floor = 0.01);

}  // namespace tvcsl
