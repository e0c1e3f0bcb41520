#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tvcsl/io.hpp"
#include "tvcsl/rng.hpp"
#include "tvcsl/types.hpp"

namespace tvcsl {

// Generative model. Covariates are N(0, I_p); adoption is exponential with a
// covariate-dependent rate clamped below at rate_floor; censoring is an
// exponential capped at admin_censor_time. Event times come from the piecewise
// proportional hazard lambda(t) * exp(eta0(x) + 1(a < t) * tau(x)) via exact
// inversion of its cumulative hazard, so the post-adoption hazard is evaluated
// at calendar time t (not time since adoption).
struct HazardSpec {
    std::function<double(double)> cumhaz;      // Lambda(t), strictly increasing from 0
    std::function<double(double)> inv_cumhaz;  // Lambda^{-1}
    std::function<double(const std::vector<double>&)> eta0;
    std::function<double(const std::vector<double>&)> tau;
    std::function<double(const std::vector<double>&)> adoption_rate;  // pre-clamp
    double rate_floor = 0.05;
    double censor_rate = 0.1;
    double admin_censor_time = 20.0;
};

// The benchmark design: Lambda(t) = t^2/2, eta0(x) = -sigma(x1)*sigma(x2)/2
// with sigma(v) = 2/(1+exp(-12(v-1/2))), tau(x) = x1+x2+x3, adoption rate
// x2+x3 clamped at rate_floor.
HazardSpec default_spec(double rate_floor = 0.05);

struct SimConfig {
    int n = 0;
    int p = 3;
    std::uint64_t seed = 0;
    HazardSpec spec = default_spec();
    bool misspecify_propensity = false;  // estimation-side flag; does not alter the DGP
};

// Solves H(T) = -log(u) for the piecewise cumulative hazard H given adoption
// time a. u must lie in (0, 1).
double sample_event_time(const std::vector<double>& x, double a, const HazardSpec& spec,
                         double u);

// Exponential adoption draw with rate max(adoption_rate(x), rate_floor).
double sample_adoption_time(const std::vector<double>& x, const HazardSpec& spec, Rng& rng);

// min(admin_censor_time, Exp(censor_rate)).
double sample_censoring(const HazardSpec& spec, Rng& rng);

// True adoption CDF P(A <= t | X = x) under the spec (clamped rate).
double true_propensity(const std::vector<double>& x, double t, const HazardSpec& spec);

struct SimResult {
    Dataset data;
    std::vector<TruthRow> truth;
};

// n i.i.d. subjects with per-subject RNG substreams keyed by (seed, index):
// equal seeds give identical output regardless of execution order. The stored
// adoption_time is the generated value even when it exceeds the observed time;
// estimators must treat such adoptions as unobserved.
SimResult generate(const SimConfig& config);

}  // namespace tvcsl
