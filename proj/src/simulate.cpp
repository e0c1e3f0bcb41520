#include "tvcsl/simulate.hpp"

#include <cmath>
#include <stdexcept>

namespace tvcsl {

namespace {

double sigmoid_factor(double v) {
    return 2.0 / (1.0 + std::exp(-12.0 * (v - 0.5)));
}

}  // namespace

HazardSpec default_spec(double rate_floor) {
    HazardSpec s;
    s.cumhaz = [](double t) { return 0.5 * t * t; };
    s.inv_cumhaz = [](double y) { return std::sqrt(2.0 * y); };
    s.eta0 = [](const std::vector<double>& x) {
        return -0.5 * sigmoid_factor(x[0]) * sigmoid_factor(x[1]);
    };
    s.tau = [](const std::vector<double>& x) { return x[0] + x[1] + x[2]; };
    s.adoption_rate = [](const std::vector<double>& x) { return x[1] + x[2]; };
    s.rate_floor = rate_floor;
    return s;
}

double sample_event_time(const std::vector<double>& x, double a, const HazardSpec& spec,
                         double u) {
    if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("u must lie in (0,1)");
    const double target = -std::log(u);
    const double e0 = spec.eta0(x);
    // Hazard budget spent before adoption: Lambda(a) * exp(eta0).
    if (std::isinf(a)) {
        return spec.inv_cumhaz(target * std::exp(-e0));
    }
    const double budget = spec.cumhaz(a) * std::exp(e0);
    if (target <= budget) {
        return spec.inv_cumhaz(target * std::exp(-e0));
    }
    const double tt = spec.tau(x);
    return spec.inv_cumhaz(spec.cumhaz(a) + (target - budget) * std::exp(-e0 - tt));
}

double sample_adoption_time(const std::vector<double>& x, const HazardSpec& spec, Rng& rng) {
    const double rate = std::max(spec.adoption_rate(x), spec.rate_floor);
    return rng.exponential(rate);
}

double sample_censoring(const HazardSpec& spec, Rng& rng) {
    return std::min(spec.admin_censor_time, rng.exponential(spec.censor_rate));
}

double true_propensity(const std::vector<double>& x, double t, const HazardSpec& spec) {
    const double rate = std::max(spec.adoption_rate(x), spec.rate_floor);
    return 1.0 - std::exp(-rate * t);
}

SimResult generate(const SimConfig& config) {
    if (config.n < 1) throw std::invalid_argument("n must be >= 1");
    SimResult out;
    out.data.p = config.p;
    for (int j = 0; j < config.p; ++j) {
        out.data.column_names.push_back("x" + std::to_string(j + 1));
    }
    out.data.subjects.resize(config.n);
    out.truth.resize(config.n);
    for (int i = 0; i < config.n; ++i) {
        // Fixed per-subject draw order: covariates, adoption, event, censoring.
        Rng rng(config.seed, static_cast<std::uint64_t>(i));
        SubjectRecord s;
        s.id = i + 1;
        s.x.resize(config.p);
        for (int j = 0; j < config.p; ++j) s.x[j] = rng.normal();
        const double a = sample_adoption_time(s.x, config.spec, rng);
        const double t = sample_event_time(s.x, a, config.spec, rng.uniform());
        const double c = sample_censoring(config.spec, rng);
        s.adoption_time = a;
        s.observed_time = std::min(t, c);
        s.event = t <= c;
        out.truth[i] = {s.id, config.spec.tau(s.x), config.spec.eta0(s.x)};
        out.data.subjects[i] = std::move(s);
    }
    return out;
}

}  // namespace tvcsl
