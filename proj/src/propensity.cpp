#include "tvcsl/propensity.hpp"

#include <cmath>
#include <stdexcept>

#include "tvcsl/newton.hpp"

namespace tvcsl {

double PropensityModel::rate(const std::vector<double>& x) const {
    double lin = intercept;
    for (std::size_t k = 0; k < subset.size(); ++k) lin += theta[k] * x[subset[k]];
    return std::max(lin, rate_floor);
}

double PropensityModel::evaluate(const std::vector<double>& x, double t) const {
    if (t < 0.0) throw std::invalid_argument("propensity time must be >= 0");
    return -std::expm1(-rate(x) * t);
}

PropensityModel fit_propensity(const Dataset& data, const std::vector<int>& subset,
                               double rate_floor) {
    for (int j : subset) {
        if (j < 0 || j >= data.p) throw std::invalid_argument("propensity subset out of range");
    }
    // Uncensored subjects only; censored records must never influence the fit.
    struct Obs {
        VectorXd u;       // (1, x_subset)
        double time;      // A if adoption observed, else U
        bool adopted;     // A <= U
    };
    std::vector<Obs> obs;
    int n_adopted = 0;
    for (const auto& s : data.subjects) {
        if (!s.event) continue;
        Obs o;
        o.u.resize(subset.size() + 1);
        o.u[0] = 1.0;
        for (std::size_t k = 0; k < subset.size(); ++k) o.u[k + 1] = s.x[subset[k]];
        o.adopted = s.adoption_time <= s.observed_time;
        o.time = o.adopted ? s.adoption_time : s.observed_time;
        n_adopted += o.adopted ? 1 : 0;
        obs.push_back(std::move(o));
    }
    if (n_adopted == 0) {
        throw std::runtime_error(
            "propensity fit degenerate: no uncensored subject adopts; "
            "fall back to a constant-rate model");
    }
    if (n_adopted < 10) {
        throw std::invalid_argument(
            "propensity fit needs at least 10 uncensored subjects with observed adoption");
    }

    const int q = static_cast<int>(subset.size()) + 1;
    auto eval = [&](const VectorXd& par) {
        ObjectiveEval out;
        out.grad = VectorXd::Zero(q);
        out.hess = MatrixXd::Zero(q, q);
        for (const auto& o : obs) {
            const double lin = par.dot(o.u);
            const double r = std::max(lin, rate_floor);
            if (o.adopted) out.value += std::log(r);
            out.value -= r * o.time;
            if (lin > rate_floor) {  // clamped observations have zero sensitivity
                const double dldr = (o.adopted ? 1.0 / r : 0.0) - o.time;
                out.grad.noalias() += dldr * o.u;
                if (o.adopted) {
                    out.hess.noalias() -= (1.0 / (r * r)) * o.u * o.u.transpose();
                }
            }
        }
        return out;
    };

    // Constant-rate MLE as the starting point.
    double total_time = 0.0;
    for (const auto& o : obs) total_time += o.time;
    VectorXd start = VectorXd::Zero(q);
    start[0] = std::max(n_adopted / std::max(total_time, 1e-12), rate_floor);

    NewtonOptions opts;
    opts.tol = 1e-9;
    FitResult fit = maximize_concave(eval, start, opts);

    PropensityModel model;
    model.intercept = fit.beta[0];
    model.theta = fit.beta.tail(q - 1);
    model.subset = subset;
    model.rate_floor = rate_floor;
    return model;
}

}  // namespace tvcsl
