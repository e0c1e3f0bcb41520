#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "tvcsl/coxtv.hpp"
#include "tvcsl/simulate.hpp"
#include "tvcsl/types.hpp"

using namespace tvcsl;

namespace {

// Brute-force normalized log partial likelihood: materialize every risk set.
double brute_pl(const std::vector<EpisodeRow>& rows, const MatrixXd& z, const VectorXd& off,
                const VectorXd& beta) {
    const VectorXd lp = off + z * beta;
    std::map<double, std::vector<int>> events_at;
    std::set<std::int64_t> ids;
    for (int e = 0; e < static_cast<int>(rows.size()); ++e) {
        ids.insert(rows[e].subject_id);
        if (rows[e].event) events_at[rows[e].stop].push_back(e);
    }
    double total = 0.0;
    for (const auto& [t, evs] : events_at) {
        double s0 = 0.0;
        for (int j = 0; j < static_cast<int>(rows.size()); ++j) {
            if (rows[j].start < t && t <= rows[j].stop) s0 += std::exp(lp[j]);
        }
        for (int e : evs) total += lp[e];
        total -= static_cast<double>(evs.size()) * std::log(s0);
    }
    return total / static_cast<double>(ids.size());
}

// Staggered-adoption episodes with covariates attached per subject.
struct Fixture {
    std::vector<EpisodeRow> rows;
    MatrixXd z;
    VectorXd off;
};

Fixture simulated_fixture(int n, std::uint64_t seed) {
    SimConfig cfg;
    cfg.n = n;
    cfg.seed = seed;
    const auto sim = generate(cfg);
    Fixture f;
    f.rows = expand_to_episodes(sim.data);
    const int m = static_cast<int>(f.rows.size());
    f.z.resize(m, 3);
    f.off.resize(m);
    std::map<std::int64_t, std::vector<double>> xs;
    for (const auto& s : sim.data.subjects) xs[s.id] = s.x;
    for (int e = 0; e < m; ++e) {
        const auto& x = xs[f.rows[e].subject_id];
        f.z(e, 0) = x[0];
        f.z(e, 1) = x[1];
        f.z(e, 2) = f.rows[e].treated ? 1.0 : 0.0;
        f.off[e] = 0.1 * x[2];
    }
    return f;
}

// Hand-built data with tied event times and a left-truncated episode.
Fixture tied_fixture() {
    Fixture f;
    auto row = [](std::int64_t id, double a, double b, bool ev) {
        EpisodeRow r;
        r.subject_id = id;
        r.start = a;
        r.stop = b;
        r.event = ev;
        return r;
    };
    f.rows = {row(1, 0.0, 2.0, true),  row(2, 0.0, 2.0, true), row(3, 0.0, 3.0, false),
              row(4, 0.0, 1.0, false), row(4, 1.0, 4.0, true), row(5, 2.5, 4.0, true)};
    const int m = 6;
    f.z.resize(m, 2);
    f.z << 0.5, -1.0, -0.2, 0.3, 1.1, 0.0, 0.7, 0.7, 0.7, -0.4, -0.9, 1.6;
    f.off.resize(m);
    f.off << 0.1, -0.2, 0.0, 0.3, 0.05, -0.1;
    return f;
}

}  // namespace

TEST_CASE("partial likelihood matches brute-force risk-set enumeration") {
    const auto f = simulated_fixture(40, 123);
    CoxTvProblem prob(f.rows, f.z, f.off);
    CHECK(prob.n_subjects() == 40);
    int events = 0;
    for (const auto& r : f.rows) events += r.event ? 1 : 0;
    CHECK(prob.n_events() == events);

    std::vector<VectorXd> betas;
    betas.push_back(VectorXd::Zero(3));
    VectorXd b1(3);
    b1 << 0.5, -0.3, 0.8;
    betas.push_back(b1);
    VectorXd b2(3);
    b2 << -1.0, 2.0, 0.25;
    betas.push_back(b2);
    for (const auto& beta : betas) {
        CHECK(prob.value(beta) == doctest::Approx(brute_pl(f.rows, f.z, f.off, beta)).epsilon(1e-10));
    }
}

TEST_CASE("partial likelihood handles ties and left truncation") {
    const auto f = tied_fixture();
    CoxTvProblem prob(f.rows, f.z, f.off);
    CHECK(prob.n_subjects() == 5);
    CHECK(prob.n_events() == 4);
    VectorXd beta(2);
    beta << 0.4, -0.6;
    CHECK(prob.value(beta) == doctest::Approx(brute_pl(f.rows, f.z, f.off, beta)).epsilon(1e-12));

    // Fully hand-computed likelihood. Events at t=2 (rows 0,1) with risk set
    // {0,1,2,4} - the pre-split episode (0,1] and the late entrant (2.5,4] are
    // excluded - and a tie at t=4 (rows 4,5) with risk set {4,5}.
    const VectorXd lp = f.off + f.z * beta;
    const double s0_t2 = std::exp(lp[0]) + std::exp(lp[1]) + std::exp(lp[2]) + std::exp(lp[4]);
    const double s0_t4 = std::exp(lp[4]) + std::exp(lp[5]);
    const double hand = (lp[0] + lp[1] - 2.0 * std::log(s0_t2) + lp[4] + lp[5] -
                         2.0 * std::log(s0_t4)) /
                        5.0;
    CHECK(prob.value(beta) == doctest::Approx(hand).epsilon(1e-13));
}

TEST_CASE("gradient and hessian match central finite differences") {
    const auto f = simulated_fixture(25, 9);
    CoxTvProblem prob(f.rows, f.z, f.off);
    VectorXd beta(3);
    beta << 0.3, -0.7, 0.5;
    const auto d = prob.value_grad_hess(beta);
    CHECK(d.value == doctest::Approx(prob.value(beta)).epsilon(1e-13));

    const double h = 1e-5;
    for (int j = 0; j < 3; ++j) {
        VectorXd bp = beta, bm = beta;
        bp[j] += h;
        bm[j] -= h;
        const double fd = (prob.value(bp) - prob.value(bm)) / (2.0 * h);
        CHECK(d.grad[j] == doctest::Approx(fd).epsilon(1e-6));
        const auto gp = prob.value_grad_hess(bp);
        const auto gm = prob.value_grad_hess(bm);
        for (int k = 0; k < 3; ++k) {
            const double fd2 = (gp.grad[k] - gm.grad[k]) / (2.0 * h);
            CHECK(d.hess(j, k) == doctest::Approx(fd2).epsilon(5e-6).scale(1.0));
        }
    }
    // Concavity: the Hessian must be negative semidefinite.
    const Eigen::SelfAdjointEigenSolver<MatrixXd> es(d.hess);
    CHECK(es.eigenvalues().maxCoeff() <= 1e-10);
}

TEST_CASE("per-row derivatives are consistent with the beta gradient") {
    const auto f = simulated_fixture(30, 77);
    CoxTvProblem prob(f.rows, f.z, f.off);
    VectorXd beta(3);
    beta << -0.2, 0.6, 0.9;
    const auto d = prob.value_grad_hess(beta);
    const auto rd = prob.row_derivs(beta);
    CHECK(rd.value == doctest::Approx(d.value).epsilon(1e-13));

    // Chain rule: grad = Z' g / n with g the per-lp score of the unnormalized PL.
    const VectorXd via_rows = f.z.transpose() * rd.lp_grad / prob.n_subjects();
    for (int j = 0; j < 3; ++j) CHECK(via_rows[j] == doctest::Approx(d.grad[j]).epsilon(1e-10));

    // Spot-check three rows against finite differences in the offset.
    const double h = 1e-4;
    for (int e : {0, prob.n_rows() / 2, prob.n_rows() - 1}) {
        VectorXd op = f.off, om = f.off;
        op[e] += h;
        om[e] -= h;
        CoxTvProblem pp(f.rows, f.z, op);
        CoxTvProblem pm(f.rows, f.z, om);
        const double n = prob.n_subjects();
        const double g_fd = n * (pp.value(beta) - pm.value(beta)) / (2.0 * h);
        CHECK(rd.lp_grad[e] == doctest::Approx(g_fd).epsilon(1e-5).scale(1.0));
        const double c_fd =
            -n * (pp.value(beta) - 2.0 * prob.value(beta) + pm.value(beta)) / (h * h);
        CHECK(rd.lp_curv[e] == doctest::Approx(c_fd).epsilon(5e-3).scale(1.0));
        CHECK(rd.lp_curv[e] >= 0.0);
    }
}

TEST_CASE("partial likelihood is invariant to a constant offset shift") {
    const auto f = simulated_fixture(20, 5);
    CoxTvProblem base(f.rows, f.z, f.off);
    CoxTvProblem shifted(f.rows, f.z, f.off.array() + 3.7);
    VectorXd beta(3);
    beta << 0.2, 0.1, -0.4;
    CHECK(base.value(beta) == doctest::Approx(shifted.value(beta)).epsilon(1e-12));
    const auto d0 = base.value_grad_hess(beta);
    const auto d1 = shifted.value_grad_hess(beta);
    for (int j = 0; j < 3; ++j) CHECK(d0.grad[j] == doctest::Approx(d1.grad[j]).epsilon(1e-10));
}

TEST_CASE("newton_fit recovers a constant treatment effect and reports valid SEs") {
    // DGP with eta0 = 0, tau = 0.8: the true model is Cox on the single
    // time-varying covariate W(t) with coefficient 0.8.
    HazardSpec spec = default_spec();
    spec.eta0 = [](const std::vector<double>&) { return 0.0; };
    spec.tau = [](const std::vector<double>&) { return 0.8; };
    SimConfig cfg;
    cfg.n = 4000;
    cfg.seed = 2024;
    cfg.spec = spec;
    const auto sim = generate(cfg);
    const auto rows = expand_to_episodes(sim.data);
    const int m = static_cast<int>(rows.size());
    MatrixXd z(m, 1);
    for (int e = 0; e < m; ++e) z(e, 0) = rows[e].treated ? 1.0 : 0.0;
    CoxTvProblem prob(rows, z, VectorXd::Zero(m));

    NewtonOptions opts;
    opts.compute_se = true;
    const auto fit = newton_fit(prob, VectorXd::Zero(1), opts);
    REQUIRE(fit.converged);
    CHECK(fit.gradient_norm < 1e-8);
    REQUIRE(fit.standard_errors.has_value());
    const double se = (*fit.standard_errors)[0];
    CHECK(se > 0.01);
    CHECK(se < 0.15);
    CHECK(std::abs(fit.beta[0] - 0.8) < 4.0 * se);
    CHECK(std::abs(fit.beta[0] - 0.8) < 0.15);

    // The reported optimum must actually be stationary.
    const auto d = prob.value_grad_hess(fit.beta);
    CHECK(std::abs(d.grad[0]) < 1e-8);
    // SEs agree with the inverse negative unnormalized Hessian.
    const double info = -d.hess(0, 0) * prob.n_subjects();
    CHECK(se == doctest::Approx(1.0 / std::sqrt(info)).epsilon(1e-8));
}

TEST_CASE("newton_fit maximizes the tied hand-built likelihood") {
    const auto f = tied_fixture();
    CoxTvProblem prob(f.rows, f.z, f.off);
    const auto fit = newton_fit(prob, VectorXd::Zero(2));
    REQUIRE(fit.converged);
    // Grid probe around the optimum: no nearby beta does better.
    const double best = prob.value(fit.beta);
    CHECK(fit.log_pl == doctest::Approx(best).epsilon(1e-12));
    for (double d0 : {-0.05, 0.05}) {
        for (double d1 : {-0.05, 0.05}) {
            VectorXd b = fit.beta;
            b[0] += d0;
            b[1] += d1;
            CHECK(prob.value(b) < best);
        }
    }
}

TEST_CASE("problem construction rejects malformed inputs") {
    const auto f = tied_fixture();
    CHECK_THROWS_AS(CoxTvProblem(f.rows, MatrixXd::Zero(3, 2), f.off), std::invalid_argument);
    CHECK_THROWS_AS(CoxTvProblem(f.rows, f.z, VectorXd::Zero(2)), std::invalid_argument);
    auto bad = f.rows;
    bad[0].start = bad[0].stop;  // empty exposure interval
    CHECK_THROWS_AS(CoxTvProblem(bad, f.z, f.off), std::invalid_argument);

    // Zero events: evaluation is defined (empty sum) but fitting refuses.
    auto censored = f.rows;
    for (auto& r : censored) r.event = false;
    CoxTvProblem quiet(censored, f.z, f.off);
    VectorXd beta(2);
    beta << 0.1, 0.2;
    CHECK(quiet.value(beta) == 0.0);
    CHECK_THROWS_AS(newton_fit(quiet, VectorXd::Zero(2)), std::invalid_argument);
}

TEST_CASE("breslow baseline equals Nelson-Aalen at zero linear predictor") {
    auto row = [](std::int64_t id, double a, double b, bool ev) {
        EpisodeRow r;
        r.subject_id = id;
        r.start = a;
        r.stop = b;
        r.event = ev;
        return r;
    };
    // Single-episode subjects: deaths at 1 (risk 5), tie at 2 (risk 4), 4 (risk 1).
    std::vector<EpisodeRow> rows = {row(1, 0.0, 1.0, true), row(2, 0.0, 2.0, true),
                                    row(3, 0.0, 2.0, true), row(4, 0.0, 3.0, false),
                                    row(5, 0.0, 4.0, true)};
    const auto base = breslow_baseline(rows, VectorXd::Zero(5));
    REQUIRE(base.times == std::vector<double>{1.0, 2.0, 4.0});
    REQUIRE(base.increments.size() == 3);
    CHECK(base.increments[0] == doctest::Approx(1.0 / 5.0).epsilon(1e-14));
    CHECK(base.increments[1] == doctest::Approx(2.0 / 4.0).epsilon(1e-14));
    CHECK(base.increments[2] == doctest::Approx(1.0 / 1.0).epsilon(1e-14));
    CHECK(base.cumulative(0.5) == 0.0);
    CHECK(base.cumulative(1.0) == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(base.cumulative(3.9) == doctest::Approx(0.7).epsilon(1e-14));
    CHECK(base.cumulative(10.0) == doctest::Approx(1.7).epsilon(1e-14));

    // A constant linear predictor c scales every increment by exp(-c).
    const auto scaled = breslow_baseline(rows, VectorXd::Constant(5, 1.3));
    for (int k = 0; k < 3; ++k) {
        CHECK(scaled.increments[k] ==
              doctest::Approx(base.increments[k] * std::exp(-1.3)).epsilon(1e-12));
    }

    CHECK_THROWS_AS(breslow_baseline(rows, VectorXd::Zero(4)), std::invalid_argument);
}

TEST_CASE("breslow baseline respects late entry and per-row predictors") {
    auto row = [](std::int64_t id, double a, double b, bool ev) {
        EpisodeRow r;
        r.subject_id = id;
        r.start = a;
        r.stop = b;
        r.event = ev;
        return r;
    };
    // Subject 2 splits at t=1.5; subject 3 enters late at t=2.5.
    std::vector<EpisodeRow> rows = {row(1, 0.0, 2.0, true), row(2, 0.0, 1.5, false),
                                    row(2, 1.5, 3.0, true), row(3, 2.5, 3.0, true)};
    VectorXd lp(4);
    lp << 0.2, -0.1, 0.4, 0.0;
    const auto base = breslow_baseline(rows, lp);
    REQUIRE(base.times == std::vector<double>{2.0, 3.0});
    // Risk at t=2: rows 0 and 2 (episode (1.5,3] covers 2; (0,1.5] does not; (2.5,3] does not).
    const double s0_t2 = std::exp(0.2) + std::exp(0.4);
    CHECK(base.increments[0] == doctest::Approx(1.0 / s0_t2).epsilon(1e-12));
    // Risk at t=3 with a tie: rows 2 and 3.
    const double s0_t3 = std::exp(0.4) + std::exp(0.0);
    CHECK(base.increments[1] == doctest::Approx(2.0 / s0_t3).epsilon(1e-12));
}
