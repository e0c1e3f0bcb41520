#include "tvcsl/second_stage.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace tvcsl {

SecondStageProblem::SecondStageProblem(std::vector<SecondStageSubject> subjects)
    : subjects_(std::move(subjects)) {
    if (subjects_.empty()) throw std::invalid_argument("second stage needs subjects");
    dim_ = static_cast<int>(subjects_[0].phi.size());
    int max_stratum = 0;
    for (const auto& s : subjects_) {
        if (static_cast<int>(s.phi.size()) != dim_) {
            throw std::invalid_argument("second stage: phi dimension mismatch");
        }
        if (!(s.observed > 0.0)) {
            throw std::invalid_argument("second stage: observed time must be positive");
        }
        max_stratum = std::max(max_stratum, s.stratum);
        if (s.stratum < 0) throw std::invalid_argument("second stage: negative stratum");
    }
    strata_.resize(max_stratum + 1);
    for (int i = 0; i < n_subjects(); ++i) {
        strata_[subjects_[i].stratum].by_observed.push_back(i);
    }
    for (auto& st : strata_) {
        std::sort(st.by_observed.begin(), st.by_observed.end(), [&](int a, int b) {
            return subjects_[a].observed > subjects_[b].observed;
        });
        std::map<double, std::vector<int>, std::greater<double>> groups;
        for (int i : st.by_observed) {
            if (subjects_[i].event) groups[subjects_[i].observed].push_back(i);
        }
        for (auto& [t, g] : groups) {
            st.event_times.push_back(t);
            n_events_ += static_cast<int>(g.size());
            st.event_subjects.push_back(std::move(g));
        }
    }
}

void SecondStageProblem::sweep(const VectorXd& beta, bool want_gh,
                               ObjectiveEval& out) const {
    out.value = 0.0;
    if (want_gh) {
        out.grad = VectorXd::Zero(dim_);
        out.hess = MatrixXd::Zero(dim_, dim_);
    }
    // phi' beta is time-invariant; cache it per subject.
    VectorXd dot(n_subjects());
    for (int i = 0; i < n_subjects(); ++i) dot[i] = subjects_[i].phi.dot(beta);

    std::vector<double> lp, cw;  // per active subject at the current event time
    std::vector<int> active;
    VectorXd s1(dim_);
    MatrixXd s2(dim_, dim_);
    for (const auto& st : strata_) {
        active.clear();
        std::size_t next_add = 0;
        for (std::size_t k = 0; k < st.event_times.size(); ++k) {
            const double t = st.event_times[k];
            while (next_add < st.by_observed.size() &&
                   subjects_[st.by_observed[next_add]].observed >= t) {
                active.push_back(st.by_observed[next_add++]);
            }
            // Recompute every at-risk subject's offset and covariates at t.
            lp.resize(active.size());
            cw.resize(active.size());
            double shift = -kInfTime;
            for (std::size_t ai = 0; ai < active.size(); ++ai) {
                const auto& s = subjects_[active[ai]];
                const double a = s.prop_rate > 0.0 ? -std::expm1(-s.prop_rate * t) : 0.0;
                const double w_t = s.adoption < t ? 1.0 : 0.0;
                cw[ai] = w_t - a;
                lp[ai] = s.tau_hat * a + s.eta0_hat + cw[ai] * dot[active[ai]];
                shift = std::max(shift, lp[ai]);
            }
            double s0 = 0.0;
            if (want_gh) {
                s1.setZero();
                s2.setZero();
            }
            for (std::size_t ai = 0; ai < active.size(); ++ai) {
                const double w = std::exp(lp[ai] - shift);
                s0 += w;
                if (want_gh) {
                    const double c = w * cw[ai];
                    s1.noalias() += c * subjects_[active[ai]].phi;
                    s2.selfadjointView<Eigen::Lower>().rankUpdate(
                        subjects_[active[ai]].phi, c * cw[ai]);
                }
            }
            const auto& ev = st.event_subjects[k];
            const double d = static_cast<double>(ev.size());
            for (int e : ev) {
                // The event subject is at risk at its own event time; its lp
                // was just computed above. Recompute directly (O(1)).
                const auto& s = subjects_[e];
                const double a = s.prop_rate > 0.0 ? -std::expm1(-s.prop_rate * t) : 0.0;
                const double c = (s.adoption < t ? 1.0 : 0.0) - a;
                out.value += s.tau_hat * a + s.eta0_hat + c * dot[e];
                if (want_gh) out.grad.noalias() += c * s.phi;
            }
            out.value -= d * (shift + std::log(s0));
            if (want_gh) {
                const VectorXd u = s1 / s0;
                out.grad.noalias() -= d * u;
                MatrixXd m2 = s2.selfadjointView<Eigen::Lower>();
                out.hess.noalias() -= d * (m2 / s0 - u * u.transpose());
            }
        }
    }
    const double n = static_cast<double>(n_subjects());
    out.value /= n;
    if (want_gh) {
        out.grad /= n;
        out.hess /= n;
    }
}

double SecondStageProblem::value(const VectorXd& beta) const {
    ObjectiveEval out;
    sweep(beta, false, out);
    return out.value;
}

ObjectiveEval SecondStageProblem::value_grad_hess(const VectorXd& beta) const {
    ObjectiveEval out;
    sweep(beta, true, out);
    return out;
}

FitResult newton_fit(const SecondStageProblem& problem, const VectorXd& beta0,
                     const NewtonOptions& opts) {
    if (problem.n_events() < 1) throw std::invalid_argument("newton_fit needs >= 1 event");
    if (beta0.size() != problem.dim()) {
        throw std::invalid_argument("beta0 length != design width");
    }
    auto eval = [&](const VectorXd& b) { return problem.value_grad_hess(b); };
    return maximize_concave(eval, beta0, opts, static_cast<double>(problem.n_subjects()));
}

}  // namespace tvcsl
