#include "tvcsl/coxtv.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <unordered_set>

namespace tvcsl {

CoxTvProblem::CoxTvProblem(std::vector<EpisodeRow> rows, MatrixXd design, VectorXd offsets)
    : rows_(std::move(rows)), design_(std::move(design)), offsets_(std::move(offsets)) {
    const int m = static_cast<int>(rows_.size());
    if (design_.rows() != m) throw std::invalid_argument("design row count != episode count");
    if (offsets_.size() != m) throw std::invalid_argument("offset count != episode count");
    std::unordered_set<std::int64_t> ids;
    for (const auto& r : rows_) {
        if (!(r.start < r.stop)) throw std::invalid_argument("episode must have start < stop");
        if (!std::isfinite(r.stop)) throw std::invalid_argument("episode stop must be finite");
        ids.insert(r.subject_id);
    }
    n_subjects_ = static_cast<int>(ids.size());

    by_stop_.resize(m);
    by_start_.resize(m);
    for (int i = 0; i < m; ++i) by_stop_[i] = by_start_[i] = i;
    std::sort(by_stop_.begin(), by_stop_.end(),
              [&](int a, int b) { return rows_[a].stop > rows_[b].stop; });
    std::sort(by_start_.begin(), by_start_.end(),
              [&](int a, int b) { return rows_[a].start > rows_[b].start; });

    std::map<double, std::vector<int>, std::greater<double>> groups;
    for (int i = 0; i < m; ++i) {
        if (rows_[i].event) groups[rows_[i].stop].push_back(i);
    }
    for (auto& [t, g] : groups) {
        event_times_.push_back(t);
        n_events_ += static_cast<int>(g.size());
        event_rows_.push_back(std::move(g));
    }
}

struct CoxTvProblem::Sums {
    double value = 0.0;
    VectorXd grad;
    MatrixXd hess;
    VectorXd row_grad;
    VectorXd row_curv;
};

void CoxTvProblem::sweep(const VectorXd& beta, bool want_gh, bool want_row,
                         Sums& out) const {
    const int m = n_rows();
    const int q = dim();
    VectorXd lp = offsets_;
    if (q > 0) lp.noalias() += design_ * beta;
    const double shift = m > 0 ? lp.maxCoeff() : 0.0;
    VectorXd w = (lp.array() - shift).exp();

    double s0 = 0.0;
    VectorXd s1;
    MatrixXd s2;
    if (want_gh) {
        out.grad = VectorXd::Zero(q);
        out.hess = MatrixXd::Zero(q, q);
        s1 = VectorXd::Zero(q);
        s2 = MatrixXd::Zero(q, q);
    }
    // Running sums of d_t/S0 and d_t/S0^2 over event times already processed
    // (i.e. all event times >= the current one); entry/exit snapshots turn
    // them into per-row risk-exposure integrals.
    double cum1 = 0.0, cum2 = 0.0;
    std::vector<double> entry1, entry2, exit1, exit2;
    std::vector<char> removed, added;
    if (want_row) {
        entry1.assign(m, 0.0);
        entry2.assign(m, 0.0);
        exit1.assign(m, 0.0);
        exit2.assign(m, 0.0);
        removed.assign(m, 0);
        added.assign(m, 0);
    }

    std::size_t ia = 0, ir = 0;
    double value = 0.0;
    for (std::size_t k = 0; k < event_times_.size(); ++k) {
        const double t = event_times_[k];
        while (ia < by_stop_.size() && rows_[by_stop_[ia]].stop >= t) {
            const int j = by_stop_[ia++];
            if (want_row) {
                entry1[j] = cum1;
                entry2[j] = cum2;
                added[j] = 1;
            }
            s0 += w[j];
            if (want_gh) {
                s1.noalias() += w[j] * design_.row(j).transpose();
                s2.noalias() += w[j] * design_.row(j).transpose() * design_.row(j);
            }
        }
        while (ir < by_start_.size() && rows_[by_start_[ir]].start >= t) {
            const int j = by_start_[ir++];
            if (want_row) {
                exit1[j] = cum1;
                exit2[j] = cum2;
                removed[j] = 1;
            }
            s0 -= w[j];
            if (want_gh) {
                s1.noalias() -= w[j] * design_.row(j).transpose();
                s2.noalias() -= w[j] * design_.row(j).transpose() * design_.row(j);
            }
        }
        const auto& ev = event_rows_[k];
        const double d = static_cast<double>(ev.size());
        for (int e : ev) value += lp[e];
        value -= d * (shift + std::log(s0));
        if (want_gh) {
            const VectorXd u = s1 / s0;
            for (int e : ev) out.grad.noalias() += design_.row(e).transpose();
            out.grad.noalias() -= d * u;
            out.hess.noalias() -= d * (s2 / s0 - u * u.transpose());
        }
        cum1 += d / s0;
        cum2 += d / (s0 * s0);
    }

    const double n = static_cast<double>(std::max(n_subjects_, 1));
    out.value = value / n;
    if (want_gh) {
        out.grad /= n;
        out.hess /= n;
    }
    if (want_row) {
        out.row_grad.resize(m);
        out.row_curv.resize(m);
        for (int j = 0; j < m; ++j) {
            // Episodes ending before the earliest event time are at risk
            // nowhere and carry no score.
            if (!added[j]) {
                out.row_grad[j] = 0.0;
                out.row_curv[j] = 0.0;
                continue;
            }
            const double r1 = (removed[j] ? exit1[j] : cum1) - entry1[j];
            const double r2 = (removed[j] ? exit2[j] : cum2) - entry2[j];
            const double d = rows_[j].event ? 1.0 : 0.0;
            out.row_grad[j] = d - w[j] * r1;
            out.row_curv[j] = std::max(0.0, w[j] * r1 - w[j] * w[j] * r2);
        }
    }
}

double CoxTvProblem::value(const VectorXd& beta) const {
    Sums s;
    sweep(beta, false, false, s);
    return s.value;
}

CoxTvProblem::Derivs CoxTvProblem::value_grad_hess(const VectorXd& beta) const {
    Sums s;
    sweep(beta, true, false, s);
    return {s.value, std::move(s.grad), std::move(s.hess)};
}

CoxTvProblem::RowDerivs CoxTvProblem::row_derivs(const VectorXd& beta) const {
    Sums s;
    sweep(beta, false, true, s);
    return {s.value, std::move(s.row_grad), std::move(s.row_curv)};
}

FitResult newton_fit(const CoxTvProblem& problem, const VectorXd& beta0,
                     const NewtonOptions& opts) {
    if (problem.n_events() < 1) throw std::invalid_argument("newton_fit needs >= 1 event");
    if (beta0.size() != problem.dim()) {
        throw std::invalid_argument("beta0 length != design width");
    }
    auto eval = [&](const VectorXd& b) {
        auto d = problem.value_grad_hess(b);
        return ObjectiveEval{d.value, std::move(d.grad), std::move(d.hess)};
    };
    return maximize_concave(eval, beta0, opts, static_cast<double>(problem.n_subjects()));
}

double BaselineHazard::cumulative(double t) const {
    double acc = 0.0;
    for (std::size_t k = 0; k < times.size() && times[k] <= t; ++k) acc += increments[k];
    return acc;
}

BaselineHazard breslow_baseline(const std::vector<EpisodeRow>& rows, const VectorXd& lp) {
    if (lp.size() != static_cast<Eigen::Index>(rows.size())) {
        throw std::invalid_argument("lp length != episode count");
    }
    const double shift = rows.empty() ? 0.0 : lp.maxCoeff();
    std::vector<int> by_stop(rows.size()), by_start(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) by_stop[i] = by_start[i] = static_cast<int>(i);
    std::sort(by_stop.begin(), by_stop.end(),
              [&](int a, int b) { return rows[a].stop > rows[b].stop; });
    std::sort(by_start.begin(), by_start.end(),
              [&](int a, int b) { return rows[a].start > rows[b].start; });
    std::map<double, int, std::greater<>> deaths;  // distinct event times, descending
    for (const auto& r : rows) {
        if (r.event) ++deaths[r.stop];
    }

    BaselineHazard out;
    std::size_t add = 0, rem = 0;
    double s0 = 0.0;
    for (const auto& [t, d] : deaths) {
        while (add < by_stop.size() && rows[by_stop[add]].stop >= t) {
            s0 += std::exp(lp[by_stop[add]] - shift);
            ++add;
        }
        while (rem < by_start.size() && rows[by_start[rem]].start >= t) {
            s0 -= std::exp(lp[by_start[rem]] - shift);
            ++rem;
        }
        out.times.push_back(t);
        out.increments.push_back(d / (s0 * std::exp(shift)));
    }
    std::reverse(out.times.begin(), out.times.end());
    std::reverse(out.increments.begin(), out.increments.end());
    return out;
}

}  // namespace tvcsl
