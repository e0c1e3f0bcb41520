#include "tvcsl/heart.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "tvcsl/coxtv.hpp"
#include "tvcsl/estimators.hpp"
#include "tvcsl/parallel.hpp"
#include "tvcsl/propensity.hpp"
#include "tvcsl/rng.hpp"

namespace tvcsl {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

bool is_missing(const std::string& field) {
    if (field.empty()) return true;
    std::string low;
    for (char c : field) low += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return low == "na" || low == "nan" || low == "inf";
}

double parse_number(const std::string& field, int line_no, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(field, &used);
        if (used != field.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("heart data, line " + std::to_string(line_no) +
                                    ": cannot parse " + what + " '" + field + "'");
    }
}

int parse_binary(const std::string& field, int line_no, const std::string& what) {
    if (field == "0") return 0;
    if (field == "1") return 1;
    throw std::invalid_argument("heart data, line " + std::to_string(line_no) + ": " +
                                what + " must be 0 or 1, got '" + field + "'");
}

bool is_binary_column(const Dataset& data, int j) {
    std::set<double> vals;
    for (const auto& s : data.subjects) {
        vals.insert(s.x[j]);
        if (vals.size() > 2) return false;
    }
    return true;
}

struct ColumnScale {
    double mean = 0.0;
    double sd = 1.0;
};

ColumnScale column_scale(const Dataset& data, int j) {
    const auto n = static_cast<double>(data.subjects.size());
    ColumnScale out;
    for (const auto& s : data.subjects) out.mean += s.x[j];
    out.mean /= n;
    if (data.subjects.size() > 1) {
        double ss = 0.0;
        for (const auto& s : data.subjects) {
            ss += (s.x[j] - out.mean) * (s.x[j] - out.mean);
        }
        const double sd = std::sqrt(ss / (n - 1.0));
        if (sd > 0.0) out.sd = sd;
    }
    return out;
}

// Z-scores every non-binary covariate in place.
void standardize_continuous(Dataset& data) {
    for (int j = 0; j < data.p; ++j) {
        if (is_binary_column(data, j)) continue;
        const ColumnScale sc = column_scale(data, j);
        for (auto& s : data.subjects) s.x[j] = (s.x[j] - sc.mean) / sc.sd;
    }
}

double wald_p(double coef, double se) {
    if (!(se > 0.0)) return 1.0;
    return std::erfc(std::abs(coef / se) / std::sqrt(2.0));
}

std::vector<CoefRow> fit_interaction_model(const std::vector<EpisodeRow>& rows,
                                           const Dataset& data,
                                           const std::vector<bool>& row_treated) {
    const int p = data.p;
    std::map<std::int64_t, int> pos;
    for (std::size_t i = 0; i < data.subjects.size(); ++i) {
        pos[data.subjects[i].id] = static_cast<int>(i);
    }
    MatrixXd design(rows.size(), 2 * p + 1);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& x = data.subjects[pos.at(rows[r].subject_id)].x;
        const double w = row_treated[r] ? 1.0 : 0.0;
        for (int j = 0; j < p; ++j) design(r, j) = x[j];
        design(r, p) = w;
        for (int j = 0; j < p; ++j) design(r, p + 1 + j) = w * x[j];
    }
    CoxTvProblem problem(rows, std::move(design),
                         VectorXd::Zero(static_cast<Eigen::Index>(rows.size())));
    NewtonOptions opts;
    opts.compute_se = true;
    FitResult fit = newton_fit(problem, VectorXd::Zero(problem.dim()), opts);
    if (!fit.converged) {
        throw std::runtime_error("interaction Cox model did not converge");
    }
    std::vector<CoefRow> out(2 * p + 1);
    for (int k = 0; k < 2 * p + 1; ++k) {
        CoefRow& row = out[k];
        if (k < p) {
            row.term = data.column_names[k];
        } else if (k == p) {
            row.term = "trt";
        } else {
            row.term = data.column_names[k - p - 1] + ":trt";
        }
        row.coef = fit.beta[k];
        row.se = (*fit.standard_errors)[k];
        row.p = wald_p(row.coef, row.se);
    }
    return out;
}

}  // namespace

HeartIngest heart_to_dataset(const std::vector<HeartRecord>& records) {
    HeartIngest out;
    out.data.p = 3;
    out.data.column_names = {"age", "surgery", "year"};
    for (const auto& r : records) {
        SubjectRecord s;
        s.id = r.id;
        s.x = {r.age, static_cast<double>(r.surgery), r.year};
        s.adoption_time = r.wait_time;
        if (s.adoption_time >= r.futime && s.adoption_time < kInfTime) {
            out.warnings.push_back("subject " + std::to_string(r.id) +
                                   ": wait_time >= futime, transplant not realized "
                                   "within follow-up; treating as never transplanted");
            s.adoption_time = kInfTime;
        }
        s.observed_time = r.futime;
        s.event = r.fustat != 0;
        out.data.subjects.push_back(std::move(s));
    }
    validate(out.data);
    return out;
}

HeartIngest ingest_heart(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open heart data file " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("heart data: empty file");
    const std::string expected = "id,age,year,surgery,wait_time,futime,fustat";
    {
        std::string got;
        for (const auto& f : split_csv(line)) {
            if (!got.empty()) got += ',';
            got += f;
        }
        if (got != expected) {
            throw std::invalid_argument("heart data: expected header '" + expected +
                                        "', got '" + got + "'");
        }
    }
    std::vector<HeartRecord> records;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != 7) {
            throw std::invalid_argument("heart data, line " + std::to_string(line_no) +
                                        ": expected 7 fields, got " +
                                        std::to_string(fields.size()));
        }
        HeartRecord r;
        r.id = static_cast<std::int64_t>(parse_number(fields[0], line_no, "id"));
        r.age = parse_number(fields[1], line_no, "age");
        r.year = parse_number(fields[2], line_no, "year");
        r.surgery = parse_binary(fields[3], line_no, "surgery");
        r.wait_time =
            is_missing(fields[4]) ? kInfTime : parse_number(fields[4], line_no, "wait_time");
        if (r.wait_time < 0.0) {
            throw std::invalid_argument("heart data, line " + std::to_string(line_no) +
                                        ": negative wait_time");
        }
        r.futime = parse_number(fields[5], line_no, "futime");
        if (!(r.futime > 0.0)) {
            throw std::invalid_argument("heart data, line " + std::to_string(line_no) +
                                        ": futime must be positive");
        }
        r.fustat = parse_binary(fields[6], line_no, "fustat");
        records.push_back(r);
    }
    return heart_to_dataset(records);
}

std::vector<SummaryRow> heart_summary(const Dataset& data) {
    validate(data);
    if (data.subjects.empty()) throw std::invalid_argument("empty dataset");
    std::vector<SummaryRow> out;
    auto push = [&](const std::string& name, auto value_of) {
        const auto n = static_cast<double>(data.subjects.size());
        SummaryRow row;
        row.variable = name;
        for (const auto& s : data.subjects) row.mean += value_of(s);
        row.mean /= n;
        if (data.subjects.size() > 1) {
            double ss = 0.0;
            for (const auto& s : data.subjects) {
                ss += (value_of(s) - row.mean) * (value_of(s) - row.mean);
            }
            row.sd = std::sqrt(ss / (n - 1.0));
        }
        out.push_back(std::move(row));
    };
    for (int j = 0; j < data.p; ++j) {
        push(data.column_names[j], [j](const SubjectRecord& s) { return s.x[j]; });
    }
    push("trt", [](const SubjectRecord& s) {
        return s.adoption_time < s.observed_time ? 1.0 : 0.0;
    });
    return out;
}

FixedVsTvResult compare_fixed_vs_timevarying(const Dataset& data, bool standardize) {
    validate(data);
    Dataset d = data;
    if (standardize) standardize_continuous(d);

    FixedVsTvResult out;
    {
        // Transplant as a baseline covariate: one episode per subject.
        std::vector<EpisodeRow> rows;
        std::vector<bool> treated;
        for (const auto& s : d.subjects) {
            rows.push_back({s.id, 0.0, s.observed_time, s.event, false});
            treated.push_back(s.adoption_time < s.observed_time);
        }
        out.fixed = fit_interaction_model(rows, d, treated);
    }
    {
        const std::vector<EpisodeRow> rows = expand_to_episodes(d);
        std::vector<bool> treated;
        for (const auto& r : rows) treated.push_back(r.treated);
        out.time_varying = fit_interaction_model(rows, d, treated);
    }
    return out;
}

SemiSynthResult semi_synthetic_study(const Dataset& data, int reps, std::uint64_t seed,
                                     int threads) {
    validate(data);
    if (reps < 1) throw std::invalid_argument("reps must be >= 1");

    // Binary covariates are excluded up front (cross-fitting a small sample
    // can leave a fold with a near-constant indicator); the rest is z-scored
    // so the penalty treats coefficients comparably.
    std::vector<int> keep;
    for (int j = 0; j < data.p; ++j) {
        if (!is_binary_column(data, j)) keep.push_back(j);
    }
    if (keep.empty()) {
        throw std::invalid_argument("semi-synthetic study: no continuous covariates");
    }
    Dataset reduced;
    reduced.p = static_cast<int>(keep.size());
    for (int j : keep) reduced.column_names.push_back(data.column_names[j]);
    for (const auto& s : data.subjects) {
        SubjectRecord r = s;
        r.x.clear();
        for (int j : keep) r.x.push_back(s.x[j]);
        reduced.subjects.push_back(std::move(r));
    }
    standardize_continuous(reduced);

    int year_idx = -1;
    for (int j = 0; j < reduced.p; ++j) {
        if (reduced.column_names[j] == "year") year_idx = j;
    }
    if (year_idx < 0) {
        throw std::invalid_argument("semi-synthetic study expects a 'year' covariate");
    }
    const std::vector<int> prop_subset{year_idx};
    const auto n = reduced.subjects.size();

    // Pseudo-truth: tau* from TV-CSL with linear bases, eta0* from the
    // full-data penalized first stage, and a Breslow step baseline under the
    // composite linear predictor. Together they define the generative hazard.
    BasisSpec linear_spec;
    linear_spec.kind = BasisKind::linear;
    SemiSynthResult out;
    {
        EstimatorOptions opts;
        opts.seed = Rng::derive(seed, 3);
        CrossFitPlan plan = make_cross_fit_plan(reduced, Rng::derive(seed, 1));
        HteModel pseudo =
            tvcsl_fit(reduced, linear_spec, linear_spec, prop_subset, plan, opts);
        out.tau_star.resize(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            out.tau_star[static_cast<Eigen::Index>(i)] =
                predict_hte(pseudo, reduced.subjects[i].x);
        }
    }
    VectorXd eta0_star(static_cast<Eigen::Index>(n));
    {
        EstimatorOptions opts;
        opts.seed = Rng::derive(seed, 2);
        StageModel stage = first_stage_fit(reduced, linear_spec, linear_spec, opts);
        for (std::size_t i = 0; i < n; ++i) {
            eta0_star[static_cast<Eigen::Index>(i)] = stage.eta0_at(reduced.subjects[i].x);
        }
    }
    BaselineHazard baseline;
    {
        std::map<std::int64_t, int> pos;
        for (std::size_t i = 0; i < n; ++i) pos[reduced.subjects[i].id] = static_cast<int>(i);
        const std::vector<EpisodeRow> rows = expand_to_episodes(reduced);
        VectorXd lp(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const int i = pos.at(rows[r].subject_id);
            lp[static_cast<Eigen::Index>(r)] =
                eta0_star[i] + (rows[r].treated ? out.tau_star[i] : 0.0);
        }
        baseline = breslow_baseline(rows, lp);
    }
    const PropensityModel prop = fit_propensity(reduced, prop_subset);
    out.alpha0 = prop.intercept;
    out.alpha_year = prop.theta[0];

    struct CellSpec {
        std::string method;
        BasisKind eta;
    };
    const std::vector<CellSpec> specs{{"s-lasso", BasisKind::linear},
                                      {"s-lasso", BasisKind::complex},
                                      {"tv-csl", BasisKind::linear},
                                      {"tv-csl", BasisKind::complex}};
    std::vector<std::vector<double>> mse(specs.size(), std::vector<double>(reps, std::nan("")));
    std::vector<std::vector<std::string>> errors(specs.size(),
                                                 std::vector<std::string>(reps));

    parallel_for(reps, threads, [&](int rep) {
        const std::uint64_t rep_seed = Rng::derive(seed, 1000 + static_cast<std::uint64_t>(rep));
        Dataset synth = reduced;
        for (std::size_t i = 0; i < n; ++i) {
            Rng rng(rep_seed, i);
            SubjectRecord& s = synth.subjects[i];
            const double adoption = rng.exponential(prop.rate(s.x));
            const double target = rng.exponential(1.0);
            // Generalized inverse of the step cumulative hazard, with the
            // hazard multiplier switching once adoption lies strictly in the
            // past.
            const double e0 = std::exp(eta0_star[static_cast<Eigen::Index>(i)]);
            const double e1 =
                std::exp(eta0_star[static_cast<Eigen::Index>(i)] +
                         out.tau_star[static_cast<Eigen::Index>(i)]);
            double cum = 0.0;
            double event_time = kInfTime;
            for (std::size_t k = 0; k < baseline.times.size(); ++k) {
                cum += baseline.increments[k] * (baseline.times[k] > adoption ? e1 : e0);
                if (cum >= target) {
                    event_time = baseline.times[k];
                    break;
                }
            }
            const double censor = reduced.subjects[i].observed_time;
            s.adoption_time = adoption;
            s.event = event_time <= censor;
            s.observed_time = s.event ? event_time : censor;
        }
        for (std::size_t c = 0; c < specs.size(); ++c) {
            try {
                BasisSpec eta_spec;
                eta_spec.kind = specs[c].eta;
                EstimatorOptions opts;
                opts.seed = Rng::derive(rep_seed, 10 + c);
                HteModel model;
                if (specs[c].method == "s-lasso") {
                    model = s_lasso_fit(synth, eta_spec, linear_spec, opts);
                } else {
                    CrossFitPlan plan =
                        make_cross_fit_plan(synth, Rng::derive(rep_seed, 20 + c));
                    model = tvcsl_fit(synth, eta_spec, linear_spec, prop_subset, plan, opts);
                }
                double acc = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double d = predict_hte(model, reduced.subjects[i].x) -
                                     out.tau_star[static_cast<Eigen::Index>(i)];
                    acc += d * d;
                }
                mse[c][rep] = acc / static_cast<double>(n);
            } catch (const std::exception& e) {
                errors[c][rep] = e.what();
            }
        }
    });

    for (std::size_t c = 0; c < specs.size(); ++c) {
        SemiSynthCell cell;
        cell.method = specs[c].method;
        cell.eta_basis = specs[c].eta;
        std::vector<double> ok;
        for (int r = 0; r < reps; ++r) {
            if (std::isnan(mse[c][r])) {
                ++cell.reps_failed;
                cell.failure_messages.push_back("rep " + std::to_string(r) + ": " +
                                                errors[c][r]);
            } else {
                ++cell.reps_ok;
                ok.push_back(mse[c][r]);
            }
        }
        if (!ok.empty()) {
            double mean = 0.0;
            for (double v : ok) mean += v;
            mean /= static_cast<double>(ok.size());
            cell.mse_mean = mean;
            if (ok.size() > 1) {
                double ss = 0.0;
                for (double v : ok) ss += (v - mean) * (v - mean);
                cell.mse_mc_se = std::sqrt(ss / (static_cast<double>(ok.size()) - 1.0)) /
                                 std::sqrt(static_cast<double>(ok.size()));
            }
        }
        out.cells.push_back(std::move(cell));
    }
    return out;
}

}  // namespace tvcsl
