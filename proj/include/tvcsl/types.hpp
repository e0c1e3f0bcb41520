#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace tvcsl {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kInfTime = std::numeric_limits<double>::infinity();

// One unit's covariates, adoption time, observed time and event indicator.
// adoption_time == +inf means the unit never adopts treatment.
struct SubjectRecord {
    std::int64_t id = 0;
    std::vector<double> x;
    double adoption_time = kInfTime;
    double observed_time = 0.0;
    bool event = false;
};

struct Dataset {
    std::vector<SubjectRecord> subjects;
    int p = 0;
    std::vector<std::string> column_names;  // covariate names, length p

    std::size_t size() const { return subjects.size(); }
};

// Throws std::invalid_argument if any record violates the domain invariants
// (positive observed time, nonnegative adoption time, consistent dimension,
// unique ids).
void validate(const Dataset& data);

// One (start, stop] counting-process interval. Treatment status is constant
// within an interval; `z` and `offset` are filled by the model layer.
struct EpisodeRow {
    std::int64_t subject_id = 0;
    double start = 0.0;
    double stop = 0.0;
    bool event = false;
    bool treated = false;
};

// Splits one subject at its adoption time: untreated [0, A) exposure first,
// treated [A, U) exposure second. Adoption at or after the observed time
// (including the tie A == U) contributes no treated exposure, matching the
// strict inequality in W(t) = 1(A < t).
std::vector<EpisodeRow> expand_to_episodes(const SubjectRecord& subject);

// All episodes of a dataset in subject order.
std::vector<EpisodeRow> expand_to_episodes(const Dataset& data);

// Subjects with an episode satisfying start < t <= stop.
std::vector<std::int64_t> risk_set(const std::vector<EpisodeRow>& episodes, double t);

struct FitResult {
    VectorXd beta;
    double log_pl = 0.0;
    int n_iterations = 0;
    bool converged = false;
    double gradient_norm = 0.0;
    std::optional<VectorXd> standard_errors;
};

}  // namespace tvcsl
