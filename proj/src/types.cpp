#include "tvcsl/types.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace tvcsl {

void validate(const Dataset& data) {
    std::unordered_set<std::int64_t> seen;
    for (const auto& s : data.subjects) {
        if (!(s.observed_time > 0.0)) {
            throw std::invalid_argument("subject " + std::to_string(s.id) +
                                        ": observed_time must be positive");
        }
        if (std::isnan(s.adoption_time) || s.adoption_time < 0.0) {
            throw std::invalid_argument("subject " + std::to_string(s.id) +
                                        ": adoption_time must be >= 0 or inf");
        }
        if (static_cast<int>(s.x.size()) != data.p) {
            throw std::invalid_argument("subject " + std::to_string(s.id) +
                                        ": covariate length mismatch");
        }
        if (!seen.insert(s.id).second) {
            throw std::invalid_argument("duplicate subject id " + std::to_string(s.id));
        }
    }
    if (static_cast<int>(data.column_names.size()) != data.p) {
        throw std::invalid_argument("column_names length must equal p");
    }
}

std::vector<EpisodeRow> expand_to_episodes(const SubjectRecord& s) {
    std::vector<EpisodeRow> rows;
    const double a = s.adoption_time;
    const double u = s.observed_time;
    if (a <= 0.0) {
        rows.push_back({s.id, 0.0, u, s.event, true});
    } else if (a < u) {
        rows.push_back({s.id, 0.0, a, false, false});
        rows.push_back({s.id, a, u, s.event, true});
    } else {
        rows.push_back({s.id, 0.0, u, s.event, false});
    }
    return rows;
}

std::vector<EpisodeRow> expand_to_episodes(const Dataset& data) {
    std::vector<EpisodeRow> rows;
    rows.reserve(data.subjects.size() * 2);
    for (const auto& s : data.subjects) {
        auto r = expand_to_episodes(s);
        rows.insert(rows.end(), r.begin(), r.end());
    }
    return rows;
}

std::vector<std::int64_t> risk_set(const std::vector<EpisodeRow>& episodes, double t) {
    std::vector<std::int64_t> ids;
    for (const auto& e : episodes) {
        if (e.start < t && t <= e.stop) ids.push_back(e.subject_id);
    }
    return ids;
}

}  // namespace tvcsl
