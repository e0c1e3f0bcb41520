#pragma once

#include <string>
#include <vector>

#include "tvcsl/types.hpp"

namespace tvcsl {

// Dataset CSV: header `id,<covariate names...>,adoption_time,observed_time,event`.
// adoption_time may be the literal `inf`; event is 0/1. UTF-8, comma separated,
// `.` decimal separator. Malformed rows raise std::runtime_error with the line
// number.
Dataset read_dataset_csv(const std::string& path);
void write_dataset_csv(const Dataset& data, const std::string& path);

// Per-subject ground truth emitted next to simulated datasets.
struct TruthRow {
    std::int64_t id = 0;
    double tau_true = 0.0;
    double eta0_true = 0.0;
};
void write_truth_csv(const std::vector<TruthRow>& rows, const std::string& path);
std::vector<TruthRow> read_truth_csv(const std::string& path);

}  // namespace tvcsl
