#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tvcsl/bench.hpp"

namespace tvcsl {

// Declarative benchmark grid. List keys multiply out to cells; scalar keys
// apply to every cell.
struct GridConfig {
    std::vector<int> n;                     // required, at least one entry
    std::vector<std::string> methods{"s-lasso", "tv-csl"};
    std::vector<BasisKind> eta_bases{BasisKind::linear, BasisKind::complex};
    std::vector<BasisKind> hte_bases{BasisKind::linear};
    std::vector<std::string> propensity{"correct"};
    int reps = 100;
    std::uint64_t base_seed = 1;
    int test_n = 2000;
    double rate_floor = 0.05;
};

// Parses the TOML subset used for grid files: an optional [grid] section,
// `key = value` pairs, scalars (integers, floats, booleans, quoted strings),
// flat arrays, and # comments. Unknown keys and type mismatches are errors
// with line numbers.
GridConfig parse_grid_text(const std::string& text);
GridConfig parse_grid_file(const std::string& path);

// Cartesian product n x method x eta_basis x hte_basis x propensity, in that
// nesting order.
std::vector<BenchCell> expand_grid(const GridConfig& config);

}  // namespace tvcsl
