#pragma once

#include <string>
#include <vector>

#include "tvcsl/types.hpp"

namespace tvcsl {

enum class BasisKind { linear, complex };

// `linear` passes covariates through untouched. `complex` concatenates, per
// covariate, a natural cubic spline basis (spline_df columns, the first being
// the identity), then squared terms, then all pairwise products; columns are
// standardized to training mean 0 / variance 1 when `standardize` is set.
struct BasisSpec {
    BasisKind kind = BasisKind::linear;
    int spline_df = 3;
    bool include_pairwise = true;
    bool standardize = true;
};

BasisKind parse_basis_kind(const std::string& name);  // "linear" | "complex"
std::string basis_kind_name(BasisKind kind);

// A basis whose data-dependent pieces (spline knots, standardization
// constants) were fitted on training covariates. spline_df columns per
// covariate require spline_df + 1 knots: boundary knots at the training min
// and max plus spline_df - 1 interior knots at training quantiles (the
// quartiles 25%/75% for spline_df = 3). Beyond the boundary knots the basis
// extrapolates linearly.
class FittedBasis {
public:
    int input_dim() const { return p_in_; }
    int dim() const { return static_cast<int>(names_.size()); }
    const std::vector<std::string>& names() const { return names_; }
    const BasisSpec& spec() const { return spec_; }

    VectorXd transform(const std::vector<double>& x) const;
    MatrixXd transform(const MatrixXd& x) const;  // row-wise

    // De-standardized view of a coefficient vector fitted on the transformed
    // scale: returns (intercept_shift, raw_beta) such that
    // raw_beta . phi_raw(x) + intercept_shift == beta . transform(x).
    std::pair<double, VectorXd> destandardize(const VectorXd& beta) const;

private:
    friend FittedBasis fit_basis(const MatrixXd& x, const BasisSpec& spec,
                                 const std::vector<std::string>& input_names);
    VectorXd raw_transform(const std::vector<double>& x) const;

    BasisSpec spec_;
    int p_in_ = 0;
    std::vector<std::vector<double>> knots_;  // per covariate, ascending
    VectorXd mean_, sd_;                      // per output column (complex only)
    std::vector<std::string> names_;
};

FittedBasis fit_basis(const MatrixXd& x, const BasisSpec& spec,
                      const std::vector<std::string>& input_names = {});

// Covariate matrix (subjects x p) of a dataset.
MatrixXd covariate_matrix(const Dataset& data);

}  // namespace tvcsl
