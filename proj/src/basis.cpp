#include "tvcsl/basis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tvcsl {

namespace {

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Truncated-power natural cubic spline component: d_k(x) - d_{K-1}(x) with
// d_k(x) = [(x - k_k)_+^3 - (x - k_K)_+^3] / (k_K - k_k). Linear beyond the
// boundary knots by construction.
double natural_spline_term(double x, const std::vector<double>& knots, std::size_t k) {
    const auto kk = knots.size();
    auto cube_pos = [](double v) { return v > 0.0 ? v * v * v : 0.0; };
    auto d = [&](std::size_t i) {
        const double denom = knots[kk - 1] - knots[i];
        if (denom == 0.0) return 0.0;
        return (cube_pos(x - knots[i]) - cube_pos(x - knots[kk - 1])) / denom;
    };
    return d(k) - d(kk - 2);
}

}  // namespace

BasisKind parse_basis_kind(const std::string& name) {
    if (name == "linear") return BasisKind::linear;
    if (name == "complex") return BasisKind::complex;
    throw std::invalid_argument("unknown basis kind '" + name + "' (linear|complex)");
}

std::string basis_kind_name(BasisKind kind) {
    return kind == BasisKind::linear ? "linear" : "complex";
}

MatrixXd covariate_matrix(const Dataset& data) {
    MatrixXd x(data.subjects.size(), data.p);
    for (std::size_t i = 0; i < data.subjects.size(); ++i) {
        for (int j = 0; j < data.p; ++j) x(i, j) = data.subjects[i].x[j];
    }
    return x;
}

VectorXd FittedBasis::raw_transform(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != p_in_) {
        throw std::invalid_argument("basis input dimension mismatch");
    }
    if (spec_.kind == BasisKind::linear) {
        return Eigen::Map<const VectorXd>(x.data(), p_in_);
    }
    VectorXd out(dim());
    int c = 0;
    for (int j = 0; j < p_in_; ++j) {
        out[c++] = x[j];
        for (int k = 0; k + 2 < static_cast<int>(knots_[j].size()); ++k) {
            out[c++] = natural_spline_term(x[j], knots_[j], k);
        }
    }
    for (int j = 0; j < p_in_; ++j) out[c++] = x[j] * x[j];
    if (spec_.include_pairwise) {
        for (int i = 0; i < p_in_; ++i) {
            for (int j = i + 1; j < p_in_; ++j) out[c++] = x[i] * x[j];
        }
    }
    return out;
}

VectorXd FittedBasis::transform(const std::vector<double>& x) const {
    VectorXd v = raw_transform(x);
    if (spec_.kind == BasisKind::complex && spec_.standardize) {
        v = (v - mean_).cwiseQuotient(sd_);
    }
    return v;
}

MatrixXd FittedBasis::transform(const MatrixXd& x) const {
    MatrixXd out(x.rows(), dim());
    std::vector<double> row(p_in_);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (int j = 0; j < p_in_; ++j) row[j] = x(i, j);
        out.row(i) = transform(row).transpose();
    }
    return out;
}

std::pair<double, VectorXd> FittedBasis::destandardize(const VectorXd& beta) const {
    if (beta.size() != dim()) throw std::invalid_argument("coefficient length mismatch");
    if (spec_.kind == BasisKind::linear || !spec_.standardize) return {0.0, beta};
    VectorXd raw = beta.cwiseQuotient(sd_);
    return {-raw.dot(mean_), raw};
}

FittedBasis fit_basis(const MatrixXd& x, const BasisSpec& spec,
                      const std::vector<std::string>& input_names) {
    if (spec.spline_df < 2) throw std::invalid_argument("spline_df must be >= 2");
    FittedBasis b;
    b.spec_ = spec;
    b.p_in_ = static_cast<int>(x.cols());
    auto name_of = [&](int j) {
        return j < static_cast<int>(input_names.size()) ? input_names[j]
                                                        : "x" + std::to_string(j + 1);
    };
    if (spec.kind == BasisKind::linear) {
        for (int j = 0; j < b.p_in_; ++j) b.names_.push_back(name_of(j));
        return b;
    }
    const int n_interior = spec.spline_df - 1;
    for (int j = 0; j < b.p_in_; ++j) {
        std::vector<double> col(x.rows());
        for (Eigen::Index i = 0; i < x.rows(); ++i) col[i] = x(i, j);
        std::vector<double> knots;
        knots.push_back(*std::min_element(col.begin(), col.end()));
        for (int k = 1; k <= n_interior; ++k) {
            // Interior knots at training quantiles; quartiles when two suffice.
            const double q = n_interior == 2 ? (k == 1 ? 0.25 : 0.75)
                                             : static_cast<double>(k) / (n_interior + 1);
            knots.push_back(quantile(col, q));
        }
        knots.push_back(*std::max_element(col.begin(), col.end()));
        b.knots_.push_back(std::move(knots));
        b.names_.push_back(name_of(j));
        for (int k = 1; k < spec.spline_df; ++k) {
            b.names_.push_back(name_of(j) + "_ns" + std::to_string(k));
        }
    }
    for (int j = 0; j < b.p_in_; ++j) b.names_.push_back(name_of(j) + "_sq");
    if (spec.include_pairwise) {
        for (int i = 0; i < b.p_in_; ++i) {
            for (int j = i + 1; j < b.p_in_; ++j) {
                b.names_.push_back(name_of(i) + ":" + name_of(j));
            }
        }
    }
    // Standardization constants from the raw training expansion.
    MatrixXd raw(x.rows(), b.names_.size());
    std::vector<double> row(b.p_in_);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (int j = 0; j < b.p_in_; ++j) row[j] = x(i, j);
        raw.row(i) = b.raw_transform(row).transpose();
    }
    b.mean_ = raw.colwise().mean();
    b.sd_ = VectorXd::Ones(raw.cols());
    if (x.rows() > 1) {
        for (Eigen::Index c = 0; c < raw.cols(); ++c) {
            const double var =
                (raw.col(c).array() - b.mean_[c]).square().sum() / (x.rows() - 1.0);
            b.sd_[c] = var > 1e-24 ? std::sqrt(var) : 1.0;
        }
    }
    if (!spec.standardize) {
        b.mean_.setZero();
        b.sd_.setOnes();
    }
    return b;
}

}  // namespace tvcsl
