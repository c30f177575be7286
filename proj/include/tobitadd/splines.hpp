#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "tobitadd/errors.hpp"

namespace tobitadd {

/// Per-covariate B-spline configuration. kappa = degree + 1 + interior_knots
/// basis functions before the drop-one identifiability rule. The knot vector
/// is clamped (endpoints repeated degree+1 times) with equally spaced
/// interior knots on [0,1]; covariate values are affinely mapped from
/// [domain_lo, domain_hi] onto [0,1] and clamped at the boundary.
struct SplineSpec {
    int degree = 3;
    int interior_knots = 0;
    double domain_lo = 0.0;
    double domain_hi = 1.0;

    int kappa() const { return degree + 1 + interior_knots; }

    static SplineSpec from_kappa(int kappa, int degree = 3) {
        if (degree < 1) throw std::invalid_argument("SplineSpec: degree must be >= 1");
        if (kappa < degree + 1)
            throw std::invalid_argument("SplineSpec: kappa must be >= degree + 1");
        SplineSpec spec;
        spec.degree = degree;
        spec.interior_knots = kappa - degree - 1;
        return spec;
    }

    SplineSpec with_domain(double lo, double hi) const {
        SplineSpec spec = *this;
        spec.domain_lo = lo;
        spec.domain_hi = hi;
        return spec;
    }

    double to_unit(double x) const {
        const double u = (x - domain_lo) / (domain_hi - domain_lo);
        return std::clamp(u, 0.0, 1.0);
    }

    /// Clamped knot vector on [0,1], length kappa + degree + 1.
    std::vector<double> knots() const {
        const int k = kappa();
        std::vector<double> t(static_cast<std::size_t>(k + degree + 1));
        for (int i = 0; i <= degree; ++i) t[static_cast<std::size_t>(i)] = 0.0;
        for (int i = 1; i <= interior_knots; ++i)
            t[static_cast<std::size_t>(degree + i)] =
                static_cast<double>(i) / static_cast<double>(interior_knots + 1);
        for (int i = k; i <= k + degree; ++i) t[static_cast<std::size_t>(i)] = 1.0;
        return t;
    }
};

/// All kappa Cox-de Boor basis values at x (mapped into [0,1], clamped).
/// Values are nonnegative and sum to one.
inline Eigen::VectorXd eval_basis(const SplineSpec& spec, double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("eval_basis: non-finite input");
    const int degree = spec.degree;
    const int kappa = spec.kappa();
    const double u = spec.to_unit(x);
    const std::vector<double> t = spec.knots();

    // Equally spaced interior knots make the span index a closed form.
    int span = degree + static_cast<int>(std::floor(u * (spec.interior_knots + 1)));
    span = std::min(span, kappa - 1);

    std::vector<double> basis(static_cast<std::size_t>(degree + 1), 0.0);
    std::vector<double> left(static_cast<std::size_t>(degree + 1));
    std::vector<double> right(static_cast<std::size_t>(degree + 1));
    basis[0] = 1.0;
    for (int d = 1; d <= degree; ++d) {
        left[static_cast<std::size_t>(d)] = u - t[static_cast<std::size_t>(span + 1 - d)];
        right[static_cast<std::size_t>(d)] = t[static_cast<std::size_t>(span + d)] - u;
        double saved = 0.0;
        for (int r = 0; r < d; ++r) {
            const double denom = right[static_cast<std::size_t>(r + 1)] +
                                 left[static_cast<std::size_t>(d - r)];
            const double tmp = basis[static_cast<std::size_t>(r)] / denom;
            basis[static_cast<std::size_t>(r)] =
                saved + right[static_cast<std::size_t>(r + 1)] * tmp;
            saved = left[static_cast<std::size_t>(d - r)] * tmp;
        }
        basis[static_cast<std::size_t>(d)] = saved;
    }

    Eigen::VectorXd out = Eigen::VectorXd::Zero(kappa);
    for (int r = 0; r <= degree; ++r) out[span - degree + r] = basis[static_cast<std::size_t>(r)];
    return out;
}

/// Centered additive design: intercept column followed by d contiguous blocks
/// of kappa-1 basis columns (first basis function of each block dropped,
/// remaining columns centered to zero empirical mean over the training rows).
struct DesignMatrix {
    Eigen::MatrixXd values;
    Eigen::VectorXd column_means;    // entry 0 (intercept) is 0
    std::vector<SplineSpec> specs;   // one per covariate, with learned domains

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
    int num_covariates() const { return static_cast<int>(specs.size()); }
    int block_size() const { return specs.empty() ? 0 : specs.front().kappa() - 1; }
    int block_start(int covariate) const { return 1 + covariate * block_size(); }
};

/// Uncentered basis row for one observation under the given specs:
/// [1, b_2..b_kappa per covariate] (first basis function dropped per block).
inline Eigen::VectorXd raw_design_row(const std::vector<SplineSpec>& specs,
                                      const Eigen::VectorXd& x) {
    if (x.size() != static_cast<Eigen::Index>(specs.size()))
        throw std::invalid_argument("raw_design_row: covariate count mismatch");
    const int block = specs.empty() ? 0 : specs.front().kappa() - 1;
    Eigen::VectorXd row(1 + static_cast<Eigen::Index>(specs.size()) * block);
    row[0] = 1.0;
    for (std::size_t j = 0; j < specs.size(); ++j) {
        const Eigen::VectorXd basis = eval_basis(specs[j], x[static_cast<Eigen::Index>(j)]);
        row.segment(1 + static_cast<Eigen::Index>(j) * block, block) = basis.tail(block);
    }
    return row;
}

/// Prediction-time row: raw basis row minus the stored training column means.
inline Eigen::VectorXd centered_design_row(const std::vector<SplineSpec>& specs,
                                           const Eigen::VectorXd& column_means,
                                           const Eigen::VectorXd& x) {
    Eigen::VectorXd row = raw_design_row(specs, x);
    if (row.size() != column_means.size())
        throw std::invalid_argument("centered_design_row: column mean length mismatch");
    return row - column_means;
}

inline DesignMatrix build_design(const Eigen::MatrixXd& x, const SplineSpec& spec) {
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    if (d < 1) throw std::invalid_argument("build_design: no covariates");
    const int kappa = spec.kappa();
    const Eigen::Index cols = 1 + d * (kappa - 1);
    if (n < cols)
        throw InsufficientData("build_design: " + std::to_string(n) + " rows for " +
                               std::to_string(cols) + " columns");

    std::vector<SplineSpec> specs;
    specs.reserve(static_cast<std::size_t>(d));
    for (Eigen::Index j = 0; j < d; ++j) {
        const double lo = x.col(j).minCoeff();
        const double hi = x.col(j).maxCoeff();
        if (!std::isfinite(lo) || !std::isfinite(hi))
            throw std::invalid_argument("build_design: non-finite covariate values");
        if (!(lo < hi))
            throw DegenerateDesign("build_design: covariate " + std::to_string(j) +
                                   " has fewer than 2 distinct values");
        specs.push_back(spec.with_domain(lo, hi));
    }

    DesignMatrix design;
    design.specs = std::move(specs);
    design.values.resize(n, cols);
    for (Eigen::Index i = 0; i < n; ++i)
        design.values.row(i) = raw_design_row(design.specs, x.row(i).transpose()).transpose();

    design.column_means = Eigen::VectorXd::Zero(cols);
    for (Eigen::Index c = 1; c < cols; ++c) {
        design.column_means[c] = design.values.col(c).mean();
        design.values.col(c).array() -= design.column_means[c];
    }

    const Eigen::MatrixXd gram = design.values.transpose() * design.values;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const double max_eig = eig.eigenvalues().maxCoeff();
    const double min_eig = eig.eigenvalues().minCoeff();
    if (!(min_eig > 1e-10 * max_eig))
        throw DegenerateDesign("build_design: singular cross-product (relative eigenvalue " +
                               std::to_string(min_eig / max_eig) + ")");
    return design;
}

}  // namespace tobitadd
