#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "tobitadd/errors.hpp"
#include "tobitadd/numeric.hpp"
#include "tobitadd/splines.hpp"

namespace tobitadd {

/// Coefficients and scale in response units.
struct NaturalParams {
    Eigen::VectorXd theta;
    double sigma = 1.0;
};

/// Olsen working coordinates gamma = theta/sigma, h = 1/sigma. The censored
/// Gaussian log-likelihood is globally concave in (gamma, h), so a single
/// quasi-Newton run from any interior start finds the maximizer.
struct WorkingParams {
    Eigen::VectorXd gamma;
    double h = 1.0;

    Eigen::VectorXd packed() const {
        Eigen::VectorXd p(gamma.size() + 1);
        p.head(gamma.size()) = gamma;
        p[gamma.size()] = h;
        return p;
    }

    static WorkingParams unpack(const Eigen::VectorXd& p) {
        WorkingParams w;
        w.gamma = p.head(p.size() - 1);
        w.h = p[p.size() - 1];
        return w;
    }
};

inline NaturalParams to_natural(const WorkingParams& params) {
    if (!(params.h > 0.0) || !std::isfinite(params.h))
        throw std::invalid_argument("to_natural: h must be positive");
    NaturalParams nat;
    nat.sigma = 1.0 / params.h;
    nat.theta = params.gamma / params.h;
    return nat;
}

inline WorkingParams from_natural(const NaturalParams& params) {
    if (!(params.sigma > 0.0) || !std::isfinite(params.sigma))
        throw std::invalid_argument("from_natural: sigma must be positive");
    WorkingParams w;
    w.h = 1.0 / params.sigma;
    w.gamma = params.theta / params.sigma;
    return w;
}

/// Left-censored observations: y_i = max(y*_i, limit), delta_i = 1 exactly
/// when the latent response exceeded the limit. A limit of -infinity means
/// no censoring was ever applied (all rows uncensored, no shift).
struct CensoredDataset {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    double limit = 0.0;
    std::vector<std::uint8_t> delta;

    Eigen::Index n() const { return y.size(); }
    Eigen::Index num_covariates() const { return x.cols(); }

    int censored_count() const {
        int c = 0;
        for (std::uint8_t d : delta) c += (d == 0);
        return c;
    }

    int uncensored_count() const { return static_cast<int>(delta.size()) - censored_count(); }

    double shift() const { return std::isfinite(limit) ? limit : 0.0; }

    /// Shifted responses y' = y - limit (zero shift for the -inf sentinel).
    Eigen::VectorXd shifted_y() const {
        return y.array() - shift();
    }

    /// Derives censoring indicators from y and the limit. Values recorded
    /// below the limit are treated as censored at the limit.
    static CensoredDataset from_observations(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                             double limit) {
        if (x.rows() != y.size())
            throw std::invalid_argument("CensoredDataset: x and y row counts differ");
        if (std::isnan(limit) || limit == std::numeric_limits<double>::infinity())
            throw std::invalid_argument("CensoredDataset: limit must be finite or -inf");
        if (!x.allFinite() || !y.allFinite())
            throw std::invalid_argument("CensoredDataset: non-finite values");
        CensoredDataset data;
        data.x = x;
        data.limit = limit;
        data.y = y;
        data.delta.resize(static_cast<std::size_t>(y.size()));
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const bool above = y[i] > limit;
            data.delta[static_cast<std::size_t>(i)] = above ? 1 : 0;
            if (!above && std::isfinite(limit)) data.y[i] = limit;
        }
        return data;
    }

    CensoredDataset subset(const std::vector<int>& rows) const {
        CensoredDataset out;
        out.limit = limit;
        out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
        out.y.resize(static_cast<Eigen::Index>(rows.size()));
        out.delta.resize(rows.size());
        for (std::size_t k = 0; k < rows.size(); ++k) {
            out.x.row(static_cast<Eigen::Index>(k)) = x.row(rows[k]);
            out.y[static_cast<Eigen::Index>(k)] = y[rows[k]];
            out.delta[k] = delta[static_cast<std::size_t>(rows[k])];
        }
        return out;
    }
};

namespace detail {

inline void check_alignment(const WorkingParams& params, const Eigen::MatrixXd& design,
                            const CensoredDataset& data, const char* what) {
    if (design.rows() != data.n())
        throw std::invalid_argument(std::string(what) + ": design/data row mismatch");
    if (design.cols() != params.gamma.size())
        throw std::invalid_argument(std::string(what) + ": design/parameter column mismatch");
}

}  // namespace detail

/// Censored Gaussian log-likelihood in working coordinates:
///   sum_i delta_i [log h + log_phi(h y'_i - B_i'gamma)]
///        + (1 - delta_i) log(1 - Phi(B_i'gamma)).
inline double log_likelihood(const WorkingParams& params, const Eigen::MatrixXd& design,
                             const CensoredDataset& data) {
    detail::check_alignment(params, design, data, "log_likelihood");
    const Eigen::VectorXd yp = data.shifted_y();
    const Eigen::VectorXd eta = design * params.gamma;
    const double log_h = std::log(params.h);
    double total = 0.0;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        if (data.delta[static_cast<std::size_t>(i)]) {
            total += log_h + log_phi(params.h * yp[i] - eta[i]);
        } else {
            total += log_one_minus_Phi(eta[i]);
        }
    }
    return total;
}

inline double log_likelihood(const WorkingParams& params, const DesignMatrix& design,
                             const CensoredDataset& data) {
    return log_likelihood(params, design.values, data);
}

/// Analytic gradient, packed as (d/dgamma, d/dh).
inline Eigen::VectorXd gradient(const WorkingParams& params, const Eigen::MatrixXd& design,
                                const CensoredDataset& data) {
    detail::check_alignment(params, design, data, "gradient");
    const Eigen::VectorXd yp = data.shifted_y();
    const Eigen::VectorXd eta = design * params.gamma;
    Eigen::VectorXd dgamma = Eigen::VectorXd::Zero(design.cols());
    double dh = 0.0;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        if (data.delta[static_cast<std::size_t>(i)]) {
            const double resid = params.h * yp[i] - eta[i];
            dgamma += resid * design.row(i).transpose();
            dh += 1.0 / params.h - resid * yp[i];
        } else {
            dgamma -= mills_lambda(eta[i]) * design.row(i).transpose();
        }
    }
    Eigen::VectorXd out(design.cols() + 1);
    out.head(design.cols()) = dgamma;
    out[design.cols()] = dh;
    return out;
}

inline Eigen::VectorXd gradient(const WorkingParams& params, const DesignMatrix& design,
                                const CensoredDataset& data) {
    return gradient(params, design.values, data);
}

}  // namespace tobitadd
