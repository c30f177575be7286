#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "tobitadd/errors.hpp"

namespace tobitadd {

struct OptimizerConfig {
    double grad_tol = 1e-8;  // infinity norm
    int max_iter = 500;
    double sufficient_decrease = 1e-4;
    double curvature = 0.9;
    double initial_step = 1.0;
    int max_line_search_trials = 40;

    void validate() const {
        if (!(sufficient_decrease > 0.0 && sufficient_decrease < curvature && curvature < 1.0))
            throw std::invalid_argument("OptimizerConfig: need 0 < sufficient_decrease < curvature < 1");
        if (max_iter < 1) throw std::invalid_argument("OptimizerConfig: max_iter must be >= 1");
        if (!(initial_step > 0.0)) throw std::invalid_argument("OptimizerConfig: initial_step must be > 0");
    }
};

enum class Termination { GradientTolerance, MaxIterations, LineSearchFailure };

struct OptimizeResult {
    Eigen::VectorXd point;
    double value = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    Termination termination = Termination::MaxIterations;
};

namespace detail {

// One line-search trial in the minimization view: phi(a) = -objective(x + a p).
struct LineTrial {
    double alpha = 0.0;
    Eigen::VectorXd x;
    double phi = std::numeric_limits<double>::infinity();
    double dphi = std::numeric_limits<double>::infinity();
    Eigen::VectorXd grad;  // empty when phi is non-finite
};

}  // namespace detail

/// Quasi-Newton (BFGS) maximization with a strong Wolfe line search
/// (bracketing then bisection zoom). Internally minimizes the negated
/// objective; the inverse-curvature matrix starts at I / max(1, ||g0||) and
/// is rebuilt from that scaling whenever a direction genuinely fails to
/// ascend.
///
/// Close to the maximizer the predicted objective change sinks below double
/// rounding noise while the gradient is still measured accurately, so two
/// gradient-based acceptance rules take over there: a trial already meeting
/// grad_tol is accepted outright, and once the predicted decrease is
/// sub-noise the quasi-Newton step is accepted iff it reduces the gradient
/// norm. Accepted steps never decrease the objective by more than the
/// rounding-noise floor.
inline OptimizeResult maximize(const std::function<double(const Eigen::VectorXd&)>& objective,
                               const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& gradient,
                               const Eigen::VectorXd& start,
                               const OptimizerConfig& config = {}) {
    config.validate();
    const double inf = std::numeric_limits<double>::infinity();
    const Eigen::Index n = start.size();

    auto f = [&](const Eigen::VectorXd& x) {
        const double v = -objective(x);
        return std::isnan(v) ? inf : v;
    };
    auto g = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return -gradient(x); };

    Eigen::VectorXd x = start;
    double fx = f(x);
    Eigen::VectorXd gx = g(x);
    if (!std::isfinite(fx) || !gx.allFinite())
        throw InvalidStart("maximize: objective or gradient non-finite at start");

    const double c1 = config.sufficient_decrease;
    const double c2 = config.curvature;
    auto fresh_scaling = [](const Eigen::VectorXd& grad) {
        return 1.0 / std::max(1.0, grad.norm());
    };
    Eigen::MatrixXd H = fresh_scaling(gx) * Eigen::MatrixXd::Identity(n, n);

    OptimizeResult result;
    int iter = 0;
    bool line_search_failed = false;
    for (; iter < config.max_iter; ++iter) {
        if (gx.lpNorm<Eigen::Infinity>() <= config.grad_tol) break;

        const double phi0 = fx;
        const double noise_floor =
            16.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::fabs(phi0));

        Eigen::VectorXd p = -(H * gx);
        double dphi0 = gx.dot(p);
        if (dphi0 > noise_floor) {  // genuinely uphill, not cancellation
            H = fresh_scaling(gx) * Eigen::MatrixXd::Identity(n, n);
            p = -(H * gx);
            dphi0 = gx.dot(p);
        }

        int trials = 0;
        auto eval = [&](double alpha) {
            ++trials;
            detail::LineTrial t;
            t.alpha = alpha;
            t.x = x + alpha * p;
            t.phi = f(t.x);
            if (std::isfinite(t.phi)) {
                t.grad = g(t.x);
                t.dphi = t.grad.dot(p);
            }
            return t;
        };
        auto stationary = [&](const detail::LineTrial& t) {
            return std::isfinite(t.phi) && t.phi <= phi0 + noise_floor &&
                   t.grad.size() == n && t.grad.lpNorm<Eigen::Infinity>() <= config.grad_tol;
        };

        detail::LineTrial accepted;
        bool have_step = false;

        if (-dphi0 * config.initial_step <= noise_floor) {
            // Predicted decrease is unmeasurable; take the quasi-Newton step
            // iff it makes gradient progress.
            detail::LineTrial cur = eval(config.initial_step);
            if (std::isfinite(cur.phi) && cur.phi <= phi0 + noise_floor &&
                cur.grad.lpNorm<Eigen::Infinity>() < gx.lpNorm<Eigen::Infinity>()) {
                accepted = std::move(cur);
                have_step = true;
            }
        } else {
            // Bracketing: expand until the Wolfe conditions hold or an
            // interval containing a Wolfe point is found.
            detail::LineTrial lo;
            lo.alpha = 0.0;
            lo.phi = phi0;
            lo.dphi = dphi0;
            detail::LineTrial hi;
            bool bracketed = false;

            detail::LineTrial prev = lo;
            double alpha = config.initial_step;
            while (trials < config.max_line_search_trials) {
                detail::LineTrial cur = eval(alpha);
                if (stationary(cur)) {
                    accepted = std::move(cur);
                    have_step = true;
                    break;
                }
                if (cur.phi > phi0 + c1 * alpha * dphi0 ||
                    (prev.alpha > 0.0 && cur.phi >= prev.phi)) {
                    lo = prev;
                    hi = std::move(cur);
                    bracketed = true;
                    break;
                }
                if (std::fabs(cur.dphi) <= -c2 * dphi0) {
                    accepted = std::move(cur);
                    have_step = true;
                    break;
                }
                if (cur.dphi >= 0.0) {
                    hi = prev;
                    lo = std::move(cur);
                    bracketed = true;
                    break;
                }
                prev = std::move(cur);
                alpha *= 2.0;
            }
            if (!have_step && bracketed) {
                while (trials < config.max_line_search_trials) {
                    detail::LineTrial cur = eval(0.5 * (lo.alpha + hi.alpha));
                    if (stationary(cur)) {
                        accepted = std::move(cur);
                        have_step = true;
                        break;
                    }
                    if (cur.phi > phi0 + c1 * cur.alpha * dphi0 || cur.phi >= lo.phi) {
                        hi = std::move(cur);
                    } else {
                        if (std::fabs(cur.dphi) <= -c2 * dphi0) {
                            accepted = std::move(cur);
                            have_step = true;
                            break;
                        }
                        if (cur.dphi * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
                        lo = std::move(cur);
                    }
                }
            }
        }

        if (!have_step) {
            line_search_failed = true;
            break;
        }

        const Eigen::VectorXd s = accepted.x - x;
        const Eigen::VectorXd yv = accepted.grad - gx;
        const double sy = s.dot(yv);
        if (sy > 1e-12 * s.norm() * yv.norm()) {
            if (iter == 0) {
                // Calibrate the identity to the observed curvature before the
                // first update (Nocedal & Wright eq. 6.20).
                H = (sy / yv.squaredNorm()) * Eigen::MatrixXd::Identity(n, n);
            }
            const double rho = 1.0 / sy;
            const Eigen::VectorXd Hy = H * yv;
            const double yHy = yv.dot(Hy);
            H.noalias() -= rho * (s * Hy.transpose() + Hy * s.transpose());
            H.noalias() += (rho * rho * yHy + rho) * (s * s.transpose());
        }
        x = std::move(accepted.x);
        fx = accepted.phi;
        gx = std::move(accepted.grad);
    }

    result.point = x;
    result.value = -fx;
    result.grad_norm = gx.lpNorm<Eigen::Infinity>();
    result.iterations = iter;
    if (line_search_failed) {
        result.termination = Termination::LineSearchFailure;
    } else if (result.grad_norm <= config.grad_tol) {
        result.termination = Termination::GradientTolerance;
    } else {
        result.termination = Termination::MaxIterations;
    }
    result.converged = result.termination == Termination::GradientTolerance &&
                       result.grad_norm <= config.grad_tol;
    return result;
}

}  // namespace tobitadd
