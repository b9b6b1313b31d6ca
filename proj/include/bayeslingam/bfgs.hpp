#ifndef BAYESLINGAM_BFGS_HPP
#define BAYESLINGAM_BFGS_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

namespace bayeslingam {

struct BfgsOptions {
    int max_iterations = 500;
    double gradient_tolerance = 1e-6;  // on the sup-norm
    double c1 = 1e-4;
    double c2 = 0.9;
    int max_line_search_evals = 40;
};

struct BfgsResult {
    Eigen::VectorXd x;
    double value = 0.0;
    double gradient_norm = 0.0;  // sup-norm at x
    int iterations = 0;
    bool converged = false;
};

namespace detail {

// Minimizer of the cubic interpolating (a, fa, ga) and (b, fb, gb), clamped into the bracket interior.
inline double cubic_step(double a, double fa, double ga, double b, double fb, double gb) {
    double d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
    double disc = d1 * d1 - ga * gb;
    double lo = std::min(a, b), hi = std::max(a, b);
    double mid = 0.5 * (a + b);
    if (disc < 0.0 || !std::isfinite(disc)) return mid;
    double d2 = std::copysign(std::sqrt(disc), b - a);
    double t = b - (b - a) * (gb + d2 - d1) / (gb - ga + 2.0 * d2);
    if (!std::isfinite(t)) return mid;
    double margin = 0.1 * (hi - lo);
    return std::clamp(t, lo + margin, hi - margin);
}

}  // namespace detail

/// Quasi-Newton minimization with a Wolfe line search.
///
/// `fg(x, grad)` returns f(x) and writes the gradient. Near the optimum the
/// decrease in f drops below rounding level long before the gradient does,
/// so sufficient decrease is tested with a small relative slack on |f| (the
/// approximate Wolfe conditions); curvature is always tested on the exact
/// directional derivative.
template <typename Fg>
BfgsResult bfgs_minimize(Fg&& fg, Eigen::VectorXd x, const BfgsOptions& opt = {}) {
    const auto d = x.size();
    Eigen::VectorXd g(d), g_new(d), x_new(d), s(d), y(d);
    double f = fg(x, g);
    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(d, d);
    bool scaled = false;

    BfgsResult res;
    res.x = x;
    res.value = f;
    res.gradient_norm = d > 0 ? g.cwiseAbs().maxCoeff() : 0.0;
    if (!std::isfinite(f)) return res;

    for (int it = 0; it < opt.max_iterations; ++it) {
        res.iterations = it;
        double gnorm = d > 0 ? g.cwiseAbs().maxCoeff() : 0.0;
        res.gradient_norm = gnorm;
        if (gnorm < opt.gradient_tolerance) {
            res.converged = true;
            break;
        }

        Eigen::VectorXd p = -H * g;
        double dphi0 = g.dot(p);
        if (!(dphi0 < 0.0)) {
            H.setIdentity();
            p = -g;
            dphi0 = g.dot(p);
        }
        const double slack = 1e-12 * std::abs(f);

        // bracket phase
        double a_prev = 0.0, f_prev = f, d_prev = dphi0;
        double a = 1.0;
        if (!scaled) a = std::min(1.0, 1.0 / std::max(1e-300, p.cwiseAbs().maxCoeff()));
        double f_a = 0.0, d_a = 0.0;
        bool accepted = false;
        double lo = 0, f_lo = f, d_lo = dphi0, hi = 0, f_hi = 0, d_hi = 0;
        bool zoom = false;
        int evals = 0;
        while (evals < opt.max_line_search_evals) {
            x_new = x + a * p;
            f_a = fg(x_new, g_new);
            ++evals;
            if (!std::isfinite(f_a)) {
                a = 0.5 * (a_prev + a);
                continue;
            }
            d_a = g_new.dot(p);
            if (f_a > f + opt.c1 * a * dphi0 + slack || (evals > 1 && f_a >= f_prev + slack)) {
                lo = a_prev; f_lo = f_prev; d_lo = d_prev;
                hi = a; f_hi = f_a; d_hi = d_a;
                zoom = true;
                break;
            }
            if (std::abs(d_a) <= -opt.c2 * dphi0) {
                accepted = true;
                break;
            }
            if (d_a >= 0.0) {
                lo = a; f_lo = f_a; d_lo = d_a;
                hi = a_prev; f_hi = f_prev; d_hi = d_prev;
                zoom = true;
                break;
            }
            a_prev = a; f_prev = f_a; d_prev = d_a;
            a *= 2.0;
        }
        // zoom phase
        while (zoom && !accepted && evals < opt.max_line_search_evals) {
            a = detail::cubic_step(lo, f_lo, d_lo, hi, f_hi, d_hi);
            x_new = x + a * p;
            f_a = fg(x_new, g_new);
            ++evals;
            d_a = std::isfinite(f_a) ? g_new.dot(p) : 0.0;
            if (!std::isfinite(f_a) || f_a > f + opt.c1 * a * dphi0 + slack || f_a >= f_lo + slack) {
                hi = a; f_hi = std::isfinite(f_a) ? f_a : f_hi; d_hi = d_a;
            } else {
                if (std::abs(d_a) <= -opt.c2 * dphi0) {
                    accepted = true;
                    break;
                }
                if (d_a * (hi - lo) >= 0.0) {
                    hi = lo; f_hi = f_lo; d_hi = d_lo;
                }
                lo = a; f_lo = f_a; d_lo = d_a;
            }
            if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) break;
        }
        if (!accepted) {
            // take the best decrease point seen if it lowers f at all, else stop
            if (zoom && lo > 0.0 && f_lo <= f + slack) {
                a = lo;
                x_new = x + a * p;
                f_a = fg(x_new, g_new);
            } else {
                break;
            }
        }

        s = x_new - x;
        y = g_new - g;
        double sy = s.dot(y);
        x = x_new;
        f = f_a;
        g = g_new;
        if (sy > 1e-14 * s.norm() * y.norm()) {
            if (!scaled) {
                H *= sy / y.squaredNorm();
                scaled = true;
            }
            double rho = 1.0 / sy;
            Eigen::VectorXd Hy = H * y;
            H += (rho * rho * y.dot(Hy) + rho) * (s * s.transpose()) - rho * (Hy * s.transpose() + s * Hy.transpose());
        }
        res.iterations = it + 1;
    }
    res.x = x;
    res.value = f;
    res.gradient_norm = d > 0 ? g.cwiseAbs().maxCoeff() : 0.0;
    if (res.gradient_norm < opt.gradient_tolerance) res.converged = true;
    return res;
}

}  // namespace bayeslingam

#endif  // BAYESLINGAM_BFGS_HPP
