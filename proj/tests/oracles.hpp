// Independent reference computations shared by unit and acceptance tests.
#ifndef BAYESLINGAM_TESTS_ORACLES_HPP
#define BAYESLINGAM_TESTS_ORACLES_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;

// log of the GL normalizer straight from the erfc closed form; only safe for moderate alpha/sqrt(beta).
inline double gl_log_z_direct(double alpha, double beta) {
    double u = alpha / (2.0 * std::sqrt(beta));
    if (u > 20.0) {
        // asymptotic series of erfc for large u
        double s = 1.0 - 1.0 / (2 * u * u) + 3.0 / (4 * u * u * u * u) - 15.0 / (8 * std::pow(u, 6));
        return 0.5 * std::log(kPi / beta) + std::log(s / (u * std::sqrt(kPi)));
    }
    return 0.5 * std::log(kPi / beta) + u * u + std::log(std::erfc(u));
}

inline double normal_logpdf(double x, double mean, double sd) {
    double z = (x - mean) / sd;
    return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2 * kPi);
}

// Log posterior of a GL family written out term by term; parameters (b, alpha, log_beta).
inline double gl_family_log_posterior(const Eigen::VectorXd& y, const Eigen::MatrixXd& Xp, const std::vector<double>& b,
                                      double alpha, double log_beta) {
    double beta = std::exp(log_beta);
    double lz = gl_log_z_direct(alpha, beta);
    double s = 0.0;
    for (Eigen::Index m = 0; m < y.size(); ++m) {
        double e = y[m];
        for (std::size_t j = 0; j < b.size(); ++j) e -= b[j] * Xp(m, static_cast<Eigen::Index>(j));
        s += -alpha * std::abs(e) - beta * e * e - lz;
    }
    for (double bj : b) s += normal_logpdf(bj, 0, 1);
    return s + normal_logpdf(alpha, 0, 1) + normal_logpdf(log_beta, 0, 1);
}

// Mixture of Gaussians with softmax weights; parameters (b, gamma, mu, log_sigma).
inline double mog_family_log_posterior(const Eigen::VectorXd& y, const Eigen::MatrixXd& Xp, const std::vector<double>& b,
                                       const std::vector<double>& gamma, const std::vector<double>& mu,
                                       const std::vector<double>& log_sigma) {
    const std::size_t k = gamma.size();
    double gmax = *std::max_element(gamma.begin(), gamma.end());
    double zsum = 0.0;
    for (double g : gamma) zsum += std::exp(g - gmax);
    double s = 0.0;
    for (Eigen::Index m = 0; m < y.size(); ++m) {
        double e = y[m];
        for (std::size_t j = 0; j < b.size(); ++j) e -= b[j] * Xp(m, static_cast<Eigen::Index>(j));
        double p = 0.0;
        for (std::size_t c = 0; c < k; ++c)
            p += std::exp(gamma[c] - gmax) / zsum * std::exp(normal_logpdf(e, mu[c], std::exp(log_sigma[c])));
        s += std::log(p);
    }
    for (double bj : b) s += normal_logpdf(bj, 0, 1);
    for (std::size_t c = 0; c < k; ++c)
        s += normal_logpdf(gamma[c], 0, 1) + normal_logpdf(mu[c], 0, 1) + normal_logpdf(log_sigma[c], 0, 1);
    return s;
}

// Column-standardized matrix with the N-1 divisor.
inline Eigen::MatrixXd standardize_columns(Eigen::MatrixXd X) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        double mean = X.col(j).mean();
        X.col(j).array() -= mean;
        double sd = std::sqrt(X.col(j).squaredNorm() / static_cast<double>(X.rows() - 1));
        X.col(j) /= sd;
    }
    return X;
}

// sign(z)|z|^q on standard normal draws.
template <typename Rng>
double powered_normal(Rng& rng, double q) {
    std::normal_distribution<double> normal;
    double z = normal(rng);
    return std::copysign(std::pow(std::abs(z), q), z);
}

// log of the integral of exp(logf) over a box, by nested adaptive Gauss-Kronrod.
// The integrand is shifted by `ref` to keep it in range.
template <typename F>
double log_integral_2d(F logf, double ref, double x0, double x1, double y0, double y1) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    auto inner = [&](double x) {
        return GK::integrate([&](double y) { return std::exp(logf(x, y) - ref); }, y0, y1, 8, 1e-9);
    };
    return ref + std::log(GK::integrate(inner, x0, x1, 8, 1e-9));
}

// Log evidence of a parentless GL family by 2-D quadrature over (alpha, log beta).
// The box is found from a coarse grid so the oracle needs nothing from the library.
inline double gl_parentless_log_evidence(const Eigen::VectorXd& y) {
    auto lp = [&](double a, double lb) { return gl_family_log_posterior(y, Eigen::MatrixXd(y.size(), 0), {}, a, lb); };
    const int G = 161;
    const double lo = -8, hi = 8, h = (hi - lo) / (G - 1);
    std::vector<double> grid(G * G);
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < G; ++i)
        for (int j = 0; j < G; ++j) {
            grid[i * G + j] = lp(lo + i * h, lo + j * h);
            best = std::max(best, grid[i * G + j]);
        }
    int imin = G, imax = -1, jmin = G, jmax = -1;
    for (int i = 0; i < G; ++i)
        for (int j = 0; j < G; ++j)
            if (grid[i * G + j] > best - 40) {
                imin = std::min(imin, i);
                imax = std::max(imax, i);
                jmin = std::min(jmin, j);
                jmax = std::max(jmax, j);
            }
    double x0 = lo + (imin - 2) * h, x1 = lo + (imax + 2) * h;
    double y0 = lo + (jmin - 2) * h, y1 = lo + (jmax + 2) * h;
    return log_integral_2d(lp, best, x0, x1, y0, y1);
}

}  // namespace oracle

#endif
