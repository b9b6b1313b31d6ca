#ifndef BAYESLINGAM_DENSITY_HPP
#define BAYESLINGAM_DENSITY_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "common.hpp"

namespace bayeslingam {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;
/// Smoothing constant for |e| during optimization: |e| ~ sqrt(e^2 + eps).
inline constexpr double kAbsSmoothing = 1e-8;

/// exp(-alpha|e| - beta e^2) / Z with beta = exp(log_beta).
struct GlParams {
    double alpha = 0.0;
    double log_beta = 0.0;

    double beta() const { return std::exp(log_beta); }
    friend bool operator==(const GlParams&, const GlParams&) = default;
};

/// Mixture of k Gaussians with softmax weights over gamma.
struct MogParams {
    std::vector<double> gamma;
    std::vector<double> mu;
    std::vector<double> log_sigma;

    int k() const { return static_cast<int>(gamma.size()); }
    friend bool operator==(const MogParams&, const MogParams&) = default;
};

using DensityParams = std::variant<GlParams, MogParams>;

enum class DensityFamily { GL, MoG };

inline std::string to_string(DensityFamily f) { return f == DensityFamily::GL ? "gl" : "mog"; }

inline DensityFamily parse_density_family(const std::string& s) {
    if (s == "gl" || s == "GL") return DensityFamily::GL;
    if (s == "mog" || s == "MoG" || s == "MOG") return DensityFamily::MoG;
    throw ConfigError("unknown density family '" + s + "' (expected gl or mog)");
}

struct GaussianPrior {
    double mean = 0.0;
    double sd = 1.0;

    double log_density(double x) const {
        double z = (x - mean) / sd;
        return -0.5 * z * z - std::log(sd) - kLogSqrt2Pi;
    }
    double d_log_density(double x) const { return -(x - mean) / (sd * sd); }
};

/// Density family choice plus independent Gaussian hyperpriors on every
/// underlying real parameter. Defaults are standard normal throughout.
struct DensitySpec {
    DensityFamily family = DensityFamily::GL;
    int mog_components = 2;
    GaussianPrior alpha;
    GaussianPrior log_beta;
    GaussianPrior gamma;
    GaussianPrior mu;
    GaussianPrior log_sigma;

    int num_params() const { return family == DensityFamily::GL ? 2 : 3 * mog_components; }

    void validate() const {
        if (family == DensityFamily::MoG && mog_components < 1) throw ConfigError("mog_components must be >= 1");
        for (const GaussianPrior* p : {&alpha, &log_beta, &gamma, &mu, &log_sigma})
            if (!(p->sd > 0.0) || !std::isfinite(p->sd) || !std::isfinite(p->mean))
                throw ConfigError("hyperprior standard deviations must be positive and finite");
    }
};

// ---------------------------------------------------------------------------
// Scaled complementary error function, in log form.

namespace detail {

// sqrt(pi) * erfcx(x) = 1 / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))).
// Returns the tail K = (1/2)/(x + 1/(x + ...)), so that 1/(sqrt(pi) erfcx(x)) = x + K.
inline double erfcx_continued_fraction_tail(double x) {
    double t = x;
    for (int m = 80; m >= 2; --m) t = x + 0.5 * m / t;
    return 0.5 / t;
}

inline constexpr double kCfSwitch = 5.0;

}  // namespace detail

/// log(exp(x^2) erfc(x)), finite for every finite x.
inline double log_erfcx(double x) {
    if (x < detail::kCfSwitch) return x * x + std::log(std::erfc(x));
    return -0.5 * std::log(std::numbers::pi) - std::log(x + detail::erfcx_continued_fraction_tail(x));
}

/// d/dx log_erfcx(x) = 2x - 2/(sqrt(pi) erfcx(x)).
inline double d_log_erfcx(double x) {
    if (x < detail::kCfSwitch) {
        double inv = std::exp(-x * x - std::log(std::erfc(x))) / std::sqrt(std::numbers::pi);
        return 2.0 * x - 2.0 * inv;
    }
    return -2.0 * detail::erfcx_continued_fraction_tail(x);
}

// ---------------------------------------------------------------------------
// GL family

/// log Z = 1/2 log(pi/beta) + log erfcx(alpha / (2 sqrt(beta))).
inline double gl_log_z(const GlParams& p) {
    double x = 0.5 * p.alpha * std::exp(-0.5 * p.log_beta);
    return 0.5 * (std::log(std::numbers::pi) - p.log_beta) + log_erfcx(x);
}

struct GlLogZGradient {
    double d_alpha;
    double d_log_beta;
};

inline GlLogZGradient gl_log_z_gradient(const GlParams& p) {
    double inv_sqrt_beta = std::exp(-0.5 * p.log_beta);
    double x = 0.5 * p.alpha * inv_sqrt_beta;
    double dl = d_log_erfcx(x);
    return {0.5 * inv_sqrt_beta * dl, -0.5 - 0.5 * x * dl};
}

/// With smoothing > 0, |e| is replaced by sqrt(e^2 + smoothing); Z is unchanged.
inline double gl_logpdf(double e, const GlParams& p, double smoothing = 0.0) {
    double a = smoothing > 0.0 ? std::sqrt(e * e + smoothing) : std::abs(e);
    return -p.alpha * a - p.beta() * e * e - gl_log_z(p);
}

// ---------------------------------------------------------------------------
// MoG family

inline double log_sum_exp(std::span<const double> v) {
    double m = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

inline std::vector<double> softmax(std::span<const double> gamma) {
    if (gamma.empty()) throw Error("softmax of an empty vector");
    double m = *std::max_element(gamma.begin(), gamma.end());
    std::vector<double> out(gamma.size());
    double s = 0.0;
    for (std::size_t j = 0; j < gamma.size(); ++j) s += out[j] = std::exp(gamma[j] - m);
    for (double& x : out) x /= s;
    return out;
}

inline void check_mog(const MogParams& p) {
    if (p.gamma.empty() || p.mu.size() != p.gamma.size() || p.log_sigma.size() != p.gamma.size())
        throw Error("MoG parameter vectors must share a length k >= 1");
}

// ---------------------------------------------------------------------------
// Evaluators: per-parameter-set precomputation so the per-observation work
// in the family likelihood loop is allocation free.

/// Gradient of a log-density at one point, w.r.t. the argument and the flat parameter vector.
struct DensityGradient {
    double d_e = 0.0;
    std::vector<double> d_params;
};

class GlEvaluator {
public:
    explicit GlEvaluator(const GlParams& p, double smoothing = 0.0)
        : alpha_(p.alpha), beta_(p.beta()), log_z_(gl_log_z(p)), dz_(gl_log_z_gradient(p)), eps_(smoothing) {}

    static constexpr int num_params() { return 2; }

    double log_pdf(double e) const { return -alpha_ * abs(e) - beta_ * e * e - log_z_; }

    /// Returns log p(e); adds weight * d log p / d params into grad[0..1] and writes d/de.
    double accumulate(double e, double weight, double* grad, double& d_e) const {
        double a = abs(e);
        double ee = e * e;
        grad[0] += weight * (-a - dz_.d_alpha);
        grad[1] += weight * (-beta_ * ee - dz_.d_log_beta);
        double da = eps_ > 0.0 ? e / a : (e > 0.0 ? 1.0 : (e < 0.0 ? -1.0 : 0.0));
        d_e = -alpha_ * da - 2.0 * beta_ * e;
        return -alpha_ * a - beta_ * ee - log_z_;
    }

private:
    double abs(double e) const { return eps_ > 0.0 ? std::sqrt(e * e + eps_) : std::abs(e); }

    double alpha_, beta_, log_z_;
    GlLogZGradient dz_;
    double eps_;
};

class MogEvaluator {
public:
    explicit MogEvaluator(const MogParams& p) : k_(p.k()) {
        check_mog(p);
        weights_ = softmax(p.gamma);
        double lse = log_sum_exp(p.gamma);
        log_w_.resize(k_);
        mu_ = p.mu;
        inv_sigma_.resize(k_);
        log_norm_.resize(k_);
        for (int j = 0; j < k_; ++j) {
            log_w_[j] = p.gamma[j] - lse;
            inv_sigma_[j] = std::exp(-p.log_sigma[j]);
            log_norm_[j] = log_w_[j] - p.log_sigma[j] - kLogSqrt2Pi;
        }
        scratch_.resize(k_);
    }

    int num_params() const { return 3 * k_; }

    double log_pdf(double e) const {
        double m = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < k_; ++j) {
            double z = (e - mu_[j]) * inv_sigma_[j];
            scratch_[j] = log_norm_[j] - 0.5 * z * z;
            m = std::max(m, scratch_[j]);
        }
        double s = 0.0;
        for (int j = 0; j < k_; ++j) s += std::exp(scratch_[j] - m);
        return m + std::log(s);
    }

    /// Layout of grad: [gamma_1..k, mu_1..k, log_sigma_1..k].
    double accumulate(double e, double weight, double* grad, double& d_e) const {
        double lp = log_pdf(e);
        d_e = 0.0;
        for (int j = 0; j < k_; ++j) {
            double r = std::exp(scratch_[j] - lp);
            double z = (e - mu_[j]) * inv_sigma_[j];
            grad[j] += weight * (r - weights_[j]);
            grad[k_ + j] += weight * r * z * inv_sigma_[j];
            grad[2 * k_ + j] += weight * r * (z * z - 1.0);
            d_e -= r * z * inv_sigma_[j];
        }
        return lp;
    }

private:
    int k_;
    std::vector<double> weights_, log_w_, mu_, inv_sigma_, log_norm_;
    mutable std::vector<double> scratch_;
};

inline double mog_logpdf(double e, const MogParams& p) { return MogEvaluator(p).log_pdf(e); }

// ---------------------------------------------------------------------------
// Flat parameter vectors

inline int num_params(const DensityParams& p) {
    return std::visit([](const auto& q) {
        if constexpr (std::is_same_v<std::decay_t<decltype(q)>, GlParams>) return 2;
        else return 3 * q.k();
    }, p);
}

inline std::vector<double> to_vector(const DensityParams& p) {
    if (auto* gl = std::get_if<GlParams>(&p)) return {gl->alpha, gl->log_beta};
    const auto& m = std::get<MogParams>(p);
    std::vector<double> v;
    v.reserve(3 * m.gamma.size());
    v.insert(v.end(), m.gamma.begin(), m.gamma.end());
    v.insert(v.end(), m.mu.begin(), m.mu.end());
    v.insert(v.end(), m.log_sigma.begin(), m.log_sigma.end());
    return v;
}

inline DensityParams from_vector(std::span<const double> v, const DensitySpec& spec) {
    if (static_cast<int>(v.size()) != spec.num_params())
        throw Error("density parameter vector has length " + std::to_string(v.size()) + ", expected " +
                    std::to_string(spec.num_params()));
    if (spec.family == DensityFamily::GL) return GlParams{v[0], v[1]};
    auto k = static_cast<std::size_t>(spec.mog_components);
    MogParams m;
    m.gamma.assign(v.begin(), v.begin() + k);
    m.mu.assign(v.begin() + k, v.begin() + 2 * k);
    m.log_sigma.assign(v.begin() + 2 * k, v.end());
    return m;
}

inline double logpdf(double e, const DensityParams& p, double smoothing = 0.0) {
    if (auto* gl = std::get_if<GlParams>(&p)) return gl_logpdf(e, *gl, smoothing);
    return mog_logpdf(e, std::get<MogParams>(p));
}

/// Analytic gradient of logpdf w.r.t. e and the flat parameter vector.
/// For GL at e = 0 the exact |e| has no derivative; pass smoothing > 0 there.
inline DensityGradient grad_logpdf(double e, const DensityParams& p, double smoothing = 0.0) {
    DensityGradient g;
    g.d_params.assign(static_cast<std::size_t>(num_params(p)), 0.0);
    if (auto* gl = std::get_if<GlParams>(&p)) GlEvaluator(*gl, smoothing).accumulate(e, 1.0, g.d_params.data(), g.d_e);
    else MogEvaluator(std::get<MogParams>(p)).accumulate(e, 1.0, g.d_params.data(), g.d_e);
    return g;
}

// ---------------------------------------------------------------------------
// Priors

namespace detail {

// Hyperprior for flat parameter index i.
inline const GaussianPrior& prior_for(const DensitySpec& spec, int i) {
    if (spec.family == DensityFamily::GL) return i == 0 ? spec.alpha : spec.log_beta;
    int k = spec.mog_components;
    if (i < k) return spec.gamma;
    if (i < 2 * k) return spec.mu;
    return spec.log_sigma;
}

inline void check_consistent(const DensityParams& p, const DensitySpec& spec) {
    bool gl = std::holds_alternative<GlParams>(p);
    if (gl != (spec.family == DensityFamily::GL) ||
        (!gl && std::get<MogParams>(p).k() != spec.mog_components))
        throw Error("density parameters do not match the density spec");
    if (!gl) check_mog(std::get<MogParams>(p));
}

}  // namespace detail

inline double log_prior(const DensityParams& p, const DensitySpec& spec) {
    detail::check_consistent(p, spec);
    auto v = to_vector(p);
    double s = 0.0;
    for (int i = 0; i < static_cast<int>(v.size()); ++i) s += detail::prior_for(spec, i).log_density(v[i]);
    return s;
}

inline std::vector<double> log_prior_gradient(const DensityParams& p, const DensitySpec& spec) {
    detail::check_consistent(p, spec);
    auto v = to_vector(p);
    for (int i = 0; i < static_cast<int>(v.size()); ++i) v[i] = detail::prior_for(spec, i).d_log_density(v[i]);
    return v;
}

template <typename Rng>
DensityParams sample_prior(const DensitySpec& spec, Rng& rng) {
    std::normal_distribution<double> normal;
    std::vector<double> v(static_cast<std::size_t>(spec.num_params()));
    for (int i = 0; i < spec.num_params(); ++i) {
        const auto& h = detail::prior_for(spec, i);
        v[i] = h.mean + h.sd * normal(rng);
    }
    return from_vector(v, spec);
}

/// Deterministic starting point from regression residuals: a moment-matched
/// Gaussian for GL; for MoG, equal weights, means at evenly spaced empirical
/// quantiles and component spread sd/k.
inline DensityParams init_params(std::span<const double> residuals, const DensitySpec& spec) {
    if (residuals.size() < 2) throw DataError("need at least two residuals to initialize a density");
    double n = static_cast<double>(residuals.size());
    double mean = std::accumulate(residuals.begin(), residuals.end(), 0.0) / n;
    double ss = 0.0;
    for (double r : residuals) {
        if (!std::isfinite(r)) throw DataError("non-finite residual");
        ss += (r - mean) * (r - mean);
    }
    double var = ss / (n - 1.0);
    if (!(var > 0.0)) throw DataError("residuals have zero variance (degenerate data)");

    if (spec.family == DensityFamily::GL) return GlParams{0.0, -std::log(2.0 * var)};

    int k = spec.mog_components;
    std::vector<double> sorted(residuals.begin(), residuals.end());
    std::sort(sorted.begin(), sorted.end());
    MogParams m;
    m.gamma.assign(k, 0.0);
    m.log_sigma.assign(k, std::log(std::sqrt(var) / k));
    for (int j = 0; j < k; ++j) {
        double level = (j + 0.5) / k;
        double pos = level * (n - 1.0);
        auto lo = static_cast<std::size_t>(std::floor(pos));
        auto hi = std::min(lo + 1, sorted.size() - 1);
        double frac = pos - static_cast<double>(lo);
        m.mu.push_back(sorted[lo] + frac * (sorted[hi] - sorted[lo]));
    }
    return m;
}

}  // namespace bayeslingam

#endif  // BAYESLINGAM_DENSITY_HPP
