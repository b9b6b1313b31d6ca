#ifndef BAYESLINGAM_SCORE_HPP
#define BAYESLINGAM_SCORE_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bfgs.hpp"
#include "common.hpp"
#include "dataset.hpp"
#include "density.hpp"
#include "graph.hpp"

namespace bayeslingam {

/// Edge coefficients (one per parent, ascending parent index) plus the
/// disturbance density of one node. No intercept: data are standardized.
struct FamilyParams {
    std::vector<double> b;
    DensityParams density;
};

enum class Estimator { Laplace, Mcmc };

inline std::string to_string(Estimator e) { return e == Estimator::Laplace ? "laplace" : "mcmc"; }

inline Estimator parse_estimator(const std::string& s) {
    if (s == "laplace") return Estimator::Laplace;
    if (s == "mcmc") return Estimator::Mcmc;
    throw ConfigError("unknown estimator '" + s + "' (expected laplace or mcmc)");
}

/// How per-family random streams (and the internal parent order) are keyed.
/// ByIndex uses (node, parent mask); ByContent uses hashes of the data
/// columns involved, which makes scores exactly invariant under relabeling.
enum class SeedPolicy { ByIndex, ByContent };

struct OptimizerOptions {
    int restarts = 5;
    int max_iterations = 500;
    double gradient_tolerance = 1e-6;
};

struct McmcOptions {
    int rungs = 32;
    int steps = 2000;
    double target_acceptance = 0.3;
    double min_temperature = 1e-5;  // smallest nonzero rung of the geometric ladder
};

struct ScoreOptions {
    OptimizerOptions optimizer;
    McmcOptions mcmc;
    Estimator estimator = Estimator::Laplace;
    SeedPolicy seed_policy = SeedPolicy::ByIndex;
    std::uint64_t seed = 0;

    void validate() const {
        if (optimizer.restarts < 1) throw ConfigError("restarts must be >= 1");
        if (optimizer.max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
        if (!(optimizer.gradient_tolerance > 0)) throw ConfigError("gradient_tolerance must be > 0");
        if (mcmc.rungs < 3) throw ConfigError("mcmc_rungs must be >= 3");
        if (mcmc.steps < 100) throw ConfigError("mcmc_steps must be >= 100");
        if (!(mcmc.target_acceptance > 0 && mcmc.target_acceptance < 1))
            throw ConfigError("mcmc_target_acceptance must lie in (0, 1)");
        if (!(mcmc.min_temperature > 0 && mcmc.min_temperature < 1))
            throw ConfigError("mcmc_min_temperature must lie in (0, 1)");
    }
};

/// Log marginal likelihood of one family plus diagnostics.
struct FamilyScore {
    Family family;
    double log_ml = 0.0;
    FamilyParams mode;
    double log_posterior_at_mode = 0.0;
    double hessian_log_det = 0.0;
    int dim = 0;
    bool converged = false;
    int restarts_used = 0;
    double hessian_shift = 0.0;
    double std_error = std::numeric_limits<double>::quiet_NaN();  // MCMC only
    Estimator estimator = Estimator::Laplace;
};

inline constexpr double kLog2Pi = 1.83787706640934548356;

/// Log posterior of one family over a flat parameter vector
/// theta = [b (internal parent order), density params].
///
/// The family's data are copied in once; evaluation holds scratch buffers,
/// so one instance must not be shared across threads.
class FamilyObjective {
public:
    FamilyObjective(const Family& family, const Dataset& data, const DensitySpec& spec, std::vector<int> parent_order)
        : family_(family), spec_(spec), order_(std::move(parent_order)) {
        if (family.node < 0 || family.node >= data.cols()) throw Error("family node out of range");
        if (family.parents >> family.node & 1U) throw Error("family node listed among its own parents");
        if (static_cast<int>(order_.size()) != family.num_parents()) throw Error("parent order does not match family");
        y_ = data.X.col(family.node);
        Xp_.resize(data.rows(), static_cast<Eigen::Index>(order_.size()));
        for (std::size_t j = 0; j < order_.size(); ++j) {
            if (order_[j] < 0 || order_[j] >= data.cols()) throw Error("parent index out of range");
            Xp_.col(static_cast<Eigen::Index>(j)) = data.X.col(order_[j]);
        }
        resid_.resize(y_.size());
        de_.resize(y_.size());
    }

    int num_coefficients() const { return static_cast<int>(order_.size()); }
    int dim() const { return num_coefficients() + spec_.num_params(); }
    const std::vector<int>& parent_order() const { return order_; }
    const DensitySpec& spec() const { return spec_; }
    const Eigen::VectorXd& response() const { return y_; }
    const Eigen::MatrixXd& design() const { return Xp_; }

    double log_prior(std::span<const double> theta) const {
        check(theta);
        const int p = num_coefficients();
        double lp = 0.0;
        for (int j = 0; j < p; ++j) lp += -0.5 * theta[j] * theta[j] - 0.5 * kLog2Pi;
        return lp + bayeslingam::log_prior(from_vector(theta.subspan(p), spec_), spec_);
    }

    /// Sum of disturbance log-densities over all observations.
    double log_likelihood(std::span<const double> theta, double smoothing = 0.0) const {
        check(theta);
        compute_residuals(theta);
        const int p = num_coefficients();
        auto density = from_vector(theta.subspan(p), spec_);
        double ll = 0.0;
        if (auto* gl = std::get_if<GlParams>(&density)) {
            GlEvaluator ev(*gl, smoothing);
            for (Eigen::Index m = 0; m < resid_.size(); ++m) ll += ev.log_pdf(resid_[m]);
        } else {
            MogEvaluator ev(std::get<MogParams>(density));
            for (Eigen::Index m = 0; m < resid_.size(); ++m) ll += ev.log_pdf(resid_[m]);
        }
        return ll;
    }

    double log_posterior(std::span<const double> theta, double smoothing = 0.0) const {
        return log_likelihood(theta, smoothing) + log_prior(theta);
    }

    /// Log posterior and its gradient (into grad, same layout as theta).
    double log_posterior_gradient(std::span<const double> theta, std::span<double> grad, double smoothing) const {
        check(theta);
        if (grad.size() != theta.size()) throw Error("gradient buffer has the wrong size");
        compute_residuals(theta);
        const int p = num_coefficients();
        auto density = from_vector(theta.subspan(p), spec_);
        std::fill(grad.begin(), grad.end(), 0.0);
        double* gd = grad.data() + p;
        double ll = 0.0;
        if (auto* gl = std::get_if<GlParams>(&density)) {
            GlEvaluator ev(*gl, smoothing);
            for (Eigen::Index m = 0; m < resid_.size(); ++m) ll += ev.accumulate(resid_[m], 1.0, gd, de_[m]);
        } else {
            MogEvaluator ev(std::get<MogParams>(density));
            for (Eigen::Index m = 0; m < resid_.size(); ++m) ll += ev.accumulate(resid_[m], 1.0, gd, de_[m]);
        }
        // residual = y - Xp b, so d/db_j = -sum_m de_m x_jm; the prior adds -b_j
        for (int j = 0; j < p; ++j) grad[j] = -Xp_.col(j).dot(de_) - theta[j];
        auto dprior = log_prior_gradient(density, spec_);
        for (std::size_t i = 0; i < dprior.size(); ++i) gd[i] += dprior[i];
        return ll + log_prior(theta);
    }

    /// theta in internal order -> public FamilyParams (b ascending by parent index).
    FamilyParams to_params(std::span<const double> theta) const {
        check(theta);
        FamilyParams fp;
        const int p = num_coefficients();
        std::vector<std::pair<int, double>> pairs;
        for (int j = 0; j < p; ++j) pairs.emplace_back(order_[j], theta[j]);
        std::sort(pairs.begin(), pairs.end());
        for (auto& [idx, v] : pairs) fp.b.push_back(v);
        fp.density = from_vector(theta.subspan(p), spec_);
        return fp;
    }

    std::vector<double> to_theta(const FamilyParams& fp) const {
        const int p = num_coefficients();
        if (static_cast<int>(fp.b.size()) != p) throw Error("coefficient count does not match parent count");
        auto sorted = order_;
        std::sort(sorted.begin(), sorted.end());
        std::vector<double> theta(static_cast<std::size_t>(p));
        for (int j = 0; j < p; ++j) {
            auto pos = std::find(sorted.begin(), sorted.end(), order_[j]) - sorted.begin();
            theta[j] = fp.b[static_cast<std::size_t>(pos)];
        }
        detail::check_consistent(fp.density, spec_);
        auto dv = to_vector(fp.density);
        theta.insert(theta.end(), dv.begin(), dv.end());
        return theta;
    }

private:
    void check(std::span<const double> theta) const {
        if (static_cast<int>(theta.size()) != dim())
            throw Error("parameter vector has length " + std::to_string(theta.size()) + ", expected " + std::to_string(dim()));
    }

    void compute_residuals(std::span<const double> theta) const {
        resid_ = y_;
        for (int j = 0; j < num_coefficients(); ++j) resid_.noalias() -= theta[j] * Xp_.col(j);
    }

    Family family_;
    DensitySpec spec_;
    std::vector<int> order_;
    Eigen::VectorXd y_;
    Eigen::MatrixXd Xp_;
    mutable Eigen::VectorXd resid_, de_;
};

// ---------------------------------------------------------------------------
// Seeds and parent ordering

inline std::vector<int> internal_parent_order(const Family& f, const Dataset& data, SeedPolicy policy) {
    auto order = f.parent_list();
    if (policy == SeedPolicy::ByContent) {
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return column_hash(data, a) < column_hash(data, b); });
    }
    return order;
}

inline std::uint64_t family_seed(const Family& f, const Dataset& data, const ScoreOptions& opts) {
    if (opts.seed_policy == SeedPolicy::ByIndex) return seeding::derive(opts.seed, "family", f.node, f.parents);
    std::uint64_t h = seeding::derive(opts.seed, "family-content", column_hash(data, f.node));
    for (int j : internal_parent_order(f, data, SeedPolicy::ByContent)) h = seeding::splitmix64(h ^ column_hash(data, j));
    return h;
}

/// Exact (unsmoothed) per-node log likelihood plus priors,
/// with parameters given in public layout.
inline double family_log_posterior(const FamilyParams& params, const Family& family, const Dataset& data,
                                   const DensitySpec& spec) {
    if (static_cast<int>(params.b.size()) != family.num_parents())
        throw Error("coefficient count " + std::to_string(params.b.size()) + " does not match parent count " +
                    std::to_string(family.num_parents()));
    FamilyObjective obj(family, data, spec, family.parent_list());
    auto theta = obj.to_theta(params);
    return obj.log_posterior(theta);
}

/// Least-squares coefficients of y on the columns of X (no intercept).
inline Eigen::VectorXd least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.cols() == 0) return Eigen::VectorXd(0);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < X.cols()) throw DataError("singular regression design (collinear parents)");
    return qr.solve(y);
}

// ---------------------------------------------------------------------------
// Optimization

struct ModeSearch {
    Eigen::VectorXd theta;  // internal order
    double log_posterior = -std::numeric_limits<double>::infinity();  // exact |e|
    bool converged = false;
    int restarts_used = 0;
};

inline ModeSearch find_mode(const FamilyObjective& obj, const OptimizerOptions& opt, std::uint64_t seed) {
    const int p = obj.num_coefficients();
    const int d = obj.dim();
    BfgsOptions bopt;
    bopt.max_iterations = opt.max_iterations;
    bopt.gradient_tolerance = opt.gradient_tolerance;

    std::vector<double> gbuf(static_cast<std::size_t>(d));
    auto negative = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        double v = obj.log_posterior_gradient(std::span<const double>(x.data(), d), gbuf, kAbsSmoothing);
        for (int i = 0; i < d; ++i) g[i] = -gbuf[i];
        return std::isfinite(v) ? -v : std::numeric_limits<double>::infinity();
    };

    ModeSearch best;
    bool best_converged = false;
    for (int r = 0; r < opt.restarts; ++r) {
        Eigen::VectorXd x0(d);
        if (r == 0) {
            Eigen::VectorXd b;
            try {
                b = least_squares(obj.design(), obj.response());
            } catch (const DataError&) {
                b = Eigen::VectorXd::Zero(p);
            }
            Eigen::VectorXd resid = obj.response() - obj.design() * b;
            DensityParams init;
            try {
                init = init_params(std::span<const double>(resid.data(), static_cast<std::size_t>(resid.size())), obj.spec());
            } catch (const DataError&) {
                std::mt19937_64 rng(seeding::derive(seed, "restart", r));
                init = sample_prior(obj.spec(), rng);
            }
            auto dv = to_vector(init);
            for (int j = 0; j < p; ++j) x0[j] = b[j];
            for (int i = 0; i < static_cast<int>(dv.size()); ++i) x0[p + i] = dv[i];
        } else {
            std::mt19937_64 rng(seeding::derive(seed, "restart", r));
            std::normal_distribution<double> normal;
            for (int j = 0; j < p; ++j) x0[j] = normal(rng);
            auto dv = to_vector(sample_prior(obj.spec(), rng));
            for (int i = 0; i < static_cast<int>(dv.size()); ++i) x0[p + i] = dv[i];
        }
        auto res = bfgs_minimize(negative, x0, bopt);
        double exact = obj.log_posterior(std::span<const double>(res.x.data(), d));
        if (!std::isfinite(exact)) continue;
        bool better = (res.converged && !best_converged) ||
                      (res.converged == best_converged && exact > best.log_posterior);
        if (better) {
            best.theta = res.x;
            best.log_posterior = exact;
            best_converged = res.converged;
        }
    }
    best.converged = best_converged;
    best.restarts_used = opt.restarts;
    if (best.theta.size() != d) throw Error("optimization produced no finite point");
    return best;
}

struct OptimizedFamily {
    FamilyParams mode;
    double log_posterior = 0.0;
    bool converged = false;
    int restarts_used = 0;
};

inline OptimizedFamily optimize_family(const Family& family, const Dataset& data, const DensitySpec& spec,
                                       const ScoreOptions& opts) {
    FamilyObjective obj(family, data, spec, internal_parent_order(family, data, opts.seed_policy));
    auto m = find_mode(obj, opts.optimizer, family_seed(family, data, opts));
    return {obj.to_params(std::span<const double>(m.theta.data(), static_cast<std::size_t>(m.theta.size()))),
            m.log_posterior, m.converged, m.restarts_used};
}

// ---------------------------------------------------------------------------
// Laplace approximation

struct LaplaceTerms {
    double log_ml = 0.0;
    double log_det = 0.0;
    double shift = 0.0;
};

/// log_ml = log_post + d/2 log(2 pi) - 1/2 log det(H), H the negative Hessian.
/// If H is not positive definite its diagonal is shifted so the smallest eigenvalue is 1e-8.
inline LaplaceTerms laplace_log_evidence(double log_post_at_mode, const Eigen::MatrixXd& neg_hessian) {
    const auto d = neg_hessian.rows();
    LaplaceTerms t;
    if (d == 0) {
        t.log_ml = log_post_at_mode;
        return t;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(neg_hessian, Eigen::EigenvaluesOnly);
    Eigen::VectorXd ev = eig.eigenvalues();
    double min_ev = ev.minCoeff();
    if (!(min_ev >= 1e-8)) t.shift = 1e-8 - min_ev;
    for (Eigen::Index i = 0; i < d; ++i) t.log_det += std::log(ev[i] + t.shift);
    t.log_ml = log_post_at_mode + 0.5 * static_cast<double>(d) * kLog2Pi - 0.5 * t.log_det;
    return t;
}

/// Negative Hessian of the (smoothed) log posterior by central differences of the analytic gradient.
inline Eigen::MatrixXd negative_hessian(const FamilyObjective& obj, const Eigen::VectorXd& theta, double step = 1e-4) {
    const int d = obj.dim();
    Eigen::MatrixXd H(d, d);
    std::vector<double> gp(static_cast<std::size_t>(d)), gm(static_cast<std::size_t>(d));
    Eigen::VectorXd x = theta;
    for (int i = 0; i < d; ++i) {
        x[i] = theta[i] + step;
        obj.log_posterior_gradient(std::span<const double>(x.data(), d), gp, kAbsSmoothing);
        x[i] = theta[i] - step;
        obj.log_posterior_gradient(std::span<const double>(x.data(), d), gm, kAbsSmoothing);
        x[i] = theta[i];
        for (int j = 0; j < d; ++j) H(j, i) = -(gp[j] - gm[j]) / (2.0 * step);
    }
    return 0.5 * (H + H.transpose());
}

inline FamilyScore laplace_family_score(const Family& family, const Dataset& data, const DensitySpec& spec,
                                        const ScoreOptions& opts) {
    FamilyObjective obj(family, data, spec, internal_parent_order(family, data, opts.seed_policy));
    auto m = find_mode(obj, opts.optimizer, family_seed(family, data, opts));
    auto terms = laplace_log_evidence(m.log_posterior, negative_hessian(obj, m.theta));
    FamilyScore s;
    s.family = family;
    s.log_ml = terms.log_ml;
    s.mode = obj.to_params(std::span<const double>(m.theta.data(), static_cast<std::size_t>(m.theta.size())));
    s.log_posterior_at_mode = m.log_posterior;
    s.hessian_log_det = terms.log_det;
    s.hessian_shift = terms.shift;
    s.dim = obj.dim();
    s.converged = m.converged;
    s.restarts_used = m.restarts_used;
    s.estimator = Estimator::Laplace;
    return s;
}

// ---------------------------------------------------------------------------
// Thermodynamic integration

struct ThermoResult {
    double log_evidence = 0.0;
    double std_error = 0.0;
    double min_acceptance = 1.0;
    bool converged = true;
    std::vector<double> temperatures;
    std::vector<double> mean_log_likelihood;
    Eigen::VectorXd best_theta;  // highest log posterior visited at t = 1
    double best_log_posterior = -std::numeric_limits<double>::infinity();
};

/// t_0 = 0, then rungs-1 geometrically spaced temperatures from min_temperature to 1.
inline std::vector<double> temperature_ladder(const McmcOptions& opt) {
    std::vector<double> t{0.0};
    const int K = opt.rungs;
    for (int k = 1; k < K; ++k) t.push_back(std::pow(opt.min_temperature, static_cast<double>(K - 1 - k) / (K - 2)));
    return t;
}

/// log p(D) = integral over t in [0, 1] of E_t[log L], where the rung-t
/// target is prior * L^t. Single-coordinate random-walk Metropolis at each
/// rung; proposal scales adapt during the first half of each rung's sweeps
/// and are then frozen. The rule is the trapezoid with the variance
/// correction term, -(dt^2 / 12) (V_{k+1} - V_k).
///
/// Target needs: dim(), log_prior(theta), log_likelihood(theta),
/// sample_prior(rng) and prior_scales().
template <typename Target, typename Rng>
ThermoResult thermodynamic_integration(const Target& target, const McmcOptions& opt, Rng& rng) {
    const int d = target.dim();
    auto temps = temperature_ladder(opt);
    const int steps = opt.steps;
    const int burn = steps / 2;
    const int window = 50;
    const int batches = 20;

    Eigen::VectorXd theta = target.sample_prior(rng);
    Eigen::VectorXd scale = target.prior_scales();
    auto finite_or_ninf = [](double v) { return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity(); };
    double lp = finite_or_ninf(target.log_prior(theta));
    double ll = finite_or_ninf(target.log_likelihood(theta));

    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif;

    ThermoResult out;
    out.temperatures = temps;
    std::vector<double> means, vars, ses;
    std::vector<int> acc(static_cast<std::size_t>(d)), acc_total(static_cast<std::size_t>(d));

    for (double t : temps) {
        std::fill(acc.begin(), acc.end(), 0);
        std::fill(acc_total.begin(), acc_total.end(), 0);
        std::vector<double> trace;
        trace.reserve(static_cast<std::size_t>(steps - burn));
        for (int s = 0; s < steps; ++s) {
            for (int i = 0; i < d; ++i) {
                double old = theta[i];
                theta[i] = old + scale[i] * normal(rng);
                double lp_new = finite_or_ninf(target.log_prior(theta));
                double ll_new = t > 0.0 || std::isfinite(lp_new) ? finite_or_ninf(target.log_likelihood(theta))
                                                                 : -std::numeric_limits<double>::infinity();
                double cur = lp + (t > 0.0 ? t * ll : 0.0);
                double prop = lp_new + (t > 0.0 ? t * ll_new : 0.0);
                if (std::isfinite(prop) && (!std::isfinite(cur) || std::log(unif(rng)) < prop - cur)) {
                    lp = lp_new;
                    ll = ll_new;
                    ++acc[i];
                    if (s >= burn) ++acc_total[i];
                } else {
                    theta[i] = old;
                }
            }
            if (s < burn && (s + 1) % window == 0) {
                for (int i = 0; i < d; ++i) {
                    double rate = static_cast<double>(acc[i]) / window;
                    scale[i] *= std::exp(2.0 * (rate - opt.target_acceptance));
                    acc[i] = 0;
                }
            }
            if (s >= burn) {
                trace.push_back(ll);
                if (t == 1.0 && lp + ll > out.best_log_posterior) {
                    out.best_log_posterior = lp + ll;
                    out.best_theta = theta;
                }
            }
        }
        for (int i = 0; i < d; ++i)
            out.min_acceptance = std::min(out.min_acceptance, static_cast<double>(acc_total[i]) / (steps - burn));

        const auto n = static_cast<double>(trace.size());
        double mean = 0.0;
        for (double v : trace) mean += v;
        mean /= n;
        double var = 0.0;
        for (double v : trace) var += (v - mean) * (v - mean);
        var /= (n - 1.0);
        // batch means for the Monte Carlo error of the rung average
        const std::size_t per = trace.size() / batches;
        double bvar = 0.0;
        for (int b = 0; b < batches; ++b) {
            double bm = 0.0;
            for (std::size_t k = b * per; k < (b + 1) * per; ++k) bm += trace[k];
            bm /= static_cast<double>(per);
            bvar += (bm - mean) * (bm - mean);
        }
        bvar /= (batches - 1);
        means.push_back(mean);
        vars.push_back(var);
        ses.push_back(std::sqrt(bvar / batches));
    }

    double total = 0.0;
    std::vector<double> w(temps.size(), 0.0);
    for (std::size_t k = 0; k + 1 < temps.size(); ++k) {
        double dt = temps[k + 1] - temps[k];
        total += 0.5 * dt * (means[k] + means[k + 1]) - dt * dt / 12.0 * (vars[k + 1] - vars[k]);
        w[k] += 0.5 * dt;
        w[k + 1] += 0.5 * dt;
    }
    double se2 = 0.0;
    for (std::size_t k = 0; k < temps.size(); ++k) se2 += w[k] * w[k] * ses[k] * ses[k];

    out.log_evidence = total;
    out.std_error = std::sqrt(se2);
    out.mean_log_likelihood = means;
    out.converged = out.min_acceptance >= 0.01 && std::isfinite(total);
    return out;
}

/// Adapts a FamilyObjective to the thermodynamic-integration target interface.
class FamilyTarget {
public:
    explicit FamilyTarget(const FamilyObjective& obj) : obj_(obj) {}

    int dim() const { return obj_.dim(); }
    double log_prior(const Eigen::VectorXd& th) const { return obj_.log_prior(view(th)); }
    double log_likelihood(const Eigen::VectorXd& th) const { return obj_.log_likelihood(view(th)); }

    template <typename Rng>
    Eigen::VectorXd sample_prior(Rng& rng) const {
        const int p = obj_.num_coefficients();
        Eigen::VectorXd th(dim());
        std::normal_distribution<double> normal;
        for (int j = 0; j < p; ++j) th[j] = normal(rng);
        auto dv = to_vector(bayeslingam::sample_prior(obj_.spec(), rng));
        for (int i = 0; i < static_cast<int>(dv.size()); ++i) th[p + i] = dv[i];
        return th;
    }

    Eigen::VectorXd prior_scales() const {
        const int p = obj_.num_coefficients();
        Eigen::VectorXd s(dim());
        for (int j = 0; j < p; ++j) s[j] = 1.0;
        for (int i = 0; i < obj_.spec().num_params(); ++i) s[p + i] = detail::prior_for(obj_.spec(), i).sd;
        return s;
    }

private:
    static std::span<const double> view(const Eigen::VectorXd& th) {
        return {th.data(), static_cast<std::size_t>(th.size())};
    }
    const FamilyObjective& obj_;
};

inline FamilyScore mcmc_family_score(const Family& family, const Dataset& data, const DensitySpec& spec,
                                     const ScoreOptions& opts) {
    if (spec.family != DensityFamily::GL) throw ConfigError("the MCMC estimator supports the GL density family only");
    FamilyObjective obj(family, data, spec, internal_parent_order(family, data, opts.seed_policy));
    FamilyTarget target(obj);
    std::mt19937_64 rng(seeding::derive(family_seed(family, data, opts), "mcmc"));
    auto r = thermodynamic_integration(target, opts.mcmc, rng);
    FamilyScore s;
    s.family = family;
    s.log_ml = r.log_evidence;
    s.std_error = r.std_error;
    s.dim = obj.dim();
    s.converged = r.converged;
    s.restarts_used = 0;
    s.estimator = Estimator::Mcmc;
    if (r.best_theta.size() == obj.dim()) {
        s.mode = obj.to_params(std::span<const double>(r.best_theta.data(), static_cast<std::size_t>(obj.dim())));
        s.log_posterior_at_mode = r.best_log_posterior;
    }
    return s;
}

inline FamilyScore score_family(const Family& family, const Dataset& data, const DensitySpec& spec,
                                const ScoreOptions& opts) {
    return opts.estimator == Estimator::Laplace ? laplace_family_score(family, data, spec, opts)
                                                : mcmc_family_score(family, data, spec, opts);
}

}  // namespace bayeslingam

#endif  // BAYESLINGAM_SCORE_HPP
