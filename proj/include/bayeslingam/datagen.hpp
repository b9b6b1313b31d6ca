#ifndef BAYESLINGAM_DATAGEN_HPP
#define BAYESLINGAM_DATAGEN_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "common.hpp"
#include "dataset.hpp"
#include "graph.hpp"
#include "score.hpp"

namespace bayeslingam {

using EdgeCoefficients = std::map<std::pair<int, int>, double>;  // (from, to) -> b

struct SyntheticConfig {
    int n = 2;
    double q = 1.0;
    int N = 1000;
    double coef_lo = -3.0;
    double coef_hi = 3.0;
    double min_abs_coef = 0.0;  // redraw coefficients smaller than this in magnitude
    std::uint64_t seed = 0;
    std::optional<Dag> dag;

    void validate() const {
        if (n < 1 || n > kMaxNodes) throw ConfigError("n must be between 1 and 64");
        if (!(q > 0) || !std::isfinite(q)) throw ConfigError("q must be positive");
        if (N < 2) throw ConfigError("N must be at least 2 (data are standardized)");
        if (!(coef_lo < coef_hi)) throw ConfigError("coefficient range must have lower < upper");
        if (!(min_abs_coef >= 0) || min_abs_coef >= std::max(std::abs(coef_lo), std::abs(coef_hi)))
            throw ConfigError("min_abs_coef leaves no admissible coefficients");
        if (dag && dag->size() != n) throw ConfigError("fixed DAG size does not match n");
        if (!dag && n > kMaxExhaustiveNodes)
            throw ConfigError("random DAG selection needs n <= " + std::to_string(kMaxExhaustiveNodes) + "; supply a DAG");
    }
};

struct GeneratedCase {
    Dag true_dag;
    EdgeCoefficients coefficients;
    Dataset data;
    std::uint64_t seed = 0;
    double q = 1.0;
};

/// sign(e)|e|^q
inline double power_transform(double e, double q) { return std::copysign(std::pow(std::abs(e), q), e); }

namespace detail {

inline const std::vector<std::uint64_t>& dag_keys_cached(int n) {
    static std::array<std::once_flag, kMaxExhaustiveNodes + 1> flags;
    static std::array<std::vector<std::uint64_t>, kMaxExhaustiveNodes + 1> keys;
    if (n < 1 || n > kMaxExhaustiveNodes) enumerate_dag_keys(n);
    std::call_once(flags[n], [n] { keys[n] = enumerate_dag_keys(n); });
    return keys[n];
}

// Raw linear-SEM data: each column = sum of parent columns times coefficient + its disturbance.
inline Eigen::MatrixXd propagate(const Dag& dag, const EdgeCoefficients& coef, const Eigen::MatrixXd& disturbances) {
    Eigen::MatrixXd X = disturbances;
    for (int i : topological_order(dag))
        for (int j : detail::mask_to_indices(dag.parents(i))) X.col(i) += coef.at({j, i}) * X.col(j);
    return X;
}

}  // namespace detail

/// Uniform draw over all labeled DAGs on n <= 6 nodes.
template <typename Rng>
Dag random_dag(int n, Rng& rng) {
    const auto& keys = detail::dag_keys_cached(n);
    std::uniform_int_distribution<std::size_t> pick(0, keys.size() - 1);
    return Dag::from_key(n, keys[pick(rng)]);
}

/// Random DAG, uniform edge coefficients, power-transformed Gaussian
/// disturbances, generated in topological order and then standardized.
inline GeneratedCase generate_synthetic(const SyntheticConfig& cfg) {
    cfg.validate();
    GeneratedCase out;
    out.seed = cfg.seed;
    out.q = cfg.q;
    {
        std::mt19937_64 rng(seeding::derive(cfg.seed, "dag"));
        out.true_dag = cfg.dag ? *cfg.dag : random_dag(cfg.n, rng);
    }
    {
        std::mt19937_64 rng(seeding::derive(cfg.seed, "coefficients"));
        std::uniform_real_distribution<double> coef(cfg.coef_lo, cfg.coef_hi);
        for (auto [from, to] : out.true_dag.edges()) {
            double b;
            do b = coef(rng);
            while (std::abs(b) < cfg.min_abs_coef);
            out.coefficients[{from, to}] = b;
        }
    }
    Eigen::MatrixXd E(cfg.N, cfg.n);
    {
        std::mt19937_64 rng(seeding::derive(cfg.seed, "disturbances"));
        std::normal_distribution<double> normal;
        for (int m = 0; m < cfg.N; ++m)
            for (int i = 0; i < cfg.n; ++i) E(m, i) = power_transform(normal(rng), cfg.q);
    }
    out.data = standardize(detail::propagate(out.true_dag, out.coefficients, E));
    return out;
}

struct Resimulation {
    GeneratedCase result;
    Eigen::MatrixXd residuals;   // OLS residuals, one column per node
    Eigen::MatrixXd shuffled;    // the same columns independently permuted
    Eigen::MatrixXd regenerated; // before subsampling and standardization
};

/// Fits the DAG by least squares, permutes each node's residuals
/// independently, pushes them back through the fitted model and
/// subsamples N_out rows without replacement.
inline Resimulation resimulate_detailed(const Dataset& data, const Dag& dag, int N_out, std::uint64_t seed) {
    const int n = data.cols();
    const int N = data.rows();
    if (dag.size() != n)
        throw ConfigError("DAG has " + std::to_string(dag.size()) + " nodes but the data have " + std::to_string(n) + " columns");
    if (N_out < 2) throw ConfigError("N_out must be at least 2");
    if (N_out > N) throw ConfigError("N_out (" + std::to_string(N_out) + ") exceeds the sample count (" + std::to_string(N) + ")");

    Resimulation r;
    r.result.true_dag = dag;
    r.result.seed = seed;
    r.result.q = std::numeric_limits<double>::quiet_NaN();
    r.residuals.resize(N, n);
    for (int i = 0; i < n; ++i) {
        auto parents = detail::mask_to_indices(dag.parents(i));
        Eigen::MatrixXd Xp(N, static_cast<Eigen::Index>(parents.size()));
        for (std::size_t k = 0; k < parents.size(); ++k) Xp.col(static_cast<Eigen::Index>(k)) = data.X.col(parents[k]);
        Eigen::VectorXd b;
        try {
            b = least_squares(Xp, data.X.col(i));
        } catch (const DataError&) {
            throw DataError("singular regression design for node " + std::to_string(i + 1) + " (collinear parents)");
        }
        for (std::size_t k = 0; k < parents.size(); ++k) r.result.coefficients[{parents[k], i}] = b[static_cast<Eigen::Index>(k)];
        r.residuals.col(i) = data.X.col(i) - Xp * b;
    }

    r.shuffled = r.residuals;
    std::vector<int> perm(static_cast<std::size_t>(N));
    for (int i = 0; i < n; ++i) {
        std::mt19937_64 rng(seeding::derive(seed, "shuffle", i));
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        for (int m = 0; m < N; ++m) r.shuffled(m, i) = r.residuals(perm[m], i);
    }
    r.regenerated = detail::propagate(dag, r.result.coefficients, r.shuffled);

    std::mt19937_64 rng(seeding::derive(seed, "subsample"));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    perm.resize(static_cast<std::size_t>(N_out));
    std::sort(perm.begin(), perm.end());
    Eigen::MatrixXd sub(N_out, n);
    for (int m = 0; m < N_out; ++m) sub.row(m) = r.regenerated.row(perm[m]);
    r.result.data = standardize(sub, data.names);
    return r;
}

inline GeneratedCase resimulate(const Dataset& data, const Dag& dag, int N_out, std::uint64_t seed) {
    return resimulate_detailed(data, dag, N_out, seed).result;
}

}  // namespace bayeslingam

#endif  // BAYESLINGAM_DATAGEN_HPP
