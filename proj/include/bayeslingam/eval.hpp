#ifndef BAYESLINGAM_EVAL_HPP
#define BAYESLINGAM_EVAL_HPP

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "common.hpp"
#include "datagen.hpp"
#include "graph.hpp"
#include "posterior.hpp"

namespace bayeslingam {

/// A probabilistic structure prediction plus the label of the method that made it.
struct Prediction {
    PosteriorResult posterior;
    std::string method;
};

struct LossReport {
    int binary = 0;
    int cls = 0;
    double log = 0.0;  // +inf when the truth got zero probability
    double quadratic = 0.0;
};

/// Number of labeled DAGs on n nodes (Robinson's recurrence); double beyond exact range.
inline double dag_count(int n) {
    std::vector<double> a(static_cast<std::size_t>(n) + 1, 0.0);
    a[0] = 1.0;
    for (int m = 1; m <= n; ++m) {
        double binom = 1.0;
        for (int k = 1; k <= m; ++k) {
            binom = binom * (m - k + 1) / k;
            a[m] += ((k % 2) ? 1.0 : -1.0) * binom * std::pow(2.0, k * (m - k)) * a[m - k];
        }
    }
    return a[n];
}

inline double prob_of_truth(const PosteriorResult& p, const Dag& truth) {
    if (!p.entries.empty() && p.entries.front().dag.size() != truth.size())
        throw Error("prediction and truth have different node counts");
    return p.prob_of(truth);
}

inline int binary_loss(const PosteriorResult& p, const Dag& truth) { return p.top().dag == truth ? 0 : 1; }

/// Wrong-class indicator. Predictions carrying a class view are judged by
/// their most probable class; otherwise by the class of the best DAG.
inline int class_loss(const PosteriorResult& p, const Dag& truth) {
    const Cpdag guess = p.class_view && !p.class_view->empty() ? p.class_view->front().cpdag : to_cpdag(p.top().dag);
    return guess == to_cpdag(truth) ? 0 : 1;
}

inline double log_loss(const PosteriorResult& p, const Dag& truth) {
    double pt = prob_of_truth(p, truth);
    return pt > 0.0 ? -std::log(pt) : std::numeric_limits<double>::infinity();
}

/// Squared distance to the indicator vector of the truth; DAGs absent from
/// the prediction count as probability zero.
inline double quadratic_loss(const PosteriorResult& p, const Dag& truth) {
    double s = 0.0;
    bool seen = false;
    for (const auto& e : p.entries) {
        bool hit = e.dag == truth;
        seen = seen || hit;
        double d = e.prob - (hit ? 1.0 : 0.0);
        s += d * d;
    }
    if (!seen) s += 1.0;
    return s;
}

inline LossReport evaluate(const PosteriorResult& p, const Dag& truth) {
    return {binary_loss(p, truth), class_loss(p, truth), log_loss(p, truth), quadratic_loss(p, truth)};
}

/// DAG-level prediction from class probabilities, each class's mass split
/// evenly over its member DAGs. Needs n <= 6 to enumerate members.
inline PosteriorResult class_spread(const std::vector<ClassEntry>& classes, int n) {
    std::unordered_map<Cpdag, std::vector<Dag>> members;
    for (const auto& c : classes) members.try_emplace(c.cpdag);
    for (auto key : enumerate_dag_keys(n)) {
        auto g = Dag::from_key(n, key);
        auto it = members.find(to_cpdag(g));
        if (it != members.end()) it->second.push_back(std::move(g));
    }
    std::vector<PosteriorEntry> entries;
    for (const auto& c : classes) {
        const auto& ms = members.at(c.cpdag);
        if (ms.empty()) throw GraphError("'" + to_text(c.cpdag) + "' is not the pattern of any DAG");
        for (const auto& g : ms) {
            double p = c.prob / static_cast<double>(ms.size());
            entries.push_back({g, std::log(p), p});
        }
    }
    PosteriorResult r;
    detail::sort_entries(entries);
    r.entries = std::move(entries);
    r.class_view = classes;
    std::sort(r.class_view->begin(), r.class_view->end(), [](const ClassEntry& a, const ClassEntry& b) {
        if (a.prob != b.prob) return a.prob > b.prob;
        return to_text(a.cpdag) < to_text(b.cpdag);
    });
    return r;
}

// ---------------------------------------------------------------------------
// Calibration

struct CalibrationBin {
    double lo = 0.0, hi = 0.0;
    double mean_pred = 0.0;  // NaN for empty bins
    double freq = 0.0;       // NaN for empty bins
    long long count = 0;
};

/// Accumulates (predicted probability, was-it-the-truth) pairs over every
/// DAG of every run into equal-width bins on [0, 1].
class CalibrationAccumulator {
public:
    explicit CalibrationAccumulator(int bins = 10) : sum_(check(bins), 0.0), hits_(bins, 0), count_(bins, 0) {}

    void add(double p, bool truth) {
        int b = std::min(static_cast<int>(p * static_cast<double>(sum_.size())), static_cast<int>(sum_.size()) - 1);
        b = std::max(b, 0);
        sum_[b] += p;
        hits_[b] += truth ? 1 : 0;
        ++count_[b];
    }

    /// Every DAG on n nodes; those not listed in the prediction count as probability 0.
    void add_run(const PosteriorResult& p, const Dag& truth) {
        const double total = dag_count(truth.size());
        if (!(total < 9e15)) throw ConfigError("calibration over all DAGs needs a countable DAG space");
        bool seen = false;
        for (const auto& e : p.entries) {
            bool hit = e.dag == truth;
            seen = seen || hit;
            add(e.prob, hit);
        }
        auto missing = static_cast<long long>(total) - static_cast<long long>(p.entries.size());
        if (missing > 0) {
            hits_[0] += seen ? 0 : 1;
            count_[0] += missing;
        }
    }

    std::vector<CalibrationBin> table() const {
        const int k = static_cast<int>(sum_.size());
        std::vector<CalibrationBin> out;
        for (int b = 0; b < k; ++b) {
            CalibrationBin bin;
            bin.lo = static_cast<double>(b) / k;
            bin.hi = static_cast<double>(b + 1) / k;
            bin.count = count_[b];
            bin.mean_pred = count_[b] ? sum_[b] / static_cast<double>(count_[b]) : std::numeric_limits<double>::quiet_NaN();
            bin.freq = count_[b] ? static_cast<double>(hits_[b]) / static_cast<double>(count_[b])
                                 : std::numeric_limits<double>::quiet_NaN();
            out.push_back(bin);
        }
        return out;
    }

private:
    static std::size_t check(int bins) {
        if (bins < 2) throw ConfigError("calibration needs at least 2 bins");
        return static_cast<std::size_t>(bins);
    }
    std::vector<double> sum_;
    std::vector<long long> hits_;
    std::vector<long long> count_;
};

inline std::vector<CalibrationBin> calibration_table(const std::vector<std::pair<const PosteriorResult*, Dag>>& runs,
                                                     int bins = 10) {
    if (runs.empty()) throw ConfigError("calibration needs at least one run");
    CalibrationAccumulator acc(bins);
    for (const auto& [p, truth] : runs) acc.add_run(*p, truth);
    return acc.table();
}

// ---------------------------------------------------------------------------
// Benchmark grid

struct MethodConfig {
    std::string name;
    DensitySpec density;
    Estimator estimator = Estimator::Laplace;
};

inline MethodConfig parse_method(const std::string& name) {
    MethodConfig m;
    m.name = name;
    if (name == "gl-laplace") return m;
    if (name == "mog-laplace") {
        m.density.family = DensityFamily::MoG;
        return m;
    }
    if (name == "gl-mcmc") {
        m.estimator = Estimator::Mcmc;
        return m;
    }
    throw ConfigError("unknown method '" + name + "' (expected gl-laplace, mog-laplace or gl-mcmc)");
}

inline std::vector<double> default_q_values() {
    std::vector<double> q;
    for (int k = 0; k < 9; ++k) q.push_back(std::exp(-1.0 + 2.0 * k / 8.0));
    return q;
}

struct BenchmarkConfig {
    int n = 2;
    std::vector<double> q_values = default_q_values();
    std::vector<int> N_values{10, 30, 100, 300, 1000, 3000, 10000};
    int reps = 100;
    std::vector<MethodConfig> methods{parse_method("gl-laplace"), parse_method("mog-laplace")};
    std::uint64_t seed = 0;
    ScoreOptions score;  // per-case seeds override score.seed
    int jobs = 1;
    int calibration_bins = 10;
    bool record_runtime = false;  // wall-clock times make reruns differ byte-wise

    void validate() const {
        if (n < 1 || n > kMaxExhaustiveNodes) throw ConfigError("benchmark n must be between 1 and 6");
        if (q_values.empty() || N_values.empty() || methods.empty()) throw ConfigError("benchmark grid is empty");
        for (double q : q_values)
            if (!(q > 0)) throw ConfigError("q values must be positive");
        for (int N : N_values)
            if (N < 2) throw ConfigError("N values must be at least 2");
        if (reps < 1) throw ConfigError("reps must be >= 1");
        if (calibration_bins < 2) throw ConfigError("calibration bins must be >= 2");
        for (const auto& m : methods) {
            m.density.validate();
            if (m.estimator == Estimator::Mcmc && m.density.family != DensityFamily::GL)
                throw ConfigError("method '" + m.name + "': MCMC supports the GL family only");
        }
        score.validate();
    }
};

struct BenchmarkRow {
    double q = 0.0;
    int N = 0;
    int rep = 0;
    std::string method;
    LossReport loss;
    double runtime_s = 0.0;
    std::string error;  // empty on success
};

struct BenchmarkResult {
    std::vector<BenchmarkRow> rows;
    std::map<std::string, std::vector<CalibrationBin>> calibration;  // per method
    std::vector<CalibrationBin> calibration_overall;                 // all methods pooled
};

inline std::uint64_t case_seed(std::uint64_t seed, std::size_t qi, std::size_t Ni, int rep) {
    return seeding::derive(seed, "case", qi, Ni, rep);
}

/// Generates every (q, N, rep) case, runs every method, scores all four
/// losses. Rows come out in grid order regardless of scheduling.
inline BenchmarkResult benchmark_grid(const BenchmarkConfig& cfg) {
    cfg.validate();
    const std::size_t nq = cfg.q_values.size(), nN = cfg.N_values.size(), nm = cfg.methods.size();
    const std::size_t cases = nq * nN * static_cast<std::size_t>(cfg.reps);
    std::vector<BenchmarkRow> rows(cases * nm);
    std::vector<std::vector<std::pair<double, bool>>> calib(cases * nm);

    parallel_for(cases, cfg.jobs, [&](std::size_t c) {
        const std::size_t qi = c / (nN * cfg.reps);
        const std::size_t Ni = (c / cfg.reps) % nN;
        const int rep = static_cast<int>(c % cfg.reps);
        const auto seed = case_seed(cfg.seed, qi, Ni, rep);
        SyntheticConfig sc;
        sc.n = cfg.n;
        sc.q = cfg.q_values[qi];
        sc.N = cfg.N_values[Ni];
        sc.seed = seed;
        std::optional<GeneratedCase> gen;
        std::string gen_error;
        try {
            gen = generate_synthetic(sc);
        } catch (const std::exception& e) {
            gen_error = e.what();
        }
        for (std::size_t mi = 0; mi < nm; ++mi) {
            auto& row = rows[c * nm + mi];
            row.q = sc.q;
            row.N = sc.N;
            row.rep = rep;
            row.method = cfg.methods[mi].name;
            if (!gen) {
                row.error = gen_error;
                continue;
            }
            ScoreOptions so = cfg.score;
            so.estimator = cfg.methods[mi].estimator;
            so.seed = seeding::derive(seed, "score");
            auto t0 = std::chrono::steady_clock::now();
            try {
                auto post = exhaustive_posterior(gen->data, cfg.methods[mi].density, so);
                row.loss = evaluate(post, gen->true_dag);
                for (const auto& e : post.entries) calib[c * nm + mi].emplace_back(e.prob, e.dag == gen->true_dag);
            } catch (const std::exception& e) {
                row.error = e.what();
            }
            if (cfg.record_runtime)
                row.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
    });

    BenchmarkResult out;
    CalibrationAccumulator all(cfg.calibration_bins);
    for (std::size_t mi = 0; mi < nm; ++mi) {
        CalibrationAccumulator acc(cfg.calibration_bins);
        for (std::size_t c = 0; c < cases; ++c)
            for (auto [p, hit] : calib[c * nm + mi]) {
                acc.add(p, hit);
                all.add(p, hit);
            }
        out.calibration[cfg.methods[mi].name] = acc.table();
    }
    out.calibration_overall = all.table();
    out.rows = std::move(rows);
    return out;
}

// ---------------------------------------------------------------------------
// CSV text

inline std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);  // shortest text that reads back exactly
    return std::string(buf, res.ptr);
}

inline std::string csv_field(std::string s) {
    for (char& ch : s)
        if (ch == ',' || ch == '\n' || ch == '\r' || ch == '"') ch = ch == ',' ? ';' : ' ';
    return s;
}

inline std::string benchmark_csv(const std::vector<BenchmarkRow>& rows) {
    std::ostringstream os;
    os << "q,N,rep,method,binary,class,log,quadratic,runtime_s,error\n";
    for (const auto& r : rows) {
        os << format_double(r.q) << ',' << r.N << ',' << r.rep << ',' << csv_field(r.method) << ',';
        if (r.error.empty())
            os << r.loss.binary << ',' << r.loss.cls << ',' << format_double(r.loss.log) << ','
               << format_double(r.loss.quadratic);
        else
            os << ",,,";
        os << ',' << format_double(r.runtime_s) << ',' << csv_field(r.error) << '\n';
    }
    return os.str();
}

inline std::string calibration_csv(const std::vector<CalibrationBin>& bins) {
    std::ostringstream os;
    os << "bin_lo,bin_hi,mean_pred,freq,count\n";
    for (const auto& b : bins)
        os << format_double(b.lo) << ',' << format_double(b.hi) << ',' << format_double(b.mean_pred) << ','
           << format_double(b.freq) << ',' << b.count << '\n';
    return os.str();
}

}  // namespace bayeslingam

#endif  // BAYESLINGAM_EVAL_HPP
