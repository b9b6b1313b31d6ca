#ifndef BAYESLINGAM_POSTERIOR_HPP
#define BAYESLINGAM_POSTERIOR_HPP

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "common.hpp"
#include "dataset.hpp"
#include "graph.hpp"
#include "score.hpp"

namespace bayeslingam {

/// Hash of everything a family score depends on besides the family itself.
inline std::uint64_t score_fingerprint(const Dataset& data, const DensitySpec& spec, const ScoreOptions& opts) {
    auto mix = [](std::uint64_t h, double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        return seeding::splitmix64(h ^ bits);
    };
    std::uint64_t h = fingerprint(data);
    h = seeding::splitmix64(h ^ static_cast<std::uint64_t>(spec.family));
    h = seeding::splitmix64(h ^ static_cast<std::uint64_t>(spec.mog_components));
    for (const GaussianPrior* p : {&spec.alpha, &spec.log_beta, &spec.gamma, &spec.mu, &spec.log_sigma})
        h = mix(mix(h, p->mean), p->sd);
    h = seeding::splitmix64(h ^ static_cast<std::uint64_t>(opts.optimizer.restarts));
    h = seeding::splitmix64(h ^ static_cast<std::uint64_t>(opts.optimizer.max_iterations));
    h = mix(h, opts.optimizer.gradient_tolerance);
    h = seeding::splitmix64(h ^ static_cast<std::uint64_t>(opts.mcmc.rungs));
    h = seeding::splitmix64(h ^ static_cast<std::uint64_t>(opts.mcmc.steps));
    h = mix(mix(h, opts.mcmc.target_acceptance), opts.mcmc.min_temperature);
    h = seeding::splitmix64(h ^ static_cast<std::uint64_t>(opts.estimator));
    h = seeding::splitmix64(h ^ static_cast<std::uint64_t>(opts.seed_policy));
    return seeding::splitmix64(h ^ opts.seed);
}

/// Family scores for one dataset and configuration. Filled either up front
/// (all n 2^(n-1) families) or on demand as a search asks for them.
class FamilyScoreCache {
public:
    FamilyScoreCache() = default;
    FamilyScoreCache(int n, std::uint64_t fingerprint) : n_(n), fingerprint_(fingerprint) {}

    int size_n() const { return n_; }
    std::uint64_t fingerprint() const { return fingerprint_; }
    std::size_t size() const { return scores_.size(); }
    bool contains(const Family& f) const { return scores_.count(f) != 0; }

    const FamilyScore& at(const Family& f) const {
        auto it = scores_.find(f);
        if (it == scores_.end()) {
            std::string ps;
            for (int j : f.parent_list()) ps += (ps.empty() ? "" : ",") + std::to_string(j + 1);
            throw Error("family (node " + std::to_string(f.node + 1) + ", parents {" + ps + "}) is not in the score cache");
        }
        return it->second;
    }

    void insert(FamilyScore s) {
        if (s.family.node < 0 || s.family.node >= n_) throw Error("family node out of range for cache");
        auto f = s.family;
        scores_.insert_or_assign(f, std::move(s));
    }

    /// Scores every listed family not already cached, concurrently, then inserts them in list order.
    void ensure(const std::vector<Family>& families, const Dataset& data, const DensitySpec& spec,
                const ScoreOptions& opts, int jobs = 1) {
        std::vector<Family> todo;
        for (const auto& f : families)
            if (!contains(f) && std::find(todo.begin(), todo.end(), f) == todo.end()) todo.push_back(f);
        std::vector<FamilyScore> out(todo.size());
        parallel_for(todo.size(), jobs, [&](std::size_t i) { out[i] = score_family(todo[i], data, spec, opts); });
        for (auto& s : out) insert(std::move(s));
    }

    /// All entries ordered by family index.
    std::vector<FamilyScore> sorted() const {
        std::vector<FamilyScore> v;
        for (const auto& [f, s] : scores_) v.push_back(s);
        std::sort(v.begin(), v.end(), [](const FamilyScore& a, const FamilyScore& b) { return a.family < b.family; });
        return v;
    }

private:
    int n_ = 0;
    std::uint64_t fingerprint_ = 0;
    std::unordered_map<Family, FamilyScore> scores_;
};

enum class CacheFill { All, OnDemand };

inline FamilyScoreCache build_cache(const Dataset& data, const DensitySpec& spec, const ScoreOptions& opts,
                                    CacheFill fill = CacheFill::All, int jobs = 1) {
    spec.validate();
    opts.validate();
    const int n = data.cols();
    if (fill == CacheFill::All && n > kMaxExhaustiveNodes)
        throw ConfigError("scoring all families needs n <= " + std::to_string(kMaxExhaustiveNodes) + " (got " +
                          std::to_string(n) + "); use greedy search");
    FamilyScoreCache cache(n, score_fingerprint(data, spec, opts));
    if (fill == CacheFill::All) cache.ensure(enumerate_families(n), data, spec, opts, jobs);
    return cache;
}

/// Sum of family log marginal likelihoods, added in node order.
inline double dag_log_score(const Dag& dag, const FamilyScoreCache& cache) {
    if (dag.size() != cache.size_n()) throw Error("DAG size does not match the cache");
    double s = 0.0;
    for (int i = 0; i < dag.size(); ++i) s += cache.at({i, dag.parents(i)}).log_ml;
    return s;
}

enum class PosteriorMode { Exhaustive, Greedy };

inline std::string to_string(PosteriorMode m) { return m == PosteriorMode::Exhaustive ? "exhaustive" : "greedy"; }

struct PosteriorEntry {
    Dag dag;
    double log_score = 0.0;
    double prob = 0.0;
};

struct ClassEntry {
    Cpdag cpdag;
    double prob = 0.0;
};

struct PosteriorResult {
    std::vector<PosteriorEntry> entries;  // descending probability
    PosteriorMode mode = PosteriorMode::Exhaustive;
    double log_normalizer = 0.0;
    std::optional<std::vector<ClassEntry>> class_view;
    std::vector<double> trajectory;  // greedy: score of each accepted DAG, starting from the empty graph

    const PosteriorEntry& top() const {
        if (entries.empty()) throw Error("empty posterior");
        return entries.front();
    }

    /// Probability of a DAG, zero if it is not among the entries.
    double prob_of(const Dag& g) const {
        for (const auto& e : entries)
            if (e.dag == g) return e.prob;
        return 0.0;
    }
};

struct PosteriorOptions {
    bool classes = true;
    int jobs = 1;
};

namespace detail {

inline double log_sum_exp(const std::vector<double>& v) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : v) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
}

// Higher probability first; exact ties go to the smaller text form.
inline void sort_entries(std::vector<PosteriorEntry>& e) {
    std::sort(e.begin(), e.end(), [](const PosteriorEntry& a, const PosteriorEntry& b) {
        if (a.prob != b.prob) return a.prob > b.prob;
        return to_text(a.dag) < to_text(b.dag);
    });
}

inline std::vector<ClassEntry> class_view(const std::vector<PosteriorEntry>& entries) {
    std::unordered_map<Cpdag, double> mass;
    std::vector<Cpdag> order;
    for (const auto& e : entries) {
        auto c = to_cpdag(e.dag);
        auto [it, fresh] = mass.try_emplace(c, 0.0);
        if (fresh) order.push_back(c);
        it->second += e.prob;
    }
    std::vector<ClassEntry> out;
    for (auto& c : order) out.push_back({c, mass[c]});
    std::sort(out.begin(), out.end(), [](const ClassEntry& a, const ClassEntry& b) {
        if (a.prob != b.prob) return a.prob > b.prob;
        return to_text(a.cpdag) < to_text(b.cpdag);
    });
    return out;
}

inline PosteriorResult normalize(std::vector<PosteriorEntry> entries, PosteriorMode mode, bool classes) {
    std::vector<double> ls;
    ls.reserve(entries.size());
    for (const auto& e : entries) ls.push_back(e.log_score);
    PosteriorResult r;
    r.mode = mode;
    r.log_normalizer = log_sum_exp(ls);
    if (!std::isfinite(r.log_normalizer)) throw Error("posterior normalizer is not finite");
    for (auto& e : entries) e.prob = std::exp(e.log_score - r.log_normalizer);
    sort_entries(entries);
    r.entries = std::move(entries);
    if (classes) r.class_view = class_view(r.entries);
    return r;
}

}  // namespace detail

/// Posterior over every DAG on n nodes under a uniform structure prior.
inline PosteriorResult exhaustive_posterior(const FamilyScoreCache& cache, const PosteriorOptions& po = {}) {
    const int n = cache.size_n();
    if (n > kMaxExhaustiveNodes)
        throw ConfigError("exhaustive posterior needs n <= " + std::to_string(kMaxExhaustiveNodes) + " (got " +
                          std::to_string(n) + "); use greedy search");
    const auto keys = enumerate_dag_keys(n);
    std::vector<PosteriorEntry> entries;
    entries.reserve(keys.size());
    for (auto k : keys) {
        auto g = Dag::from_key(n, k);
        double s = dag_log_score(g, cache);
        entries.push_back({std::move(g), s, 0.0});
    }
    return detail::normalize(std::move(entries), PosteriorMode::Exhaustive, po.classes);
}

inline PosteriorResult exhaustive_posterior(const Dataset& data, const DensitySpec& spec, const ScoreOptions& opts,
                                            const PosteriorOptions& po = {}) {
    return exhaustive_posterior(build_cache(data, spec, opts, CacheFill::All, po.jobs), po);
}

/// All DAGs one edge addition, removal or reversal away from g.
inline std::vector<Dag> neighbors(const Dag& g) {
    const int n = g.size();
    std::vector<Dag> out;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            if (i == j) continue;
            if (g.has_edge(j, i)) {
                Dag r = g;
                r.remove_edge(j, i);
                out.push_back(r);
                if (!r.reachable(j, i)) {  // i -> j closes a cycle iff j already reaches i
                    r.add_edge(i, j);
                    out.push_back(std::move(r));
                }
            } else if (!g.has_edge(i, j) && !g.reachable(i, j)) {
                Dag a = g;
                a.add_edge(j, i);
                out.push_back(std::move(a));
            }
        }
    return out;
}

/// Hill climbing from the empty graph with add/remove/reverse moves. Each
/// step scores the whole neighborhood and moves to the best neighbor if it
/// strictly improves; ties go to the smaller text form. The posterior is
/// normalized over every distinct DAG scored along the way, which includes
/// the full neighborhood of the final DAG.
inline PosteriorResult greedy_search(FamilyScoreCache& cache, const Dataset& data, const DensitySpec& spec,
                                     const ScoreOptions& opts, const PosteriorOptions& po = {}) {
    const int n = data.cols();
    if (cache.size_n() != n) throw Error("cache does not match the dataset");
    std::unordered_map<Dag, double> seen;
    std::vector<Dag> seen_order;
    auto record = [&](const Dag& g) {
        auto it = seen.find(g);
        if (it != seen.end()) return it->second;
        double s = dag_log_score(g, cache);
        seen.emplace(g, s);
        seen_order.push_back(g);
        return s;
    };

    Dag cur = Dag::unchecked(n, std::vector<NodeMask>(static_cast<std::size_t>(n), 0));
    cache.ensure(dag_to_families(cur), data, spec, opts, po.jobs);
    double cur_score = record(cur);
    std::vector<double> trajectory{cur_score};

    for (;;) {
        auto nb = neighbors(cur);
        std::vector<Family> need;
        for (const auto& g : nb)
            for (int i = 0; i < n; ++i)
                if (g.parents(i) != cur.parents(i)) need.push_back({i, g.parents(i)});
        cache.ensure(need, data, spec, opts, po.jobs);

        const Dag* best = nullptr;
        double best_score = -std::numeric_limits<double>::infinity();
        std::string best_text;
        for (const auto& g : nb) {
            double s = record(g);
            if (best == nullptr || s > best_score || (s == best_score && to_text(g) < best_text)) {
                best = &g;
                best_score = s;
                best_text = to_text(g);
            }
        }
        if (best == nullptr || !(best_score > cur_score)) break;
        cur = *best;
        cur_score = best_score;
        trajectory.push_back(cur_score);
    }

    std::vector<PosteriorEntry> entries;
    entries.reserve(seen_order.size());
    for (const auto& g : seen_order) entries.push_back({g, seen.at(g), 0.0});
    auto r = detail::normalize(std::move(entries), PosteriorMode::Greedy, po.classes);
    r.trajectory = std::move(trajectory);
    return r;
}

inline PosteriorResult greedy_search(const Dataset& data, const DensitySpec& spec, const ScoreOptions& opts,
                                     const PosteriorOptions& po = {}) {
    auto cache = build_cache(data, spec, opts, CacheFill::OnDemand, po.jobs);
    return greedy_search(cache, data, spec, opts, po);
}

}  // namespace bayeslingam

#endif  // BAYESLINGAM_POSTERIOR_HPP
