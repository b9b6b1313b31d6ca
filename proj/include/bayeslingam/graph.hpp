#ifndef BAYESLINGAM_GRAPH_HPP
#define BAYESLINGAM_GRAPH_HPP

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <functional>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "common.hpp"

namespace bayeslingam {

/// Largest variable count handled by exhaustive enumeration.
inline constexpr int kMaxExhaustiveNodes = 6;
/// Parent sets are 64-bit masks.
inline constexpr int kMaxNodes = 64;

using NodeMask = std::uint64_t;

namespace detail {

inline NodeMask bit(int i) { return NodeMask{1} << i; }

inline std::vector<int> mask_to_indices(NodeMask m) {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(std::popcount(m)));
    while (m) {
        out.push_back(std::countr_zero(m));
        m &= m - 1;
    }
    return out;
}

inline void check_node_count(int n) {
    if (n < 1 || n > kMaxNodes)
        throw GraphError("variable count " + std::to_string(n) + " outside [1, " +
                         std::to_string(kMaxNodes) + "]");
}

inline int parse_index(std::string_view s, int n) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
        throw GraphError("bad node index '" + std::string(s) + "'");
    if (v < 1 || v > n)
        throw GraphError("node index " + std::to_string(v) + " outside [1, " + std::to_string(n) + "]");
    return v - 1;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            parts.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return parts;
}

}  // namespace detail

/// Directed acyclic graph over n variables, stored as one parent mask per node.
/// Edge j -> i means j is a parent of i. Acyclicity is checked on every mutation.
class Dag {
public:
    Dag() = default;
    explicit Dag(int n) : n_(n), parents_(static_cast<std::size_t>(n), 0) { detail::check_node_count(n); }

    /// Builds from parent masks; throws GraphError on self-loops, out-of-range bits or cycles.
    static Dag from_parent_masks(int n, std::vector<NodeMask> masks) {
        Dag d = unchecked(n, std::move(masks));
        NodeMask all = n == 64 ? ~NodeMask{0} : detail::bit(n) - 1;
        for (int i = 0; i < n; ++i) {
            if (d.parents_[i] & detail::bit(i)) throw GraphError("self-loop at node " + std::to_string(i + 1));
            if (d.parents_[i] & ~all) throw GraphError("parent index out of range");
        }
        if (!d.is_acyclic()) throw GraphError("graph contains a directed cycle");
        return d;
    }

    /// No validation. Only for tests and for callers that verify acyclicity themselves.
    static Dag unchecked(int n, std::vector<NodeMask> masks) {
        detail::check_node_count(n);
        if (masks.size() != static_cast<std::size_t>(n)) throw GraphError("parent mask count does not match n");
        Dag d;
        d.n_ = n;
        d.parents_ = std::move(masks);
        return d;
    }

    /// Row-major bit-matrix key (bit j*n+i for j -> i); defined for n <= 8.
    static Dag from_key(int n, std::uint64_t key) {
        std::vector<NodeMask> masks(static_cast<std::size_t>(n), 0);
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i)
                if (key >> (j * n + i) & 1U) masks[i] |= detail::bit(j);
        return unchecked(n, std::move(masks));
    }

    int size() const { return n_; }
    NodeMask parents(int i) const { return parents_[static_cast<std::size_t>(i)]; }
    const std::vector<NodeMask>& parent_masks() const { return parents_; }
    bool has_edge(int from, int to) const { return (parents_[to] >> from) & 1U; }
    bool adjacent(int a, int b) const { return has_edge(a, b) || has_edge(b, a); }

    int num_edges() const {
        int e = 0;
        for (auto m : parents_) e += std::popcount(m);
        return e;
    }

    /// Edges as (parent, child) pairs, sorted by parent then child.
    std::vector<std::pair<int, int>> edges() const {
        std::vector<std::pair<int, int>> out;
        for (int j = 0; j < n_; ++j)
            for (int i = 0; i < n_; ++i)
                if (has_edge(j, i)) out.emplace_back(j, i);
        return out;
    }

    std::uint64_t key() const {
        if (n_ > 8) throw GraphError("bit-matrix key only defined for n <= 8");
        std::uint64_t k = 0;
        for (int i = 0; i < n_; ++i)
            for (int j : detail::mask_to_indices(parents_[i])) k |= std::uint64_t{1} << (j * n_ + i);
        return k;
    }

    void add_edge(int from, int to) {
        check_pair(from, to);
        if (has_edge(from, to)) throw GraphError("duplicate edge");
        parents_[to] |= detail::bit(from);
        if (!is_acyclic()) {
            parents_[to] &= ~detail::bit(from);
            throw GraphError("edge " + std::to_string(from + 1) + "->" + std::to_string(to + 1) +
                             " would create a cycle");
        }
    }

    void remove_edge(int from, int to) {
        check_pair(from, to);
        parents_[to] &= ~detail::bit(from);
    }

    /// Whether some directed path leads from `from` to `to` (length >= 1).
    bool reachable(int from, int to) const {
        NodeMask seen = 0, frontier = detail::bit(from);
        while (frontier) {
            NodeMask next = 0;
            for (int i = 0; i < n_; ++i)
                if (parents_[i] & frontier) next |= detail::bit(i);
            if (next & detail::bit(to)) return true;
            next &= ~seen;
            seen |= next;
            frontier = next;
        }
        return false;
    }

    bool is_acyclic() const {
        NodeMask removed = 0;
        for (int round = 0; round < n_; ++round) {
            bool progress = false;
            for (int i = 0; i < n_; ++i) {
                if (removed & detail::bit(i)) continue;
                if ((parents_[i] & ~removed) == 0) {
                    removed |= detail::bit(i);
                    progress = true;
                }
            }
            if (!progress) break;
        }
        return std::popcount(removed) == n_;
    }

    friend bool operator==(const Dag&, const Dag&) = default;
    friend auto operator<=>(const Dag&, const Dag&) = default;

private:
    void check_pair(int from, int to) const {
        if (from < 0 || from >= n_ || to < 0 || to >= n_) throw GraphError("edge endpoint out of range");
        if (from == to) throw GraphError("self-loop at node " + std::to_string(from + 1));
    }

    int n_ = 0;
    std::vector<NodeMask> parents_;
};

/// One node plus its parent set: the unit of score decomposition.
struct Family {
    int node = 0;
    NodeMask parents = 0;

    std::vector<int> parent_list() const { return detail::mask_to_indices(parents); }
    int num_parents() const { return std::popcount(parents); }

    friend bool operator==(const Family&, const Family&) = default;
    friend auto operator<=>(const Family&, const Family&) = default;
};

/// Dense index of a family among the n*2^(n-1) families of an n-node graph:
/// node * 2^(n-1) + (parent mask with the node's own bit squeezed out).
inline std::size_t family_index(const Family& f, int n) {
    NodeMask low = f.parents & (detail::bit(f.node) - 1);
    NodeMask high = f.parents >> (f.node + 1);
    NodeMask packed = low | (high << f.node);
    return (static_cast<std::size_t>(f.node) << (n - 1)) + static_cast<std::size_t>(packed);
}

inline std::vector<Family> enumerate_families(int n) {
    if (n < 1 || n > 30) throw GraphError("family enumeration requires 1 <= n <= 30");
    std::vector<Family> out;
    out.reserve(static_cast<std::size_t>(n) << (n - 1));
    for (int i = 0; i < n; ++i) {
        for (NodeMask packed = 0; packed < (NodeMask{1} << (n - 1)); ++packed) {
            NodeMask low = packed & (detail::bit(i) - 1);
            NodeMask high = (packed >> i) << (i + 1);
            out.push_back({i, low | high});
        }
    }
    return out;
}

inline std::vector<Family> dag_to_families(const Dag& dag) {
    std::vector<Family> out;
    out.reserve(static_cast<std::size_t>(dag.size()));
    for (int i = 0; i < dag.size(); ++i) out.push_back({i, dag.parents(i)});
    return out;
}

/// Kahn's algorithm, always releasing the smallest ready index first.
inline std::vector<int> topological_order(const Dag& dag) {
    const int n = dag.size();
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(n));
    NodeMask placed = 0;
    while (static_cast<int>(order.size()) < n) {
        int next = -1;
        for (int i = 0; i < n; ++i) {
            if (!(placed & detail::bit(i)) && (dag.parents(i) & ~placed) == 0) {
                next = i;
                break;
            }
        }
        if (next < 0) throw GraphError("topological order requested for a cyclic graph");
        placed |= detail::bit(next);
        order.push_back(next);
    }
    return order;
}

/// Every labeled DAG on n nodes, ascending by row-major bit-matrix key.
///
/// Generated layer by layer: layer 1 holds the sources, and every node of
/// layer k has all parents in layers < k with at least one in layer k-1.
/// That decomposition is unique, so each DAG is produced exactly once.
inline std::vector<std::uint64_t> enumerate_dag_keys(int n) {
    if (n < 1 || n > kMaxExhaustiveNodes)
        throw GraphError("exhaustive enumeration supports 1 <= n <= " + std::to_string(kMaxExhaustiveNodes) +
                         " variables (got " + std::to_string(n) + "); use greedy search for larger n");
    std::vector<std::uint64_t> keys;
    const NodeMask all = detail::bit(n) - 1;
    std::array<NodeMask, kMaxExhaustiveNodes> parents{};

    // Assign parents for nodes in `layer` one by one, then recurse to the next layer.
    std::function<void(NodeMask, NodeMask)> next_layer;
    std::function<void(NodeMask, NodeMask, NodeMask, std::vector<int>&, std::size_t)> assign;

    auto emit = [&] {
        std::uint64_t k = 0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (parents[i] >> j & 1U) k |= std::uint64_t{1} << (j * n + i);
        keys.push_back(k);
    };

    assign = [&](NodeMask placed, NodeMask last, NodeMask layer, std::vector<int>& members, std::size_t idx) {
        if (idx == members.size()) {
            next_layer(placed | layer, layer);
            return;
        }
        const NodeMask older = placed & ~last;
        // nonempty subset of `last`, any subset of `older`
        for (NodeMask a = last; a; a = (a - 1) & last) {
            for (NodeMask b = older;; b = (b - 1) & older) {
                parents[members[idx]] = a | b;
                assign(placed, last, layer, members, idx + 1);
                if (b == 0) break;
            }
        }
    };

    next_layer = [&](NodeMask placed, NodeMask last) {
        const NodeMask rest = all & ~placed;
        if (rest == 0) {
            emit();
            return;
        }
        for (NodeMask layer = rest; layer; layer = (layer - 1) & rest) {
            auto members = detail::mask_to_indices(layer);
            assign(placed, last, layer, members, 0);
        }
    };

    // First layer: any nonempty set of sources, all parentless.
    for (NodeMask sources = all; sources; sources = (sources - 1) & all) {
        for (int i = 0; i < n; ++i) parents[i] = 0;
        next_layer(sources, sources);
    }
    std::sort(keys.begin(), keys.end());
    return keys;
}

inline std::vector<Dag> enumerate_dags(int n) {
    auto keys = enumerate_dag_keys(n);
    std::vector<Dag> out;
    out.reserve(keys.size());
    for (auto k : keys) out.push_back(Dag::from_key(n, k));
    return out;
}

/// Process-wide cached enumeration; the 6-node list is built once.
inline const std::vector<Dag>& dag_catalog(int n) {
    static std::array<std::once_flag, kMaxExhaustiveNodes + 1> flags;
    static std::array<std::vector<Dag>, kMaxExhaustiveNodes + 1> lists;
    if (n < 1 || n > kMaxExhaustiveNodes) enumerate_dag_keys(n);  // throws the range error
    std::call_once(flags[static_cast<std::size_t>(n)], [n] { lists[static_cast<std::size_t>(n)] = enumerate_dags(n); });
    return lists[static_cast<std::size_t>(n)];
}

/// Completed partially directed graph of a Markov equivalence class.
class Cpdag {
public:
    Cpdag() = default;
    explicit Cpdag(int n) : n_(n), directed_(static_cast<std::size_t>(n), 0), undirected_(static_cast<std::size_t>(n), 0) {}

    int size() const { return n_; }
    bool has_directed(int from, int to) const { return (directed_[to] >> from) & 1U; }
    bool has_undirected(int a, int b) const { return (undirected_[a] >> b) & 1U; }
    bool adjacent(int a, int b) const { return has_directed(a, b) || has_directed(b, a) || has_undirected(a, b); }

    /// Directed parent mask of node i.
    NodeMask directed_parents(int i) const { return directed_[i]; }
    NodeMask undirected_neighbors(int i) const { return undirected_[i]; }

    void set_directed(int from, int to) {
        undirected_[from] &= ~detail::bit(to);
        undirected_[to] &= ~detail::bit(from);
        directed_[to] |= detail::bit(from);
    }
    void set_undirected(int a, int b) {
        undirected_[a] |= detail::bit(b);
        undirected_[b] |= detail::bit(a);
    }

    std::vector<std::pair<int, int>> directed_edges() const {
        std::vector<std::pair<int, int>> out;
        for (int j = 0; j < n_; ++j)
            for (int i = 0; i < n_; ++i)
                if (has_directed(j, i)) out.emplace_back(j, i);
        return out;
    }
    /// Undirected edges as (a, b) with a < b.
    std::vector<std::pair<int, int>> undirected_edges() const {
        std::vector<std::pair<int, int>> out;
        for (int a = 0; a < n_; ++a)
            for (int b = a + 1; b < n_; ++b)
                if (has_undirected(a, b)) out.emplace_back(a, b);
        return out;
    }

    friend bool operator==(const Cpdag&, const Cpdag&) = default;
    friend auto operator<=>(const Cpdag&, const Cpdag&) = default;

private:
    int n_ = 0;
    std::vector<NodeMask> directed_;    // parent masks of directed edges
    std::vector<NodeMask> undirected_;  // symmetric neighbor masks
};

namespace detail {

// One pass of Meek's rules R1-R4 over all undirected edges; returns true if anything was oriented.
inline bool meek_pass(Cpdag& g) {
    const int n = g.size();
    bool changed = false;
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            if (a == b || !g.has_undirected(a, b)) continue;
            bool orient = false;
            for (int c = 0; c < n && !orient; ++c) {
                if (c == a || c == b) continue;
                // R1: c -> a, a - b, c and b nonadjacent
                if (g.has_directed(c, a) && !g.adjacent(c, b)) orient = true;
                // R2: a -> c -> b with a - b
                else if (g.has_directed(a, c) && g.has_directed(c, b)) orient = true;
            }
            // R3: a - c -> b, a - d -> b, c and d nonadjacent
            for (int c = 0; c < n && !orient; ++c) {
                if (c == a || c == b || !g.has_undirected(a, c) || !g.has_directed(c, b)) continue;
                for (int d = c + 1; d < n && !orient; ++d) {
                    if (d == a || d == b) continue;
                    if (g.has_undirected(a, d) && g.has_directed(d, b) && !g.adjacent(c, d)) orient = true;
                }
            }
            // R4: a - c -> d -> b, a adjacent d, c and b nonadjacent
            for (int c = 0; c < n && !orient; ++c) {
                if (c == a || c == b || !g.has_undirected(a, c) || g.adjacent(c, b)) continue;
                for (int d = 0; d < n && !orient; ++d) {
                    if (d == a || d == b || d == c) continue;
                    if (g.has_directed(c, d) && g.has_directed(d, b) && g.adjacent(a, d)) orient = true;
                }
            }
            if (orient) {
                g.set_directed(a, b);
                changed = true;
            }
        }
    }
    return changed;
}

}  // namespace detail

/// Skeleton plus v-structures, closed under Meek's orientation rules.
inline Cpdag to_cpdag(const Dag& dag) {
    const int n = dag.size();
    Cpdag g(n);
    for (int i = 0; i < n; ++i)
        for (int j : detail::mask_to_indices(dag.parents(i))) g.set_undirected(j, i);
    for (int c = 0; c < n; ++c) {
        auto pa = detail::mask_to_indices(dag.parents(c));
        for (std::size_t x = 0; x < pa.size(); ++x)
            for (std::size_t y = x + 1; y < pa.size(); ++y)
                if (!dag.adjacent(pa[x], pa[y])) {
                    g.set_directed(pa[x], c);
                    g.set_directed(pa[y], c);
                }
    }
    while (detail::meek_pass(g)) {
    }
    return g;
}

// ---------------------------------------------------------------------------
// Text form: "n;j->i;..." with 1-based indices; CPDAGs add "a--b".

inline std::string to_text(const Dag& dag) {
    std::string s = std::to_string(dag.size());
    for (auto [j, i] : dag.edges()) s += ";" + std::to_string(j + 1) + "->" + std::to_string(i + 1);
    return s;
}

inline std::string to_text(const Cpdag& g) {
    std::string s = std::to_string(g.size());
    for (auto [j, i] : g.directed_edges()) s += ";" + std::to_string(j + 1) + "->" + std::to_string(i + 1);
    for (auto [a, b] : g.undirected_edges()) s += ";" + std::to_string(a + 1) + "--" + std::to_string(b + 1);
    return s;
}

namespace detail {

inline int parse_count(std::string_view head) {
    int n = 0;
    while (!head.empty() && head.front() == ' ') head.remove_prefix(1);
    while (!head.empty() && head.back() == ' ') head.remove_suffix(1);
    auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), n);
    if (ec != std::errc{} || ptr != head.data() + head.size() || head.empty())
        throw GraphError("graph text must start with the variable count");
    check_node_count(n);
    return n;
}

}  // namespace detail

inline Dag parse_dag(std::string_view text) {
    auto parts = detail::split(text, ';');
    const int n = detail::parse_count(parts.front());
    Dag dag(n);
    for (std::size_t k = 1; k < parts.size(); ++k) {
        auto edge = parts[k];
        if (edge.find_first_not_of(' ') == std::string_view::npos) continue;
        auto arrow = edge.find("->");
        if (arrow == std::string_view::npos) throw GraphError("expected 'j->i' in DAG text, got '" + std::string(edge) + "'");
        dag.add_edge(detail::parse_index(edge.substr(0, arrow), n), detail::parse_index(edge.substr(arrow + 2), n));
    }
    return dag;
}

inline Cpdag parse_cpdag(std::string_view text) {
    auto parts = detail::split(text, ';');
    const int n = detail::parse_count(parts.front());
    Cpdag g(n);
    for (std::size_t k = 1; k < parts.size(); ++k) {
        auto edge = parts[k];
        if (auto p = edge.find("->"); p != std::string_view::npos) {
            g.set_directed(detail::parse_index(edge.substr(0, p), n), detail::parse_index(edge.substr(p + 2), n));
        } else if (auto q = edge.find("--"); q != std::string_view::npos) {
            g.set_undirected(detail::parse_index(edge.substr(0, q), n), detail::parse_index(edge.substr(q + 2), n));
        } else {
            throw GraphError("bad CPDAG edge '" + std::string(edge) + "'");
        }
    }
    return g;
}

}  // namespace bayeslingam

template <>
struct std::hash<bayeslingam::Family> {
    std::size_t operator()(const bayeslingam::Family& f) const noexcept {
        return bayeslingam::seeding::splitmix64(f.parents * 131 + static_cast<std::uint64_t>(f.node));
    }
};

template <>
struct std::hash<bayeslingam::Dag> {
    std::size_t operator()(const bayeslingam::Dag& d) const noexcept {
        std::uint64_t h = static_cast<std::uint64_t>(d.size());
        for (auto m : d.parent_masks()) h = bayeslingam::seeding::splitmix64(h ^ m);
        return h;
    }
};

template <>
struct std::hash<bayeslingam::Cpdag> {
    std::size_t operator()(const bayeslingam::Cpdag& g) const noexcept {
        std::uint64_t h = static_cast<std::uint64_t>(g.size());
        for (int i = 0; i < g.size(); ++i) {
            h = bayeslingam::seeding::splitmix64(h ^ g.directed_parents(i));
            h = bayeslingam::seeding::splitmix64(h ^ g.undirected_neighbors(i));
        }
        return h;
    }
};

#endif  // BAYESLINGAM_GRAPH_HPP
