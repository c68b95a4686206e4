#pragma once

// Path semantics and d-separation. The boolean query runs the linear-time
// ball-passing reachability scheme; witness paths are enumerated separately
// because the number of open paths can grow exponentially while the boolean
// answer cannot.
//
// Blocking rules on a path between a and b given conditioning set C:
//   - a non-collider blocks the path iff it is in C;
//   - a collider blocks the path unless it or one of its descendants is in C.

#include <algorithm>
#include <deque>
#include <set>
#include <string>
#include <vector>

#include "shiftlens/diagram.hpp"

namespace shiftlens {

// A trail between two nodes. arrows_forward[i] is true when the edge between
// nodes[i] and nodes[i+1] points forward (nodes[i] -> nodes[i+1]).
struct Path {
    std::vector<std::string> nodes;
    std::vector<bool> arrows_forward;

    std::string to_string() const {
        std::string out = nodes.empty() ? "" : nodes[0];
        for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
            out += arrows_forward[i] ? " -> " : " <- ";
            out += nodes[i + 1];
        }
        return out;
    }
};

struct PathList {
    std::vector<Path> paths;
    bool truncated = false;
};

struct SeparationResult {
    bool separated = true;
    std::vector<Path> witnesses;  // open paths; empty iff separated
    bool witnesses_truncated = false;
};

struct Independence {
    std::string a;
    std::string b;
    std::vector<std::string> given;  // sorted
};

inline constexpr int kDefaultWitnessCap = 16;

namespace dsep_detail {

inline std::vector<std::size_t> to_indices(const CausalDiagram& d,
                                           const std::set<std::string>& ids) {
    std::vector<std::size_t> out;
    out.reserve(ids.size());
    for (const std::string& id : ids) out.push_back(d.index_of(id));
    return out;
}

// C together with all ancestors of C.
inline std::vector<bool> ancestral_set(const CausalDiagram& d,
                                       const std::vector<std::size_t>& c) {
    std::vector<bool> in(d.nodes().size(), false);
    std::vector<std::size_t> stack(c.begin(), c.end());
    for (std::size_t i : c) in[i] = true;
    while (!stack.empty()) {
        std::size_t n = stack.back();
        stack.pop_back();
        for (std::size_t p : d.parent_indices(n))
            if (!in[p]) {
                in[p] = true;
                stack.push_back(p);
            }
    }
    return in;
}

// Ball-passing reachability: returns the set of nodes connected to `sources`
// by at least one active trail given conditioning set `cond`.
inline std::vector<bool> reachable(const CausalDiagram& d,
                                   const std::vector<std::size_t>& sources,
                                   const std::vector<std::size_t>& cond) {
    const std::size_t n = d.nodes().size();
    std::vector<bool> in_c(n, false);
    for (std::size_t i : cond) in_c[i] = true;
    const std::vector<bool> anc_c = ancestral_set(d, cond);

    // Visit states: (node, entered-from-child) and (node, entered-from-parent).
    std::vector<bool> visited_up(n, false), visited_down(n, false), out(n, false);
    std::deque<std::pair<std::size_t, bool>> queue;  // bool: true = travelling up
    for (std::size_t s : sources) queue.emplace_back(s, true);

    while (!queue.empty()) {
        auto [y, up] = queue.front();
        queue.pop_front();
        auto& visited = up ? visited_up : visited_down;
        if (visited[y]) continue;
        visited[y] = true;
        if (!in_c[y]) out[y] = true;

        if (up) {
            if (!in_c[y]) {
                for (std::size_t p : d.parent_indices(y)) queue.emplace_back(p, true);
                for (std::size_t c : d.child_indices(y)) queue.emplace_back(c, false);
            }
        } else {
            if (!in_c[y])
                for (std::size_t c : d.child_indices(y)) queue.emplace_back(c, false);
            if (anc_c[y])  // collider (or ancestor of conditioned node): pass back up
                for (std::size_t p : d.parent_indices(y)) queue.emplace_back(p, true);
        }
    }
    return out;
}

inline void check_sets(const CausalDiagram& d, const std::set<std::string>& a,
                       const std::set<std::string>& b, const std::set<std::string>& c) {
    if (a.empty() || b.empty())
        throw Error("EMPTY_SET", "d-separation query requires non-empty node sets");
    for (const auto* s : {&a, &b, &c})
        for (const std::string& id : *s) d.index_of(id);  // throws UNKNOWN_NODE
    auto overlaps = [](const std::set<std::string>& x, const std::set<std::string>& y) {
        for (const std::string& id : x)
            if (y.count(id)) return true;
        return false;
    };
    if (overlaps(a, b) || overlaps(a, c) || overlaps(b, c))
        throw Error("OVERLAPPING_SETS", "d-separation query sets must be pairwise disjoint");
}

// Enumerates open simple paths between a and b in lexicographic order of the
// node-id sequence, pruning as soon as an intermediate node is blocked.
class OpenPathSearch {
public:
    OpenPathSearch(const CausalDiagram& d, std::size_t target, const std::vector<bool>& in_c,
                   const std::vector<bool>& desc_reaches_c, int cap)
        : d_(d), target_(target), in_c_(in_c), desc_reaches_c_(desc_reaches_c), cap_(cap) {}

    void run(std::size_t start, PathList& out) {
        on_path_.assign(d_.nodes().size(), false);
        nodes_.clear();
        forward_.clear();
        nodes_.push_back(start);
        on_path_[start] = true;
        extend(out);
    }

private:
    // Sorted neighbour expansion keeps the output lexicographic.
    std::vector<std::pair<std::size_t, bool>> neighbours(std::size_t n) const {
        std::vector<std::pair<std::size_t, bool>> out;  // (node, edge-forward)
        for (std::size_t c : d_.child_indices(n)) out.emplace_back(c, true);
        for (std::size_t p : d_.parent_indices(n)) out.emplace_back(p, false);
        std::sort(out.begin(), out.end());  // node indices are id-sorted
        return out;
    }

    bool blocked_intermediate(bool arrow_in_forward, bool arrow_out_forward,
                              std::size_t node) const {
        const bool collider = arrow_in_forward && !arrow_out_forward;
        if (collider) return !in_c_[node] && !desc_reaches_c_[node];
        return in_c_[node];
    }

    void extend(PathList& out) {
        if (out.truncated) return;
        const std::size_t tip = nodes_.back();
        if (tip == target_ && nodes_.size() >= 2) {
            if (static_cast<int>(out.paths.size()) == cap_) {
                out.truncated = true;
                return;
            }
            Path p;
            for (std::size_t i : nodes_) p.nodes.push_back(d_.nodes()[i].id);
            p.arrows_forward = forward_;
            out.paths.push_back(std::move(p));
            return;  // simple paths end at the first arrival
        }
        for (auto [next, fwd] : neighbours(tip)) {
            if (on_path_[next]) continue;
            // With the next hop fixed, the tip's blocking status is decided.
            if (nodes_.size() >= 2 &&
                blocked_intermediate(forward_.back(), fwd, tip))
                continue;
            nodes_.push_back(next);
            forward_.push_back(fwd);
            on_path_[next] = true;
            extend(out);
            on_path_[next] = false;
            nodes_.pop_back();
            forward_.pop_back();
            if (out.truncated) return;
        }
    }

    const CausalDiagram& d_;
    std::size_t target_;
    const std::vector<bool>& in_c_;
    const std::vector<bool>& desc_reaches_c_;
    int cap_;
    std::vector<bool> on_path_;
    std::vector<std::size_t> nodes_;
    std::vector<bool> forward_;
};

// desc_reaches_c[n] = some descendant of n (or n itself) is in C.
inline std::vector<bool> descendant_reaches(const CausalDiagram& d,
                                            const std::vector<std::size_t>& cond) {
    // Equivalent to membership in the ancestral set of C.
    return ancestral_set(d, cond);
}

}  // namespace dsep_detail

// All open paths between a and b given C, capped and lexicographically
// ordered by node-id sequence.
inline PathList open_paths(const CausalDiagram& d, const std::string& a, const std::string& b,
                           const std::set<std::string>& c, int cap = kDefaultWitnessCap) {
    using namespace dsep_detail;
    const std::size_t ia = d.index_of(a), ib = d.index_of(b);
    if (a == b) throw Error("OVERLAPPING_SETS", "open_paths endpoints must differ");
    if (c.count(a) || c.count(b))
        throw Error("OVERLAPPING_SETS", "open_paths endpoints must not be conditioned on");
    const std::vector<std::size_t> ic = to_indices(d, c);
    std::vector<bool> in_c(d.nodes().size(), false);
    for (std::size_t i : ic) in_c[i] = true;
    const std::vector<bool> reaches = descendant_reaches(d, ic);

    PathList out;
    OpenPathSearch(d, ib, in_c, reaches, cap).run(ia, out);
    return out;
}

inline SeparationResult d_separated(const CausalDiagram& d, const std::set<std::string>& a,
                                    const std::set<std::string>& b,
                                    const std::set<std::string>& c,
                                    int witness_cap = kDefaultWitnessCap) {
    using namespace dsep_detail;
    check_sets(d, a, b, c);
    const std::vector<std::size_t> ia = to_indices(d, a);
    const std::vector<std::size_t> ic = to_indices(d, c);
    const std::vector<bool> reach = reachable(d, ia, ic);

    SeparationResult result;
    result.separated = true;
    for (const std::string& id : b)
        if (reach[d.index_of(id)]) result.separated = false;
    if (result.separated) return result;

    // Witness paths, pair by pair in id order until the cap fills.
    for (const std::string& x : a) {
        for (const std::string& y : b) {
            const int remaining = witness_cap - static_cast<int>(result.witnesses.size());
            if (remaining <= 0) {
                result.witnesses_truncated = true;
                return result;
            }
            PathList pl = open_paths(d, x, y, c, remaining);
            for (Path& p : pl.paths) result.witnesses.push_back(std::move(p));
            if (pl.truncated) {
                result.witnesses_truncated = true;
                return result;
            }
        }
    }
    return result;
}

// Every d-separation statement (a _||_ b | C) with singleton endpoints and C
// ranging over subsets of observed nodes up to the requested size. Ordered by
// (a, b), then by |C|, then lexicographically over C.
inline std::vector<Independence> implied_independencies(const CausalDiagram& d,
                                                        int max_conditioning) {
    if (max_conditioning < 0)
        throw Error("BAD_ARGUMENT", "max_conditioning must be non-negative");
    std::vector<std::string> observed;
    for (const Node& n : d.nodes())
        if (n.kind == NodeKind::Observed) observed.push_back(n.id);

    std::vector<Independence> out;
    const auto& nodes = d.nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        for (std::size_t j = i + 1; j < nodes.size(); ++j) {
            const std::string& a = nodes[i].id;
            const std::string& b = nodes[j].id;
            std::vector<std::string> pool;
            for (const std::string& o : observed)
                if (o != a && o != b) pool.push_back(o);
            const int max_size = std::min<int>(max_conditioning, static_cast<int>(pool.size()));
            for (int size = 0; size <= max_size; ++size) {
                // Lexicographic combinations of `size` ids out of the sorted pool.
                std::vector<int> pick(size);
                for (int k = 0; k < size; ++k) pick[k] = k;
                while (true) {
                    std::set<std::string> c;
                    for (int k : pick) c.insert(pool[k]);
                    if (d_separated(d, {a}, {b}, c, 0).separated) {
                        out.push_back({a, b, std::vector<std::string>(c.begin(), c.end())});
                    }
                    if (size == 0) break;
                    int k = size - 1;
                    while (k >= 0 && pick[k] == static_cast<int>(pool.size()) - size + k) --k;
                    if (k < 0) break;
                    ++pick[k];
                    for (int m = k + 1; m < size; ++m) pick[m] = pick[m - 1] + 1;
                }
            }
        }
    }
    return out;
}

}  // namespace shiftlens
