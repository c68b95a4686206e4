#pragma once

// Typed causal-diagram data model: observed/unobserved variables, domain
// indicators, selection indicators, and the structural invariants that make
// a node/edge set a usable diagram (acyclic, selection nodes are sinks,
// domain indicators are roots).

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace shiftlens {

enum class NodeKind { Observed, Unobserved, DomainIndicator, Selection };
enum class NodeRole { None, Image, Target, Anatomy };

inline const char* to_string(NodeKind k) {
    switch (k) {
        case NodeKind::Observed: return "observed";
        case NodeKind::Unobserved: return "unobserved";
        case NodeKind::DomainIndicator: return "domain";
        case NodeKind::Selection: return "selection";
    }
    return "?";
}

inline const char* to_string(NodeRole r) {
    switch (r) {
        case NodeRole::None: return "none";
        case NodeRole::Image: return "image";
        case NodeRole::Target: return "target";
        case NodeRole::Anatomy: return "anatomy";
    }
    return "?";
}

// Error with a stable machine-readable code, thrown on contract violations
// (unknown node ids, overlapping query sets, and similar).
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

struct Node {
    std::string id;
    NodeKind kind = NodeKind::Observed;
    NodeRole role = NodeRole::None;
    std::string label;  // display only, never part of semantics

    friend bool operator==(const Node& a, const Node& b) {
        return a.id == b.id && a.kind == b.kind && a.role == b.role;
    }
};

struct Edge {
    std::string from;
    std::string to;

    friend bool operator==(const Edge& a, const Edge& b) {
        return a.from == b.from && a.to == b.to;
    }
    friend bool operator<(const Edge& a, const Edge& b) {
        return a.from != b.from ? a.from < b.from : a.to < b.to;
    }
};

enum class ValidationCode {
    Cycle,
    DupId,
    DanglingEdge,
    SelfEdge,
    DupEdge,
    SelectionOutEdge,
    DomainInEdge,
    DupRole,
    RoleKind,
    BadId,
};

inline const char* to_string(ValidationCode c) {
    switch (c) {
        case ValidationCode::Cycle: return "CYCLE";
        case ValidationCode::DupId: return "DUP_ID";
        case ValidationCode::DanglingEdge: return "DANGLING_EDGE";
        case ValidationCode::SelfEdge: return "SELF_EDGE";
        case ValidationCode::DupEdge: return "DUP_EDGE";
        case ValidationCode::SelectionOutEdge: return "SELECTION_OUT_EDGE";
        case ValidationCode::DomainInEdge: return "DOMAIN_IN_EDGE";
        case ValidationCode::DupRole: return "DUP_ROLE";
        case ValidationCode::RoleKind: return "ROLE_KIND";
        case ValidationCode::BadId: return "BAD_ID";
    }
    return "?";
}

struct Diagnostic {
    ValidationCode code;
    std::string message;
    std::string element;  // offending node id or "from->to" edge
};

struct ValidationReport {
    std::vector<Diagnostic> errors;
    std::vector<Diagnostic> warnings;
    bool ok() const { return errors.empty(); }
};

enum class ValidationMode { Strict, Lenient };

enum class Relation { Parents, Children, Ancestors, Descendants };

// Immutable validated DAG. Construct through build_diagram(); all accessors
// are const and the object is safe to share across threads.
class CausalDiagram {
public:
    CausalDiagram() = default;

    const std::string& name() const { return name_; }
    const std::vector<Node>& nodes() const { return nodes_; }  // sorted by id
    const std::vector<Edge>& edges() const { return edges_; }  // sorted by (from, to)

    bool has_node(const std::string& id) const { return index_.count(id) != 0; }

    const Node& node(const std::string& id) const { return nodes_[index_of(id)]; }

    std::size_t index_of(const std::string& id) const {
        auto it = index_.find(id);
        if (it == index_.end()) throw Error("UNKNOWN_NODE", "unknown node id: " + id);
        return it->second;
    }

    const std::vector<std::size_t>& parent_indices(std::size_t i) const { return parents_[i]; }
    const std::vector<std::size_t>& child_indices(std::size_t i) const { return children_[i]; }

    std::set<std::string> relatives(const std::string& id, Relation rel) const {
        std::size_t i = index_of(id);
        std::set<std::string> out;
        switch (rel) {
            case Relation::Parents:
                for (std::size_t p : parents_[i]) out.insert(nodes_[p].id);
                break;
            case Relation::Children:
                for (std::size_t c : children_[i]) out.insert(nodes_[c].id);
                break;
            case Relation::Ancestors:
                for (std::size_t a : closure(i, parents_)) out.insert(nodes_[a].id);
                break;
            case Relation::Descendants:
                for (std::size_t d : closure(i, children_)) out.insert(nodes_[d].id);
                break;
        }
        return out;
    }

    // Transitive closure as indices, excluding the start node.
    std::vector<std::size_t> ancestor_indices(std::size_t i) const { return closure(i, parents_); }
    std::vector<std::size_t> descendant_indices(std::size_t i) const { return closure(i, children_); }

    // Node carrying the given role, if any. Role uniqueness is validated.
    std::optional<std::string> role_node(NodeRole role) const {
        for (const Node& n : nodes_)
            if (n.role == role) return n.id;
        return std::nullopt;
    }

    std::vector<std::string> nodes_of_kind(NodeKind kind) const {
        std::vector<std::string> out;
        for (const Node& n : nodes_)
            if (n.kind == kind) out.push_back(n.id);
        return out;
    }

    // Deterministic topological order; ties broken by node id.
    std::vector<std::string> topological_order() const {
        std::vector<std::size_t> indegree(nodes_.size());
        for (std::size_t i = 0; i < nodes_.size(); ++i) indegree[i] = parents_[i].size();
        std::set<std::size_t> ready;  // node indices are id-sorted, so set order is id order
        for (std::size_t i = 0; i < nodes_.size(); ++i)
            if (indegree[i] == 0) ready.insert(i);
        std::vector<std::string> order;
        order.reserve(nodes_.size());
        while (!ready.empty()) {
            std::size_t i = *ready.begin();
            ready.erase(ready.begin());
            order.push_back(nodes_[i].id);
            for (std::size_t c : children_[i])
                if (--indegree[c] == 0) ready.insert(c);
        }
        return order;  // length < node count would mean a cycle; validation forbids it
    }

    friend bool operator==(const CausalDiagram& a, const CausalDiagram& b) {
        return a.name_ == b.name_ && a.nodes_ == b.nodes_ && a.edges_ == b.edges_;
    }
    friend bool operator!=(const CausalDiagram& a, const CausalDiagram& b) { return !(a == b); }

private:
    friend struct DiagramBuilder;

    std::vector<std::size_t> closure(std::size_t start,
                                     const std::vector<std::vector<std::size_t>>& step) const {
        std::vector<bool> seen(nodes_.size(), false);
        std::vector<std::size_t> stack{start}, out;
        while (!stack.empty()) {
            std::size_t n = stack.back();
            stack.pop_back();
            for (std::size_t m : step[n]) {
                if (!seen[m]) {
                    seen[m] = true;
                    stack.push_back(m);
                    out.push_back(m);
                }
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    std::string name_;
    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    std::map<std::string, std::size_t> index_;
    std::vector<std::vector<std::size_t>> parents_;
    std::vector<std::vector<std::size_t>> children_;
};

struct BuildResult {
    std::optional<CausalDiagram> diagram;
    ValidationReport report;
    bool ok() const { return diagram.has_value(); }
};

namespace detail {

inline bool valid_identifier(const std::string& id) {
    if (id.empty()) return false;
    auto head = [](char c) { return c == '_' || (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'); };
    auto tail = [&](char c) { return head(c) || (c >= '0' && c <= '9'); };
    if (!head(id[0])) return false;
    return std::all_of(id.begin() + 1, id.end(), tail);
}

}  // namespace detail

struct DiagramBuilder {
    static BuildResult build(const std::string& name, std::vector<Node> nodes,
                             std::vector<Edge> edges, ValidationMode mode) {
        ValidationReport report;
        auto error = [&](ValidationCode code, const std::string& msg, const std::string& el) {
            report.errors.push_back({code, msg, el});
        };
        auto warn = [&](ValidationCode code, const std::string& msg, const std::string& el) {
            report.warnings.push_back({code, msg, el});
        };

        std::sort(nodes.begin(), nodes.end(),
                  [](const Node& a, const Node& b) { return a.id < b.id; });
        for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
            if (nodes[i].id == nodes[i + 1].id)
                error(ValidationCode::DupId, "duplicate node id `" + nodes[i].id + "`",
                      nodes[i].id);
        for (const Node& n : nodes) {
            if (!detail::valid_identifier(n.id))
                error(ValidationCode::BadId, "node id `" + n.id + "` is not a valid identifier",
                      n.id);
            if (n.role != NodeRole::None && n.kind != NodeKind::Observed &&
                n.kind != NodeKind::Unobserved)
                error(ValidationCode::RoleKind,
                      "node `" + n.id + "` of kind " + to_string(n.kind) +
                          " cannot carry role " + to_string(n.role),
                      n.id);
        }
        for (NodeRole role : {NodeRole::Image, NodeRole::Target, NodeRole::Anatomy}) {
            std::vector<std::string> holders;
            for (const Node& n : nodes)
                if (n.role == role) holders.push_back(n.id);
            if (holders.size() > 1)
                error(ValidationCode::DupRole,
                      "role " + std::string(to_string(role)) + " is assigned to " +
                          std::to_string(holders.size()) + " nodes",
                      holders[1]);
        }

        std::map<std::string, std::size_t> index;
        for (std::size_t i = 0; i < nodes.size(); ++i) index.emplace(nodes[i].id, i);

        std::sort(edges.begin(), edges.end());
        for (std::size_t i = 0; i + 1 < edges.size(); ++i)
            if (edges[i] == edges[i + 1])
                error(ValidationCode::DupEdge,
                      "duplicate edge " + edges[i].from + " -> " + edges[i].to,
                      edges[i].from + "->" + edges[i].to);
        for (const Edge& e : edges) {
            const std::string el = e.from + "->" + e.to;
            if (e.from == e.to) error(ValidationCode::SelfEdge, "self edge on `" + e.from + "`", el);
            bool dangling = false;
            for (const std::string* endpoint : {&e.from, &e.to}) {
                if (!index.count(*endpoint)) {
                    error(ValidationCode::DanglingEdge,
                          "edge endpoint `" + *endpoint + "` is not a declared node", el);
                    dangling = true;
                }
            }
            if (dangling) continue;
            if (nodes[index[e.from]].kind == NodeKind::Selection)
                error(ValidationCode::SelectionOutEdge,
                      "selection node `" + e.from + "` has an outgoing edge", el);
            if (nodes[index[e.to]].kind == NodeKind::DomainIndicator) {
                const std::string msg =
                    "domain indicator `" + e.to + "` has an incoming edge";
                if (mode == ValidationMode::Strict)
                    error(ValidationCode::DomainInEdge, msg, el);
                else
                    warn(ValidationCode::DomainInEdge, msg, el);
            }
        }

        // Cycle detection only makes sense once ids and endpoints are sound.
        if (report.errors.empty() && has_cycle(nodes, edges, index))
            error(ValidationCode::Cycle, "edge set contains a directed cycle", "");

        BuildResult result;
        result.report = std::move(report);
        if (!result.report.errors.empty()) return result;

        CausalDiagram d;
        d.name_ = name;
        d.nodes_ = std::move(nodes);
        d.edges_ = std::move(edges);
        d.index_ = std::move(index);
        d.parents_.assign(d.nodes_.size(), {});
        d.children_.assign(d.nodes_.size(), {});
        for (const Edge& e : d.edges_) {
            std::size_t f = d.index_[e.from], t = d.index_[e.to];
            d.children_[f].push_back(t);
            d.parents_[t].push_back(f);
        }
        result.diagram = std::move(d);
        return result;
    }

private:
    static bool has_cycle(const std::vector<Node>& nodes, const std::vector<Edge>& edges,
                          const std::map<std::string, std::size_t>& index) {
        std::vector<std::vector<std::size_t>> children(nodes.size());
        std::vector<std::size_t> indegree(nodes.size(), 0);
        for (const Edge& e : edges) {
            children[index.at(e.from)].push_back(index.at(e.to));
            ++indegree[index.at(e.to)];
        }
        std::vector<std::size_t> stack;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (indegree[i] == 0) stack.push_back(i);
        std::size_t visited = 0;
        while (!stack.empty()) {
            std::size_t n = stack.back();
            stack.pop_back();
            ++visited;
            for (std::size_t c : children[n])
                if (--indegree[c] == 0) stack.push_back(c);
        }
        return visited != nodes.size();
    }
};

inline BuildResult build_diagram(const std::string& name, std::vector<Node> nodes,
                                 std::vector<Edge> edges,
                                 ValidationMode mode = ValidationMode::Strict) {
    return DiagramBuilder::build(name, std::move(nodes), std::move(edges), mode);
}

inline std::set<std::string> relatives(const CausalDiagram& d, const std::string& id,
                                       Relation rel) {
    return d.relatives(id, rel);
}

}  // namespace shiftlens
