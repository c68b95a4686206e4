#pragma once

// Discrete Bayesian-network semantics for causal diagrams: named categorical
// state spaces, conditional probability tables, exact inference by full
// enumeration, seeded ancestral sampling with rejection, and conditional
// mutual information. The joint state space is capped at 2^20 assignments so
// every query stays exact.
//
// CPT spec file grammar (.cpt, UTF-8, LF):
//
//   model for "diagram-name"
//   var <IDENT> states <name> ("," <name>)+
//   cpt <IDENT> (given <IDENT> ("," <IDENT>)*)?
//     row (<parent-state> ("," <parent-state>)*)? : <p> (<p>)*
//
// Probabilities are decimal literals; each row lists the child states in the
// order of the `var` declaration; rows must cover every combination of
// parent states exactly once. Domain indicators must declare the states
// train, test and selection nodes the states out, in.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "shiftlens/diagram.hpp"

namespace shiftlens {

struct VariableSpec {
    std::string id;
    std::vector<std::string> states;  // at least 2, unique
};

struct Cpt {
    std::string node;
    std::vector<std::string> parents;       // declared order
    std::vector<std::vector<double>> rows;  // mixed-radix over parent states,
                                            // first declared parent most significant
};

struct ModelDiag {
    std::string code;
    std::string message;
};

inline constexpr std::size_t kMaxJointStates = std::size_t(1) << 20;
inline constexpr double kRowSumTolerance = 1e-12;

// Exact joint or conditional distribution over a set of variables. States
// enumerate in mixed-radix order with the first variable most significant.
struct Distribution {
    std::vector<std::string> variables;            // sorted by id
    std::vector<std::vector<std::string>> states;  // per variable
    std::vector<double> probs;

    std::size_t size() const { return probs.size(); }

    double prob(const std::vector<std::string>& assignment) const {
        if (assignment.size() != variables.size())
            throw Error("BAD_ARGUMENT", "assignment arity mismatch");
        std::size_t idx = 0;
        for (std::size_t i = 0; i < variables.size(); ++i) {
            auto it = std::find(states[i].begin(), states[i].end(), assignment[i]);
            if (it == states[i].end())
                throw Error("UNKNOWN_STATE", "variable `" + variables[i] +
                                                 "` has no state `" + assignment[i] + "`");
            idx = idx * states[i].size() + static_cast<std::size_t>(it - states[i].begin());
        }
        return probs[idx];
    }
};

// Half the L1 distance; both inputs must already be distributions.
inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw Error("BAD_ARGUMENT", "total_variation arity mismatch");
    double acc = 0;
    for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
    return acc / 2;
}

class BNModel {
public:
    const CausalDiagram& diagram() const { return diagram_; }
    const std::vector<VariableSpec>& variables() const { return vars_; }
    const std::vector<Cpt>& cpts() const { return cpts_; }

    std::size_t card(std::size_t node_index) const { return vars_[node_index].states.size(); }
    std::size_t joint_size() const { return joint_size_; }

    const VariableSpec& variable(const std::string& id) const {
        return vars_[diagram_.index_of(id)];
    }

    std::size_t state_index(const std::string& id, const std::string& state) const {
        const VariableSpec& v = variable(id);
        auto it = std::find(v.states.begin(), v.states.end(), state);
        if (it == v.states.end())
            throw Error("UNKNOWN_STATE", "variable `" + id + "` has no state `" + state + "`");
        return static_cast<std::size_t>(it - v.states.begin());
    }

    // Probability of node taking `state` given a full assignment of its parents.
    double cpt_entry(std::size_t node, const std::vector<std::size_t>& assignment,
                     std::size_t state) const {
        const std::vector<double>& row = cpt_row(node, assignment);
        return row[state];
    }

    const std::vector<double>& cpt_row(std::size_t node,
                                       const std::vector<std::size_t>& assignment) const {
        std::size_t idx = 0;
        for (std::size_t p : cpt_parent_nodes_[node]) idx = idx * card(p) + assignment[p];
        return cpts_[node].rows[idx];
    }

    double joint_probability(const std::vector<std::size_t>& assignment) const {
        double p = 1;
        for (std::size_t i = 0; i < vars_.size() && p > 0; ++i)
            p *= cpt_row(i, assignment)[assignment[i]];
        return p;
    }

    // Visits every complete assignment with its joint probability.
    template <class Visitor>
    void for_each_assignment(Visitor&& visit) const {
        std::vector<std::size_t> a(vars_.size(), 0);
        while (true) {
            visit(static_cast<const std::vector<std::size_t>&>(a), joint_probability(a));
            std::size_t i = vars_.size();
            while (i > 0) {
                --i;
                if (++a[i] < card(i)) break;
                a[i] = 0;
                if (i == 0) return;
            }
            if (vars_.empty()) return;
        }
    }

    // Node indices in sampling order (deterministic topological order).
    const std::vector<std::size_t>& topological_indices() const { return topo_; }
    const std::vector<std::size_t>& cpt_parent_nodes(std::size_t node) const {
        return cpt_parent_nodes_[node];
    }

private:
    friend struct ModelBuilder;
    CausalDiagram diagram_;
    std::vector<VariableSpec> vars_;  // aligned with diagram_.nodes()
    std::vector<Cpt> cpts_;           // aligned with diagram_.nodes()
    std::vector<std::vector<std::size_t>> cpt_parent_nodes_;  // declared order, as node indices
    std::vector<std::size_t> topo_;
    std::size_t joint_size_ = 1;
};

struct AttachResult {
    std::optional<BNModel> model;
    std::vector<ModelDiag> errors;
    bool ok() const { return model.has_value(); }
};

namespace bn_detail {

struct RawCpt {
    std::string node;
    std::vector<std::string> parents;
    std::vector<std::pair<std::vector<std::string>, std::vector<double>>> rows;
};

struct RawSpec {
    std::string model_name;
    std::vector<VariableSpec> vars;
    std::vector<RawCpt> cpts;
};

enum class TokKind { Ident, Number, String, Colon, Comma, End };

struct Token {
    TokKind kind;
    std::string text;
    double value = 0;
    int line = 1;
};

inline bool lex(const std::string& text, std::vector<Token>& out, std::string& error) {
    std::size_t pos = 0;
    int line = 1;
    auto is_head = [](char c) {
        return c == '_' || (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z');
    };
    auto is_tail = [&](char c) { return is_head(c) || (c >= '0' && c <= '9'); };
    while (pos < text.size()) {
        const char c = text[pos];
        if (c == '\n') { ++line; ++pos; continue; }
        if (c == ' ' || c == '\t' || c == '\r') { ++pos; continue; }
        if (c == '#') {
            while (pos < text.size() && text[pos] != '\n') ++pos;
            continue;
        }
        if (c == ':') { out.push_back({TokKind::Colon, ":", 0, line}); ++pos; continue; }
        if (c == ',') { out.push_back({TokKind::Comma, ",", 0, line}); ++pos; continue; }
        if (c == '"') {
            std::size_t end = text.find('"', pos + 1);
            if (end == std::string::npos || text.find('\n', pos) < end) {
                error = "line " + std::to_string(line) + ": unterminated string";
                return false;
            }
            out.push_back({TokKind::String, text.substr(pos + 1, end - pos - 1), 0, line});
            pos = end + 1;
            continue;
        }
        if (is_head(c)) {
            std::size_t start = pos;
            while (pos < text.size() && is_tail(text[pos])) ++pos;
            out.push_back({TokKind::Ident, text.substr(start, pos - start), 0, line});
            continue;
        }
        if ((c >= '0' && c <= '9') || c == '.') {
            std::size_t start = pos;
            while (pos < text.size() &&
                   ((text[pos] >= '0' && text[pos] <= '9') || text[pos] == '.' ||
                    text[pos] == 'e' || text[pos] == 'E' || text[pos] == '+' || text[pos] == '-'))
                ++pos;
            const std::string lit = text.substr(start, pos - start);
            try {
                std::size_t used = 0;
                double v = std::stod(lit, &used);
                if (used != lit.size()) throw std::invalid_argument(lit);
                out.push_back({TokKind::Number, lit, v, line});
            } catch (const std::exception&) {
                error = "line " + std::to_string(line) + ": malformed number `" + lit + "`";
                return false;
            }
            continue;
        }
        error = "line " + std::to_string(line) + ": illegal character `" + std::string(1, c) + "`";
        return false;
    }
    out.push_back({TokKind::End, "", 0, line});
    return true;
}

inline bool parse_spec(const std::string& text, RawSpec& spec, std::string& error) {
    std::vector<Token> toks;
    if (!lex(text, toks, error)) return false;
    std::size_t pos = 0;
    auto peek = [&]() -> const Token& { return toks[std::min(pos, toks.size() - 1)]; };
    auto take = [&]() -> const Token& {
        const Token& t = toks[std::min(pos, toks.size() - 1)];
        if (pos < toks.size() - 1) ++pos;
        return t;
    };
    auto expect_ident = [&](const char* word) {
        if (peek().kind == TokKind::Ident && peek().text == word) {
            take();
            return true;
        }
        error = "line " + std::to_string(peek().line) + ": expected keyword `" + word + "`";
        return false;
    };

    if (!expect_ident("model") || !expect_ident("for")) return false;
    if (peek().kind != TokKind::String) {
        error = "line " + std::to_string(peek().line) + ": expected diagram name string";
        return false;
    }
    spec.model_name = take().text;

    auto at_keyword = [&](const char* word) {
        return peek().kind == TokKind::Ident && peek().text == word;
    };

    while (peek().kind != TokKind::End) {
        if (at_keyword("var")) {
            take();
            if (peek().kind != TokKind::Ident) {
                error = "line " + std::to_string(peek().line) + ": expected variable identifier";
                return false;
            }
            VariableSpec v;
            v.id = take().text;
            if (!expect_ident("states")) return false;
            while (true) {
                if (peek().kind != TokKind::Ident) {
                    error = "line " + std::to_string(peek().line) + ": expected state name";
                    return false;
                }
                v.states.push_back(take().text);
                if (peek().kind == TokKind::Comma) { take(); continue; }
                break;
            }
            spec.vars.push_back(std::move(v));
            continue;
        }
        if (at_keyword("cpt")) {
            take();
            if (peek().kind != TokKind::Ident) {
                error = "line " + std::to_string(peek().line) + ": expected node identifier";
                return false;
            }
            RawCpt c;
            c.node = take().text;
            if (at_keyword("given")) {
                take();
                while (true) {
                    if (peek().kind != TokKind::Ident) {
                        error = "line " + std::to_string(peek().line) +
                                ": expected parent identifier";
                        return false;
                    }
                    c.parents.push_back(take().text);
                    if (peek().kind == TokKind::Comma) { take(); continue; }
                    break;
                }
            }
            while (at_keyword("row")) {
                take();
                std::vector<std::string> parent_states;
                if (peek().kind == TokKind::Ident) {
                    parent_states.push_back(take().text);
                    while (peek().kind == TokKind::Comma) {
                        take();
                        if (peek().kind != TokKind::Ident) {
                            error = "line " + std::to_string(peek().line) +
                                    ": expected parent state name";
                            return false;
                        }
                        parent_states.push_back(take().text);
                    }
                }
                if (peek().kind != TokKind::Colon) {
                    error = "line " + std::to_string(peek().line) + ": expected `:`";
                    return false;
                }
                take();
                std::vector<double> probs;
                while (peek().kind == TokKind::Number) probs.push_back(take().value);
                if (probs.empty()) {
                    error = "line " + std::to_string(peek().line) +
                            ": expected at least one probability";
                    return false;
                }
                c.rows.emplace_back(std::move(parent_states), std::move(probs));
            }
            if (c.rows.empty()) {
                error = "line " + std::to_string(peek().line) + ": cpt `" + c.node +
                        "` declares no rows";
                return false;
            }
            spec.cpts.push_back(std::move(c));
            continue;
        }
        error = "line " + std::to_string(peek().line) + ": expected `var` or `cpt`";
        return false;
    }
    return true;
}

}  // namespace bn_detail

struct ModelBuilder {
    static AttachResult build(const CausalDiagram& diagram, const std::string& spec_text) {
        AttachResult result;
        auto fail = [&](const std::string& code, const std::string& msg) {
            result.errors.push_back({code, msg});
        };

        bn_detail::RawSpec spec;
        std::string parse_error;
        if (!bn_detail::parse_spec(spec_text, spec, parse_error)) {
            fail("SYNTAX", parse_error);
            return result;
        }
        if (spec.model_name != diagram.name())
            fail("NAME_MISMATCH", "model is declared for \"" + spec.model_name +
                                      "\" but the diagram is \"" + diagram.name() + "\"");

        const std::size_t n = diagram.nodes().size();
        std::vector<std::optional<VariableSpec>> vars(n);
        for (VariableSpec& v : spec.vars) {
            if (!diagram.has_node(v.id)) {
                fail("UNKNOWN_NODE", "var `" + v.id + "` is not a node of the diagram");
                continue;
            }
            const std::size_t i = diagram.index_of(v.id);
            if (vars[i]) {
                fail("DUP_VAR", "variable `" + v.id + "` declared twice");
                continue;
            }
            if (v.states.size() < 2)
                fail("BAD_STATES", "variable `" + v.id + "` needs at least two states");
            std::set<std::string> uniq(v.states.begin(), v.states.end());
            if (uniq.size() != v.states.size())
                fail("BAD_STATES", "variable `" + v.id + "` repeats a state name");
            const NodeKind kind = diagram.node(v.id).kind;
            if (kind == NodeKind::DomainIndicator &&
                v.states != std::vector<std::string>{"train", "test"})
                fail("BAD_INDICATOR_STATES",
                     "domain indicator `" + v.id + "` must declare states train, test");
            if (kind == NodeKind::Selection && v.states != std::vector<std::string>{"out", "in"})
                fail("BAD_INDICATOR_STATES",
                     "selection node `" + v.id + "` must declare states out, in");
            vars[i] = std::move(v);
        }
        for (std::size_t i = 0; i < n; ++i)
            if (!vars[i])
                fail("MISSING_VAR",
                     "no state space declared for node `" + diagram.nodes()[i].id + "`");
        if (!result.errors.empty()) return result;

        std::size_t joint = 1;
        bool too_large = false;
        for (std::size_t i = 0; i < n; ++i) {
            joint *= vars[i]->states.size();
            if (joint > kMaxJointStates) { too_large = true; break; }
        }
        if (too_large) {
            fail("STATE_SPACE_TOO_LARGE", "joint state space exceeds 2^20 assignments");
            return result;
        }

        std::vector<std::optional<Cpt>> cpts(n);
        std::vector<std::vector<std::size_t>> parent_nodes(n);
        std::set<std::string> cpt_declared;
        for (bn_detail::RawCpt& raw : spec.cpts) {
            cpt_declared.insert(raw.node);
            if (!diagram.has_node(raw.node)) {
                fail("UNKNOWN_NODE", "cpt `" + raw.node + "` is not a node of the diagram");
                continue;
            }
            const std::size_t i = diagram.index_of(raw.node);
            if (cpts[i]) {
                fail("DUP_CPT", "cpt for `" + raw.node + "` declared twice");
                continue;
            }
            // Declared parents must equal the diagram parents as a set.
            std::set<std::string> declared(raw.parents.begin(), raw.parents.end());
            std::set<std::string> actual = diagram.relatives(raw.node, Relation::Parents);
            if (declared.size() != raw.parents.size() || declared != actual) {
                fail("PARENT_MISMATCH",
                     "cpt `" + raw.node + "` parents do not match the diagram parents");
                continue;
            }
            std::vector<std::size_t> pidx;
            bool bad = false;
            for (const std::string& p : raw.parents) pidx.push_back(diagram.index_of(p));

            std::size_t row_count = 1;
            for (std::size_t p : pidx) row_count *= vars[p]->states.size();
            Cpt cpt;
            cpt.node = raw.node;
            cpt.parents = raw.parents;
            cpt.rows.assign(row_count, {});
            std::vector<bool> seen(row_count, false);

            for (auto& [pstates, probs] : raw.rows) {
                if (pstates.size() != pidx.size()) {
                    fail("PARENT_MISMATCH", "cpt `" + raw.node + "` row lists " +
                                                std::to_string(pstates.size()) +
                                                " parent states, expected " +
                                                std::to_string(pidx.size()));
                    bad = true;
                    continue;
                }
                std::size_t row = 0;
                bool row_ok = true;
                for (std::size_t k = 0; k < pidx.size(); ++k) {
                    const auto& states = vars[pidx[k]]->states;
                    auto it = std::find(states.begin(), states.end(), pstates[k]);
                    if (it == states.end()) {
                        fail("UNKNOWN_STATE", "cpt `" + raw.node + "` row names state `" +
                                                  pstates[k] + "` unknown to parent `" +
                                                  raw.parents[k] + "`");
                        row_ok = false;
                        break;
                    }
                    row = row * states.size() + static_cast<std::size_t>(it - states.begin());
                }
                if (!row_ok) { bad = true; continue; }
                if (seen[row]) {
                    fail("DUP_ROW", "cpt `" + raw.node + "` repeats a parent-state row");
                    bad = true;
                    continue;
                }
                seen[row] = true;
                if (probs.size() != vars[i]->states.size()) {
                    fail("WRONG_PROB_COUNT",
                         "cpt `" + raw.node + "` row carries " + std::to_string(probs.size()) +
                             " probabilities, expected " +
                             std::to_string(vars[i]->states.size()));
                    bad = true;
                    continue;
                }
                double sum = 0;
                bool in_range = true;
                for (double p : probs) {
                    if (p < 0.0 || p > 1.0) in_range = false;
                    sum += p;
                }
                if (!in_range) {
                    fail("BAD_PROBABILITY",
                         "cpt `" + raw.node + "` row has a probability outside [0, 1]");
                    bad = true;
                }
                if (std::abs(sum - 1.0) > kRowSumTolerance) {
                    std::string key;
                    for (std::size_t k = 0; k < pstates.size(); ++k)
                        key += (k ? "," : "") + pstates[k];
                    fail("ROW_NOT_NORMALIZED", "cpt `" + raw.node + "` row (" + key +
                                                   ") sums to " + std::to_string(sum));
                    bad = true;
                }
                if (!bad) cpt.rows[row] = std::move(probs);
            }
            for (std::size_t r = 0; r < row_count; ++r)
                if (!seen[r]) {
                    fail("MISSING_ROW", "cpt `" + raw.node +
                                            "` does not cover every parent-state combination");
                    bad = true;
                    break;
                }
            if (!bad) {
                cpts[i] = std::move(cpt);
                parent_nodes[i] = std::move(pidx);
            }
        }
        for (std::size_t i = 0; i < n; ++i)
            if (!cpts[i] && !cpt_declared.count(diagram.nodes()[i].id))
                fail("MISSING_CPT", "no cpt declared for node `" + diagram.nodes()[i].id + "`");
        if (!result.errors.empty()) return result;

        BNModel m;
        m.diagram_ = diagram;
        m.vars_.reserve(n);
        m.cpts_.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            m.vars_.push_back(std::move(*vars[i]));
            m.cpts_.push_back(std::move(*cpts[i]));
        }
        m.cpt_parent_nodes_ = std::move(parent_nodes);
        m.joint_size_ = joint;
        for (const std::string& id : diagram.topological_order())
            m.topo_.push_back(diagram.index_of(id));
        result.model = std::move(m);
        return result;
    }
};

inline AttachResult attach_model(const CausalDiagram& diagram, const std::string& spec_text) {
    return ModelBuilder::build(diagram, spec_text);
}

namespace bn_detail {

inline std::vector<std::size_t> sorted_indices(const BNModel& m,
                                               const std::set<std::string>& ids) {
    std::vector<std::size_t> out;
    for (const std::string& id : ids) out.push_back(m.diagram().index_of(id));
    std::sort(out.begin(), out.end());
    return out;
}

inline std::vector<std::optional<std::size_t>> evidence_mask(
    const BNModel& m, const std::map<std::string, std::string>& evidence) {
    std::vector<std::optional<std::size_t>> mask(m.diagram().nodes().size());
    for (const auto& [id, state] : evidence) mask[m.diagram().index_of(id)] = m.state_index(id, state);
    return mask;
}

}  // namespace bn_detail

// Exact conditional distribution over `targets` given `evidence`, by full
// enumeration of the factorized joint.
inline Distribution query(const BNModel& m, const std::set<std::string>& targets,
                          const std::map<std::string, std::string>& evidence = {}) {
    if (targets.empty()) throw Error("BAD_ARGUMENT", "query requires at least one target");
    for (const std::string& t : targets)
        if (evidence.count(t))
            throw Error("OVERLAPPING_SETS", "target `" + t + "` also appears as evidence");
    const auto tidx = bn_detail::sorted_indices(m, targets);
    const auto mask = bn_detail::evidence_mask(m, evidence);

    Distribution dist;
    std::size_t cells = 1;
    for (std::size_t i : tidx) {
        dist.variables.push_back(m.diagram().nodes()[i].id);
        dist.states.push_back(m.variables()[i].states);
        cells *= m.card(i);
    }
    dist.probs.assign(cells, 0.0);

    double total = 0;
    m.for_each_assignment([&](const std::vector<std::size_t>& a, double p) {
        if (p == 0) return;
        for (std::size_t i = 0; i < mask.size(); ++i)
            if (mask[i] && a[i] != *mask[i]) return;
        std::size_t idx = 0;
        for (std::size_t i : tidx) idx = idx * m.card(i) + a[i];
        dist.probs[idx] += p;
        total += p;
    });
    if (total <= 0)
        throw Error("ZERO_PROBABILITY_EVIDENCE", "evidence has probability zero");
    for (double& p : dist.probs) p /= total;
    return dist;
}

struct Dataset {
    std::vector<std::string> columns;            // node ids in topological order
    std::vector<std::vector<std::size_t>> rows;  // state indices aligned with columns
};

inline constexpr std::size_t kRejectionProbeDraws = 100000;
inline constexpr double kMinAcceptanceRate = 1e-4;

// Ancestral sampling with rejection on evidence. A fixed (seed, model,
// evidence, n) reproduces the dataset exactly. Aborts when the probe shows
// the evidence too unlikely for rejection to finish in reasonable time.
inline Dataset sample(const BNModel& m, std::size_t n, std::uint64_t seed,
                      const std::map<std::string, std::string>& evidence = {}) {
    if (n == 0) throw Error("BAD_ARGUMENT", "sample count must be at least 1");
    const auto mask = bn_detail::evidence_mask(m, evidence);
    if (!evidence.empty()) {
        // Exact feasibility check; zero-probability evidence is an error, not a hang.
        std::set<std::string> ev_vars;
        for (const auto& [id, state] : evidence) ev_vars.insert(id);
        Distribution d = query(m, ev_vars, {});
        std::vector<std::string> want;
        for (const std::string& v : d.variables) want.push_back(evidence.at(v));
        if (d.prob(want) <= 0)
            throw Error("ZERO_PROBABILITY_EVIDENCE", "evidence has probability zero");
    }

    Dataset out;
    for (std::size_t i : m.topological_indices()) out.columns.push_back(m.diagram().nodes()[i].id);
    out.rows.reserve(n);

    // Uniform doubles straight from the engine's (standard-pinned) bit
    // stream, so identical seeds reproduce identical datasets everywhere.
    std::mt19937_64 rng(seed);
    auto unit = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    std::vector<std::size_t> a(m.diagram().nodes().size(), 0);
    std::size_t draws = 0, accepted = 0;

    while (accepted < n) {
        for (std::size_t node : m.topological_indices()) {
            const std::vector<double>& row = m.cpt_row(node, a);
            double u = unit();
            std::size_t s = 0;
            double acc = 0;
            for (; s + 1 < row.size(); ++s) {
                acc += row[s];
                if (u < acc) break;
            }
            a[node] = s;
        }
        ++draws;
        bool accept = true;
        for (std::size_t i = 0; i < mask.size(); ++i)
            if (mask[i] && a[i] != *mask[i]) { accept = false; break; }
        if (accept) {
            std::vector<std::size_t> row;
            row.reserve(out.columns.size());
            for (std::size_t i : m.topological_indices()) row.push_back(a[i]);
            out.rows.push_back(std::move(row));
            ++accepted;
        }
        if (draws >= kRejectionProbeDraws &&
            static_cast<double>(accepted) / static_cast<double>(draws) < kMinAcceptanceRate)
            throw Error("REJECTION_TOO_SLOW",
                        "acceptance rate below 1e-4 after " + std::to_string(draws) + " draws");
    }
    return out;
}

// CSV with a header of node ids in topological order and one state name per
// cell. LF line endings.
inline std::string to_csv(const BNModel& m, const Dataset& data) {
    std::string out;
    for (std::size_t c = 0; c < data.columns.size(); ++c) {
        if (c) out += ',';
        out += data.columns[c];
    }
    out += '\n';
    std::vector<const std::vector<std::string>*> states;
    for (const std::string& id : data.columns) states.push_back(&m.variable(id).states);
    for (const auto& row : data.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += ',';
            out += (*states[c])[row[c]];
        }
        out += '\n';
    }
    return out;
}

// Exact conditional mutual information I(A; B | C) in nats.
inline double conditional_mutual_information(const BNModel& m, const std::string& a,
                                             const std::string& b,
                                             const std::set<std::string>& c = {}) {
    if (a == b || c.count(a) || c.count(b))
        throw Error("OVERLAPPING_SETS", "CMI arguments must be distinct");
    std::set<std::string> all{a, b};
    for (const std::string& id : c) all.insert(id);
    Distribution joint = query(m, all, {});

    // Locate a, b and the conditioning block inside the joint's variable list.
    const std::size_t k = joint.variables.size();
    std::vector<std::size_t> cards(k);
    for (std::size_t i = 0; i < k; ++i) cards[i] = joint.states[i].size();
    std::size_t ia = 0, ib = 0;
    for (std::size_t i = 0; i < k; ++i) {
        if (joint.variables[i] == a) ia = i;
        if (joint.variables[i] == b) ib = i;
    }

    // Accumulate marginals keyed by flattened (c), (a,c), (b,c) indices.
    auto flat = [&](const std::vector<std::size_t>& idx, bool with_a, bool with_b) {
        std::size_t f = 0;
        for (std::size_t i = 0; i < k; ++i) {
            if (i == ia && !with_a) continue;
            if (i == ib && !with_b) continue;
            f = f * cards[i] + idx[i];
        }
        return f;
    };
    std::map<std::size_t, double> pc, pac, pbc;
    std::vector<std::size_t> idx(k, 0);
    for (std::size_t linear = 0; linear < joint.probs.size(); ++linear) {
        pc[flat(idx, false, false)] += joint.probs[linear];
        pac[flat(idx, true, false)] += joint.probs[linear];
        pbc[flat(idx, false, true)] += joint.probs[linear];
        for (std::size_t i = k; i-- > 0;) {
            if (++idx[i] < cards[i]) break;
            idx[i] = 0;
        }
    }

    double cmi = 0;
    idx.assign(k, 0);
    for (std::size_t linear = 0; linear < joint.probs.size(); ++linear) {
        const double pabc = joint.probs[linear];
        if (pabc > 0) {
            const double num = pabc * pc[flat(idx, false, false)];
            const double den = pac[flat(idx, true, false)] * pbc[flat(idx, false, true)];
            cmi += pabc * std::log(num / den);
        }
        for (std::size_t i = k; i-- > 0;) {
            if (++idx[i] < cards[i]) break;
            idx[i] = 0;
        }
    }
    return cmi < 0 ? 0.0 : cmi;  // clamp float noise on exact independence
}

}  // namespace shiftlens
