#pragma once

// DOT export. Node shape encodes kind: ellipse for observed, dashed ellipse
// for unobserved, box for domain indicators, doublecircle for selection.
// Output is deterministic (nodes by id, edges by (from, to)). Write-only;
// there is no DOT importer.

#include <string>

#include "shiftlens/diagram.hpp"

namespace shiftlens {

namespace dot_detail {

inline std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace dot_detail

inline std::string export_dot(const CausalDiagram& d) {
    using dot_detail::quote;
    std::string out = "digraph " + quote(d.name()) + " {\n";
    out += "  rankdir=LR;\n";
    for (const Node& n : d.nodes()) {
        out += "  " + quote(n.id) + " [";
        switch (n.kind) {
            case NodeKind::Observed: out += "shape=ellipse"; break;
            case NodeKind::Unobserved: out += "shape=ellipse, style=dashed"; break;
            case NodeKind::DomainIndicator: out += "shape=box"; break;
            case NodeKind::Selection: out += "shape=doublecircle"; break;
        }
        out += ", label=" + quote(n.label.empty() ? n.id : n.label);
        out += "];\n";
    }
    for (const Edge& e : d.edges())
        out += "  " + quote(e.from) + " -> " + quote(e.to) + ";\n";
    out += "}\n";
    return out;
}

}  // namespace shiftlens
