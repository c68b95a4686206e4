#pragma once

// Text format for causal diagrams. Grammar:
//
//   file      := "diagram" STRING "{" stmt* "}"
//   stmt      := node_stmt | edge_stmt
//   node_stmt := "node" IDENT attrs
//   attrs     := ("kind" "=" KIND)? ("role" "=" ROLE)? ("label" "=" STRING)?
//   edge_stmt := "edge" IDENT "->" IDENT
//   KIND      := "observed" | "unobserved" | "domain" | "selection"
//   ROLE      := "image" | "target" | "anatomy"
//   IDENT     := [A-Za-z_][A-Za-z0-9_]*
//   STRING    := double-quoted, backslash escapes \" \\ \n \t \r
//
// "#" starts a line comment; whitespace is insignificant; kind defaults to
// observed. Unknown attribute keys are syntax errors rather than being
// skipped, since a typo in a causal assumption must not pass silently.

#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shiftlens/diagram.hpp"

namespace shiftlens {

struct SourceSpan {
    int line = 1;    // 1-based
    int column = 1;  // 1-based
    int length = 1;
};

enum class ParseCode { Lex, Syntax, Semantic };

inline const char* to_string(ParseCode c) {
    switch (c) {
        case ParseCode::Lex: return "LEX";
        case ParseCode::Syntax: return "SYNTAX";
        case ParseCode::Semantic: return "SEMANTIC";
    }
    return "?";
}

struct ParseError {
    SourceSpan span;
    ParseCode code = ParseCode::Syntax;
    std::string message;
};

struct ParseResult {
    std::optional<CausalDiagram> diagram;
    std::vector<ParseError> errors;
    std::vector<ParseError> warnings;  // e.g. lenient-mode domain in-edges
    bool ok() const { return diagram.has_value(); }
};

namespace dsl_detail {

enum class TokKind { Ident, String, LBrace, RBrace, Equals, Arrow, End };

struct Token {
    TokKind kind = TokKind::End;
    std::string text;  // identifier spelling or decoded string value
    SourceSpan span;
};

class Lexer {
public:
    explicit Lexer(const std::string& text) : text_(text) {}

    // Tokenizes the whole input; returns false and sets `error` on the first
    // lexical fault. Never reads past the buffer regardless of input bytes.
    bool run(std::vector<Token>& out, ParseError& error) {
        while (true) {
            skip_trivia();
            if (pos_ >= text_.size()) {
                out.push_back({TokKind::End, "", here(1)});
                return true;
            }
            const char c = text_[pos_];
            if (c == '{') { out.push_back(single(TokKind::LBrace)); continue; }
            if (c == '}') { out.push_back(single(TokKind::RBrace)); continue; }
            if (c == '=') { out.push_back(single(TokKind::Equals)); continue; }
            if (c == '-') {
                if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '>') {
                    Token t{TokKind::Arrow, "->", here(2)};
                    advance(); advance();
                    out.push_back(t);
                    continue;
                }
                error = {here(1), ParseCode::Lex, "illegal character `-` (expected `->`)"};
                return false;
            }
            if (is_ident_head(c)) {
                Token t{TokKind::Ident, "", here(1)};
                std::size_t start = pos_;
                while (pos_ < text_.size() && is_ident_tail(text_[pos_])) advance();
                t.text = text_.substr(start, pos_ - start);
                t.span.length = static_cast<int>(pos_ - start);
                out.push_back(t);
                continue;
            }
            if (c == '"') {
                Token t;
                if (!lex_string(t, error)) return false;
                out.push_back(t);
                continue;
            }
            error = {here(1), ParseCode::Lex, "illegal character " + printable(c)};
            return false;
        }
    }

private:
    static bool is_ident_head(char c) {
        return c == '_' || (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z');
    }
    static bool is_ident_tail(char c) { return is_ident_head(c) || (c >= '0' && c <= '9'); }

    static std::string printable(char c) {
        unsigned char u = static_cast<unsigned char>(c);
        if (u >= 0x20 && u < 0x7f) return std::string("`") + c + "`";
        char buf[16];
        std::snprintf(buf, sizeof buf, "0x%02x", u);
        return buf;
    }

    SourceSpan here(int length) const { return {line_, col_, length}; }

    Token single(TokKind kind) {
        Token t{kind, std::string(1, text_[pos_]), here(1)};
        advance();
        return t;
    }

    void advance() {
        if (text_[pos_] == '\n') { ++line_; col_ = 1; } else { ++col_; }
        ++pos_;
    }

    void skip_trivia() {
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') { advance(); continue; }
            if (c == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
                continue;
            }
            break;
        }
    }

    bool lex_string(Token& t, ParseError& error) {
        t.kind = TokKind::String;
        t.span = here(1);
        const std::size_t start = pos_;
        advance();  // opening quote
        std::string value;
        while (true) {
            if (pos_ >= text_.size()) {
                error = {t.span, ParseCode::Lex, "unterminated string literal"};
                return false;
            }
            const char c = text_[pos_];
            if (c == '"') {
                advance();
                t.text = std::move(value);
                t.span.length = static_cast<int>(pos_ - start);
                return true;
            }
            if (c == '\n') {
                error = {t.span, ParseCode::Lex, "unterminated string literal"};
                return false;
            }
            if (c == '\\') {
                advance();
                if (pos_ >= text_.size()) {
                    error = {t.span, ParseCode::Lex, "unterminated string literal"};
                    return false;
                }
                const char e = text_[pos_];
                switch (e) {
                    case '"': value += '"'; break;
                    case '\\': value += '\\'; break;
                    case 'n': value += '\n'; break;
                    case 't': value += '\t'; break;
                    case 'r': value += '\r'; break;
                    default:
                        error = {here(1), ParseCode::Lex,
                                 "unsupported escape sequence `\\" + printable(e) + "`"};
                        return false;
                }
                advance();
                continue;
            }
            if (static_cast<unsigned char>(c) < 0x20) {
                error = {here(1), ParseCode::Lex, "illegal character " + printable(c) +
                                                      " in string literal"};
                return false;
            }
            value += c;
            advance();
        }
    }

    const std::string& text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

struct Parser {
    const std::vector<Token>& toks;
    std::size_t pos = 0;

    const Token& peek(std::size_t ahead = 0) const {
        std::size_t i = pos + ahead;
        return i < toks.size() ? toks[i] : toks.back();
    }
    const Token& take() {
        const Token& t = peek();
        if (pos < toks.size() - 1) ++pos;
        return t;
    }
    bool at_ident(const char* spelling) const {
        return peek().kind == TokKind::Ident && peek().text == spelling;
    }
};

}  // namespace dsl_detail

inline ParseResult parse_dsl(const std::string& text,
                             ValidationMode mode = ValidationMode::Strict) {
    using namespace dsl_detail;
    ParseResult result;
    auto fail = [&](const SourceSpan& span, ParseCode code, const std::string& msg) {
        result.errors.push_back({span, code, msg});
        return result;
    };

    std::vector<Token> toks;
    ParseError lex_error;
    if (!Lexer(text).run(toks, lex_error)) {
        result.errors.push_back(lex_error);
        return result;
    }

    Parser p{toks};
    if (!p.at_ident("diagram"))
        return fail(p.peek().span, ParseCode::Syntax, "expected keyword `diagram`");
    const SourceSpan diagram_span = p.take().span;
    if (p.peek().kind != TokKind::String)
        return fail(p.peek().span, ParseCode::Syntax, "expected diagram name string");
    const std::string name = p.take().text;
    if (p.peek().kind != TokKind::LBrace)
        return fail(p.peek().span, ParseCode::Syntax, "expected `{`");
    p.take();

    std::vector<Node> nodes;
    std::vector<Edge> edges;
    std::map<std::string, SourceSpan> node_spans;  // first declaration
    std::map<std::string, SourceSpan> edge_spans;  // keyed by "from->to"

    while (true) {
        if (p.peek().kind == TokKind::RBrace) {
            p.take();
            break;
        }
        if (p.at_ident("node")) {
            p.take();
            if (p.peek().kind != TokKind::Ident)
                return fail(p.peek().span, ParseCode::Syntax, "expected node identifier");
            const Token id_tok = p.take();
            Node n{id_tok.text, NodeKind::Observed, NodeRole::None, ""};
            node_spans.emplace(n.id, id_tok.span);

            int stage = 0;  // 0 none, 1 kind, 2 role, 3 label
            while (p.peek().kind == TokKind::Ident && p.peek(1).kind == TokKind::Equals) {
                const Token key = p.take();
                p.take();  // '='
                int key_stage;
                if (key.text == "kind") key_stage = 1;
                else if (key.text == "role") key_stage = 2;
                else if (key.text == "label") key_stage = 3;
                else
                    return fail(key.span, ParseCode::Syntax,
                                "unknown attribute `" + key.text +
                                    "` (expected `kind`, `role`, or `label`)");
                if (key_stage <= stage)
                    return fail(key.span, ParseCode::Syntax,
                                "attribute `" + key.text +
                                    "` is duplicated or out of order (order is kind, role, label)");
                stage = key_stage;
                if (key_stage == 3) {
                    if (p.peek().kind != TokKind::String)
                        return fail(p.peek().span, ParseCode::Syntax,
                                    "expected string literal for `label`");
                    n.label = p.take().text;
                    continue;
                }
                if (p.peek().kind != TokKind::Ident)
                    return fail(p.peek().span, ParseCode::Syntax,
                                "expected value identifier for `" + key.text + "`");
                const Token val = p.take();
                if (key_stage == 1) {
                    if (val.text == "observed") n.kind = NodeKind::Observed;
                    else if (val.text == "unobserved") n.kind = NodeKind::Unobserved;
                    else if (val.text == "domain") n.kind = NodeKind::DomainIndicator;
                    else if (val.text == "selection") n.kind = NodeKind::Selection;
                    else
                        return fail(val.span, ParseCode::Syntax,
                                    "expected node kind (`observed`, `unobserved`, `domain`, or "
                                    "`selection`)");
                } else {
                    if (val.text == "image") n.role = NodeRole::Image;
                    else if (val.text == "target") n.role = NodeRole::Target;
                    else if (val.text == "anatomy") n.role = NodeRole::Anatomy;
                    else
                        return fail(val.span, ParseCode::Syntax,
                                    "expected node role (`image`, `target`, or `anatomy`)");
                }
            }
            nodes.push_back(std::move(n));
            continue;
        }
        if (p.at_ident("edge")) {
            p.take();
            if (p.peek().kind != TokKind::Ident)
                return fail(p.peek().span, ParseCode::Syntax, "expected source node identifier");
            const Token from = p.take();
            if (p.peek().kind != TokKind::Arrow)
                return fail(p.peek().span, ParseCode::Syntax, "expected `->`");
            p.take();
            if (p.peek().kind != TokKind::Ident)
                return fail(p.peek().span, ParseCode::Syntax, "expected target node identifier");
            const Token to = p.take();
            edge_spans.emplace(from.text + "->" + to.text, from.span);
            edges.push_back({from.text, to.text});
            continue;
        }
        return fail(p.peek().span, ParseCode::Syntax, "expected `node`, `edge`, or `}`");
    }
    if (p.peek().kind != TokKind::End)
        return fail(p.peek().span, ParseCode::Syntax, "expected end of input after `}`");

    BuildResult built = build_diagram(name, std::move(nodes), std::move(edges), mode);
    auto locate = [&](const Diagnostic& d) {
        SourceSpan span = diagram_span;
        auto n = node_spans.find(d.element);
        if (n != node_spans.end()) span = n->second;
        auto e = edge_spans.find(d.element);
        if (e != edge_spans.end()) span = e->second;
        return ParseError{span, ParseCode::Semantic,
                          std::string(to_string(d.code)) + ": " + d.message};
    };
    for (const Diagnostic& d : built.report.warnings) result.warnings.push_back(locate(d));
    if (!built.ok()) {
        for (const Diagnostic& d : built.report.errors) result.errors.push_back(locate(d));
        return result;
    }
    result.diagram = std::move(built.diagram);
    return result;
}

namespace dsl_detail {

inline std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default: out += c;
        }
    }
    out += '"';
    return out;
}

}  // namespace dsl_detail

// Canonical form: nodes sorted by id, then edges sorted by (from, to), two
// space indentation, LF endings, default attributes omitted. Parsing the
// output reproduces the diagram, and serialize(parse(serialize(d))) is
// byte-identical to serialize(d).
inline std::string serialize_dsl(const CausalDiagram& d) {
    std::string out = "diagram " + dsl_detail::quote(d.name()) + " {\n";
    for (const Node& n : d.nodes()) {
        out += "  node " + n.id;
        if (n.kind != NodeKind::Observed) out += std::string(" kind=") + to_string(n.kind);
        if (n.role != NodeRole::None) out += std::string(" role=") + to_string(n.role);
        if (!n.label.empty()) out += " label=" + dsl_detail::quote(n.label);
        out += '\n';
    }
    for (const Edge& e : d.edges()) out += "  edge " + e.from + " -> " + e.to + '\n';
    out += "}\n";
    return out;
}

}  // namespace shiftlens
