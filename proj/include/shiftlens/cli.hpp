#pragma once

// Command-line front end. One verb per pipeline stage:
//
//   analyze <file> [--format json|markdown] [--lenient]
//   dsep <file> --a <ids> --b <ids> [--given <ids>]
//   simulate <file> --cpts <file> --samples <n> --seed <u64>
//            [--evidence k=v,...] [--out <csv>]
//   verify <file> --cpts <file> [--delta <f>] [--format json|markdown]
//   export-dot <file>
//   independencies <file> [--max-cond <n>]
//
// Exit codes: 0 clean, 1 findings requiring attention, 2 input error.
// Diagnostics go to the error stream; machine output to the output stream.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shiftlens/bayesnet.hpp"
#include "shiftlens/dot.hpp"
#include "shiftlens/dsep.hpp"
#include "shiftlens/dsl.hpp"
#include "shiftlens/report.hpp"

namespace shiftlens {

namespace cli_detail {

inline std::optional<std::string> read_file(const std::string& path, std::ostream& err) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        err << "error: cannot open file: " << path << "\n";
        return std::nullopt;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::optional<CausalDiagram> load_diagram(const std::string& path, ValidationMode mode,
                                                 std::ostream& err) {
    auto text = read_file(path, err);
    if (!text) return std::nullopt;
    ParseResult parsed = parse_dsl(*text, mode);
    for (const ParseError& w : parsed.warnings)
        err << "warning: " << path << ":" << w.span.line << ":" << w.span.column << ": "
            << w.message << "\n";
    if (!parsed.ok()) {
        for (const ParseError& e : parsed.errors)
            err << path << ":" << e.span.line << ":" << e.span.column << ": "
                << to_string(e.code) << ": " << e.message << "\n";
        return std::nullopt;
    }
    return std::move(parsed.diagram);
}

inline std::optional<BNModel> load_model(const CausalDiagram& diagram, const std::string& path,
                                         std::ostream& err) {
    auto text = read_file(path, err);
    if (!text) return std::nullopt;
    AttachResult attached = attach_model(diagram, *text);
    if (!attached.ok()) {
        for (const ModelDiag& e : attached.errors)
            err << path << ": " << e.code << ": " << e.message << "\n";
        return std::nullopt;
    }
    return std::move(attached.model);
}

inline std::vector<std::string> split_csv(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(text);
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

inline std::optional<std::map<std::string, std::string>> parse_evidence(const std::string& text,
                                                                        std::ostream& err) {
    std::map<std::string, std::string> out;
    for (const std::string& kv : split_csv(text)) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == kv.size()) {
            err << "error: malformed evidence entry `" << kv << "` (expected node=state)\n";
            return std::nullopt;
        }
        out[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    return out;
}

struct Args {
    std::string command;
    std::string file;
    std::string cpts;
    std::string format = "markdown";
    bool lenient = false;
    std::string set_a, set_b, set_given;
    std::uint64_t samples = 0;
    std::uint64_t seed = 0;
    std::string evidence;
    std::string out_path;
    double delta = kDefaultShiftDelta;
    int max_cond = 2;
};

}  // namespace cli_detail

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    using namespace cli_detail;
    Args a;

    CLI::App app{"causal-diagram analysis for predictive modelling: parse, validate, classify "
                 "dataset shift and selection bias, and verify against a discrete model"};
    app.require_subcommand(1);

    auto* analyze = app.add_subcommand("analyze", "full analysis report for a diagram");
    analyze->add_option("file", a.file, "diagram file (.cdsl)")->required();
    analyze->add_option("--format", a.format, "json or markdown")
        ->check(CLI::IsMember({"json", "markdown"}));
    analyze->add_flag("--lenient", a.lenient, "downgrade domain-indicator in-edges to warnings");

    auto* dsep = app.add_subcommand("dsep", "d-separation query with witness paths");
    dsep->add_option("file", a.file)->required();
    dsep->add_option("--a", a.set_a, "comma-separated node ids")->required();
    dsep->add_option("--b", a.set_b, "comma-separated node ids")->required();
    dsep->add_option("--given", a.set_given, "comma-separated conditioning ids");

    auto* simulate = app.add_subcommand("simulate", "draw a dataset from an attached model");
    simulate->add_option("file", a.file)->required();
    simulate->add_option("--cpts", a.cpts, "model file (.cpt)")->required();
    simulate->add_option("--samples", a.samples, "number of records")->required();
    simulate->add_option("--seed", a.seed, "64-bit RNG seed")->required();
    simulate->add_option("--evidence", a.evidence, "node=state,... rejection evidence");
    simulate->add_option("--out", a.out_path, "CSV output path (default: stdout)");

    auto* verify = app.add_subcommand("verify", "analyze and verify claims against a model");
    verify->add_option("file", a.file)->required();
    verify->add_option("--cpts", a.cpts, "model file (.cpt)")->required();
    verify->add_option("--delta", a.delta, "minimum TV a changed factor must exhibit")
        ->check(CLI::NonNegativeNumber);
    verify->add_option("--format", a.format, "json or markdown")
        ->check(CLI::IsMember({"json", "markdown"}));

    auto* export_dot_cmd = app.add_subcommand("export-dot", "emit the diagram as DOT");
    export_dot_cmd->add_option("file", a.file)->required();

    auto* indep = app.add_subcommand("independencies", "implied conditional independencies");
    indep->add_option("file", a.file)->required();
    indep->add_option("--max-cond", a.max_cond, "largest conditioning-set size")
        ->check(CLI::NonNegativeNumber);

    std::vector<const char*> argv;
    argv.push_back("shiftlens");
    for (const std::string& s : args) argv.push_back(s.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        const ValidationMode mode = a.lenient ? ValidationMode::Lenient : ValidationMode::Strict;

        if (analyze->parsed() || verify->parsed()) {
            auto diagram = load_diagram(a.file, mode, err);
            if (!diagram) return 2;
            AnalysisReport report;
            if (verify->parsed()) {
                auto model = load_model(*diagram, a.cpts, err);
                if (!model) return 2;
                VerifyOptions options;
                options.delta = a.delta;
                report = build_report(*diagram, *model, options);
            } else {
                report = build_report(*diagram);
            }
            out << render_report(
                report, a.format == "json" ? ReportFormat::Json : ReportFormat::Markdown);
            return exit_code(report);
        }

        if (dsep->parsed()) {
            auto diagram = load_diagram(a.file, mode, err);
            if (!diagram) return 2;
            auto to_set = [](const std::string& s) {
                auto v = split_csv(s);
                return std::set<std::string>(v.begin(), v.end());
            };
            SeparationResult res =
                d_separated(*diagram, to_set(a.set_a), to_set(a.set_b), to_set(a.set_given));
            out << (res.separated ? "separated" : "connected") << "\n";
            for (const Path& p : res.witnesses) out << "path: " << p.to_string() << "\n";
            if (res.witnesses_truncated) out << "(witness list truncated)\n";
            return 0;
        }

        if (simulate->parsed()) {
            auto diagram = load_diagram(a.file, mode, err);
            if (!diagram) return 2;
            auto model = load_model(*diagram, a.cpts, err);
            if (!model) return 2;
            auto evidence = parse_evidence(a.evidence, err);
            if (!evidence) return 2;
            Dataset data = sample(*model, a.samples, a.seed, *evidence);
            const std::string csv = to_csv(*model, data);
            if (a.out_path.empty()) {
                out << csv;
            } else {
                std::ofstream f(a.out_path, std::ios::binary);
                if (!f) {
                    err << "error: cannot write file: " << a.out_path << "\n";
                    return 2;
                }
                f << csv;
            }
            return 0;
        }

        if (export_dot_cmd->parsed()) {
            auto diagram = load_diagram(a.file, mode, err);
            if (!diagram) return 2;
            out << export_dot(*diagram);
            return 0;
        }

        if (indep->parsed()) {
            auto diagram = load_diagram(a.file, mode, err);
            if (!diagram) return 2;
            for (const Independence& ind : implied_independencies(*diagram, a.max_cond)) {
                out << ind.a << " _||_ " << ind.b;
                if (!ind.given.empty()) {
                    out << " | ";
                    for (std::size_t i = 0; i < ind.given.size(); ++i)
                        out << (i ? ", " : "") << ind.given[i];
                }
                out << "\n";
            }
            return 0;
        }
    } catch (const Error& e) {
        err << "error: " << e.code() << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    err << "error: no subcommand selected\n";
    return 2;
}

}  // namespace shiftlens
