#pragma once

// Assembles the full analysis into a report: diagram summary, predictive
// direction, findings, correction plan, advisories, a six-step review
// checklist, and optional model-based verification. Renders to a versioned
// JSON schema or to markdown organized by the checklist steps.

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "shiftlens/bayesnet.hpp"
#include "shiftlens/diagram.hpp"
#include "shiftlens/dot.hpp"
#include "shiftlens/taxonomy.hpp"
#include "shiftlens/verify.hpp"

namespace shiftlens {

inline constexpr const char* kReportSchemaVersion = "1";

enum class ChecklistStatus { Satisfied, Attention, NotApplicable };

inline const char* to_string(ChecklistStatus s) {
    switch (s) {
        case ChecklistStatus::Satisfied: return "satisfied";
        case ChecklistStatus::Attention: return "attention";
        case ChecklistStatus::NotApplicable: return "not-applicable";
    }
    return "?";
}

struct ChecklistEntry {
    int step = 0;
    std::string title;
    ChecklistStatus status = ChecklistStatus::Satisfied;
    std::string note;
};

// The review steps every report walks through, in order.
inline const std::vector<std::string>& checklist_titles() {
    static const std::vector<std::string> titles = {
        "Gather meta-information about the data collection and annotation processes to "
        "reconstruct the full story of the dataset.",
        "Establish the predictive causal direction: does the image cause the prediction target "
        "or vice versa?",
        "Identify any evidence of mismatch between datasets.",
        "Verify what types of differences in acquisition are expected, if any.",
        "Determine whether the data collection was biased with respect to the population of "
        "interest, and whether selection was based on the images, the targets, or both.",
        "Draw the full causal diagram including postulated direction, shifts, and selections.",
    };
    return titles;
}

struct AnalysisReport {
    CausalDiagram diagram;
    PredictiveDirection direction;
    std::vector<ShiftFinding> shifts;
    std::vector<std::string> shift_warnings;
    std::vector<SelectionFinding> selections;
    CorrectionPlan plan;
    Advisory advisory;
    std::vector<ChecklistEntry> checklist;  // exactly six entries
    std::optional<VerificationReport> verification;
};

namespace report_detail {

inline std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

inline std::vector<ChecklistEntry> make_checklist(const AnalysisReport& r) {
    const auto& titles = checklist_titles();
    std::vector<ChecklistEntry> steps(6);
    for (int i = 0; i < 6; ++i) {
        steps[i].step = i + 1;
        steps[i].title = titles[i];
    }

    steps[0].status = ChecklistStatus::NotApplicable;
    steps[0].note =
        "manual step: record the field of application, task category, annotation method, "
        "nature and reliability of annotations, cohort characteristics, subject selection, "
        "acquisition conditions, and the train-test split";

    switch (r.direction.kind) {
        case DirectionKind::Causal:
            steps[1].status = ChecklistStatus::Satisfied;
            steps[1].note = "causal task: the image causes the target (predict effect from "
                            "cause) along " +
                            join(r.direction.path, " -> ");
            break;
        case DirectionKind::Anticausal:
            steps[1].status = ChecklistStatus::Satisfied;
            steps[1].note = "anticausal task: the target causes the image (predict cause from "
                            "effect) along " +
                            join(r.direction.path, " -> ");
            break;
        case DirectionKind::Confounded:
            steps[1].status = ChecklistStatus::Satisfied;
            steps[1].note = "image and target share the common ancestor `" +
                            r.direction.common_ancestor +
                            "`; the analysis treats this like the anticausal case";
            break;
        case DirectionKind::Unrelated:
            steps[1].status = ChecklistStatus::Attention;
            steps[1].note = "the diagram connects image and target by neither a directed path "
                            "nor a common ancestor; the predictive task has no causal support";
            break;
    }

    const bool has_domain = !r.diagram.nodes_of_kind(NodeKind::DomainIndicator).empty();
    std::size_t acquisition = 0, non_acquisition = 0;
    for (const ShiftFinding& f : r.shifts)
        (f.shift_type == ShiftType::AcquisitionShift ? acquisition : non_acquisition)++;

    if (!has_domain) {
        steps[2].status = ChecklistStatus::NotApplicable;
        steps[2].note = "no domain indicator declared; nothing marks mechanisms that differ "
                        "across environments";
    } else if (non_acquisition > 0) {
        steps[2].status = ChecklistStatus::Attention;
        steps[2].note = std::to_string(non_acquisition) +
                        " dataset-shift mechanism(s) beyond acquisition detected";
    } else {
        steps[2].status = ChecklistStatus::Satisfied;
        steps[2].note = "domain indicators present but no population, annotation, prevalence, "
                        "or manifestation mechanism detected";
    }

    if (!has_domain) {
        steps[3].status = ChecklistStatus::NotApplicable;
        steps[3].note = "no domain indicator declared";
    } else if (acquisition > 0) {
        steps[3].status = ChecklistStatus::Attention;
        steps[3].note = std::to_string(acquisition) + " acquisition-shift mechanism(s) detected";
    } else {
        steps[3].status = ChecklistStatus::Satisfied;
        steps[3].note = "no domain edge reaches the image other than through anatomy";
    }

    const bool has_selection = !r.diagram.nodes_of_kind(NodeKind::Selection).empty();
    std::size_t biased = 0;
    for (const SelectionFinding& f : r.selections)
        if (f.selection_type != SelectionType::Random) ++biased;
    if (!has_selection) {
        steps[4].status = ChecklistStatus::NotApplicable;
        steps[4].note = "no selection indicator declared; the dataset is modelled as an "
                        "unbiased draw from the population";
    } else if (biased > 0) {
        steps[4].status = ChecklistStatus::Attention;
        steps[4].note = std::to_string(biased) + " data-dependent selection mechanism(s) detected";
    } else {
        steps[4].status = ChecklistStatus::Satisfied;
        steps[4].note = "selection is random (no inputs); no bias incurred";
    }

    steps[5].status = ChecklistStatus::Satisfied;
    steps[5].note = "diagram `" + r.diagram.name() + "` with " +
                    std::to_string(r.diagram.nodes().size()) + " nodes and " +
                    std::to_string(r.diagram.edges().size()) +
                    " edges validated; export with `export-dot` or see the rendering below";
    return steps;
}

}  // namespace report_detail

// Runs the full analysis pipeline on a validated diagram.
inline AnalysisReport build_report(const CausalDiagram& diagram) {
    AnalysisReport r;
    r.diagram = diagram;
    r.direction = classify_direction(diagram);
    ShiftScan scan = detect_dataset_shifts(diagram, r.direction);
    r.shifts = std::move(scan.findings);
    r.shift_warnings = std::move(scan.warnings);
    r.selections = analyze_selection(diagram);
    r.plan = plan_corrections(r.direction, r.shifts, r.selections);
    r.advisory = advise_learning_strategies(r.direction);
    r.checklist = report_detail::make_checklist(r);
    return r;
}

inline AnalysisReport build_report(const CausalDiagram& diagram, const BNModel& model,
                                   const VerifyOptions& options = {}) {
    AnalysisReport r = build_report(diagram);
    r.verification = verify_findings(model, diagram, r.shifts, r.selections, r.plan, options);
    return r;
}

// 0 = clean, 1 = findings requiring attention. Transportable or recoverable
// findings still demand an action (reweighting), so anything beyond a random
// selection raises the code; verification failures raise it too.
inline int exit_code(const AnalysisReport& r) {
    for (const ChecklistEntry& e : r.checklist)
        if (e.status == ChecklistStatus::Attention) return 1;
    if (r.verification && !r.verification->all_passed()) return 1;
    return 0;
}

enum class ReportFormat { Json, Markdown };

namespace report_detail {

using ordered_json = nlohmann::ordered_json;

inline ordered_json direction_json(const PredictiveDirection& d) {
    ordered_json j;
    j["kind"] = to_string(d.kind);
    if (d.kind == DirectionKind::Causal || d.kind == DirectionKind::Anticausal)
        j["path"] = d.path;
    if (d.kind == DirectionKind::Confounded) j["common_ancestor"] = d.common_ancestor;
    return j;
}

inline ordered_json verification_json(const VerificationReport& v) {
    ordered_json j;
    j["all_passed"] = v.all_passed();
    j["checks"] = ordered_json::array();
    for (const FactorCheck& c : v.checks) {
        ordered_json cj;
        cj["finding"] = c.finding;
        cj["claim"] = c.claim;
        cj["discrepancy"] = c.discrepancy;
        cj["tolerance"] = c.tolerance;
        cj["sense"] = to_string(c.sense);
        cj["pass"] = c.pass;
        j["checks"].push_back(cj);
    }
    j["correction_checks"] = ordered_json::array();
    for (const CorrectionCheck& c : v.correction_checks) {
        ordered_json cj;
        cj["item"] = c.item;
        cj["uncorrected_bias"] = c.uncorrected_bias;
        cj["corrected_bias"] = c.corrected_bias;
        cj["tolerance"] = c.tolerance;
        cj["pass"] = c.pass;
        j["correction_checks"].push_back(cj);
    }
    j["notes"] = v.notes;
    return j;
}

inline ordered_json report_json(const AnalysisReport& r) {
    ordered_json j;
    j["schema_version"] = kReportSchemaVersion;

    ordered_json diag;
    diag["name"] = r.diagram.name();
    diag["nodes"] = r.diagram.nodes().size();
    diag["edges"] = r.diagram.edges().size();
    auto role_or_null = [&](NodeRole role) -> ordered_json {
        auto id = r.diagram.role_node(role);
        return id ? ordered_json(*id) : ordered_json(nullptr);
    };
    diag["image"] = role_or_null(NodeRole::Image);
    diag["target"] = role_or_null(NodeRole::Target);
    diag["anatomy"] = role_or_null(NodeRole::Anatomy);
    diag["domain_nodes"] = r.diagram.nodes_of_kind(NodeKind::DomainIndicator);
    diag["selection_nodes"] = r.diagram.nodes_of_kind(NodeKind::Selection);
    j["diagram"] = diag;

    j["direction"] = direction_json(r.direction);

    j["shifts"] = ordered_json::array();
    for (const ShiftFinding& f : r.shifts) {
        ordered_json fj;
        fj["shift_type"] = to_string(f.shift_type);
        fj["domain_node"] = f.domain_node;
        fj["mechanism_edge"] = {{"from", f.mechanism_edge.from}, {"to", f.mechanism_edge.to}};
        fj["changed_factor"] = to_string(f.changed_factor);
        fj["transportable"] = f.transportable;
        fj["head_influences_image"] = f.head_influences_image;
        fj["head_influences_target"] = f.head_influences_target;
        fj["notes"] = f.notes;
        j["shifts"].push_back(fj);
    }
    j["shift_warnings"] = r.shift_warnings;

    j["selections"] = ordered_json::array();
    for (const SelectionFinding& f : r.selections) {
        ordered_json fj;
        fj["selection_node"] = f.selection_node;
        fj["selection_type"] = to_string(f.selection_type);
        fj["recoverable_predictive_relation"] = f.recoverable_predictive_relation;
        fj["induced_bias"] = to_string(f.induced_bias);
        fj["notes"] = f.notes;
        j["selections"].push_back(fj);
    }

    ordered_json plan;
    plan["items"] = ordered_json::array();
    for (const PlanItem& item : r.plan.items) {
        ordered_json ij;
        ij["finding_kind"] = to_string(item.finding_kind);
        ij["finding_index"] = item.finding_index;
        ij["subject"] = item.subject;
        ij["strategy"] = to_string(item.strategy);
        ij["weight_formula"] =
            item.weight_formula.empty() ? ordered_json(nullptr) : ordered_json(item.weight_formula);
        ordered_json alts = ordered_json::array();
        for (Strategy s : item.alternatives) alts.push_back(to_string(s));
        ij["alternatives"] = alts;
        ij["caveats"] = item.caveats;
        plan["items"].push_back(ij);
    }
    plan["notes"] = r.plan.notes;
    j["plan"] = plan;

    ordered_json adv;
    adv["ssl"] = {{"verdict", to_string(r.advisory.ssl)}, {"rationale", r.advisory.ssl_rationale}};
    adv["augmentation"] = {{"verdict", r.advisory.augmentation},
                           {"note", r.advisory.augmentation_note}};
    j["advisory"] = adv;

    j["checklist"] = ordered_json::array();
    for (const ChecklistEntry& e : r.checklist) {
        ordered_json ej;
        ej["step"] = e.step;
        ej["title"] = e.title;
        ej["status"] = to_string(e.status);
        ej["note"] = e.note;
        j["checklist"].push_back(ej);
    }

    j["verification"] = r.verification ? verification_json(*r.verification) : ordered_json(nullptr);
    j["exit_code"] = exit_code(r);
    return j;
}

// Table cells must not carry raw pipes.
inline std::string md_cell(const std::string& text) {
    std::string out;
    for (char c : text) {
        if (c == '|') out += '\\';
        out += c;
    }
    return out;
}

inline void render_plan_items(std::string& md, const AnalysisReport& r, FindingKind kind,
                              const std::vector<std::size_t>& finding_indices) {
    for (const PlanItem& item : r.plan.items) {
        if (item.finding_kind != kind) continue;
        if (std::find(finding_indices.begin(), finding_indices.end(), item.finding_index) ==
            finding_indices.end())
            continue;
        md += "  - correction: **" + std::string(to_string(item.strategy)) + "**";
        if (!item.weight_formula.empty()) md += " with weights `" + item.weight_formula + "`";
        if (!item.alternatives.empty()) {
            std::vector<std::string> names;
            for (Strategy s : item.alternatives) names.push_back(to_string(s));
            md += " (alternative: " + join(names, ", ") + ")";
        }
        md += "\n";
        for (const std::string& c : item.caveats) md += "    - " + c + "\n";
    }
}

inline std::string report_markdown(const AnalysisReport& r) {
    std::string md = "# Causal analysis: " + r.diagram.name() + "\n\n";
    md += "- direction: **" + std::string(to_string(r.direction.kind)) + "**\n";
    md += "- dataset-shift findings: " + std::to_string(r.shifts.size()) + "\n";
    md += "- selection findings: " + std::to_string(r.selections.size()) + "\n";
    md += "- exit code: " + std::to_string(exit_code(r)) + "\n\n";
    for (const std::string& w : r.shift_warnings) md += "> " + w + "\n\n";

    md += "## Checklist\n\n";
    for (const ChecklistEntry& e : r.checklist) {
        md += "### Step " + std::to_string(e.step) + ": " + e.title + "\n\n";
        md += "*Status: " + std::string(to_string(e.status)) + "* - " + e.note + "\n\n";

        if (e.step == 2) {
            md += "- semi-supervision: **" + std::string(to_string(r.advisory.ssl)) + "** - " +
                  r.advisory.ssl_rationale + "\n";
            md += "- data augmentation: **" + r.advisory.augmentation + "** - " +
                  r.advisory.augmentation_note + "\n\n";
        }
        if (e.step == 3 || e.step == 4) {
            std::vector<std::size_t> indices;
            for (std::size_t i = 0; i < r.shifts.size(); ++i) {
                const bool acq = r.shifts[i].shift_type == ShiftType::AcquisitionShift;
                if ((e.step == 4) == acq) indices.push_back(i);
            }
            for (std::size_t i : indices) {
                const ShiftFinding& f = r.shifts[i];
                md += "- **" + std::string(to_string(f.shift_type)) + "** via `" +
                      f.mechanism_edge.from + " -> " + f.mechanism_edge.to +
                      "`, changed factor `" + to_string(f.changed_factor) + "`" +
                      (f.transportable ? ", directly transportable" : "") + "\n";
                for (const std::string& n : f.notes) md += "  - " + n + "\n";
                render_plan_items(md, r, FindingKind::Shift, {i});
            }
            if (!indices.empty()) md += "\n";
        }
        if (e.step == 5) {
            for (std::size_t i = 0; i < r.selections.size(); ++i) {
                const SelectionFinding& f = r.selections[i];
                md += "- **" + std::string(to_string(f.selection_type)) + "** selection at `" +
                      f.selection_node + "`, induced bias `" + to_string(f.induced_bias) +
                      "`, predictive relation " +
                      (f.recoverable_predictive_relation ? "recoverable" : "not recoverable") +
                      "\n";
                for (const std::string& n : f.notes) md += "  - " + n + "\n";
                render_plan_items(md, r, FindingKind::Selection, {i});
            }
            if (!r.selections.empty()) md += "\n";
        }
        if (e.step == 6) {
            md += "```dot\n" + export_dot(r.diagram) + "```\n\n";
        }
    }

    if (!r.plan.notes.empty()) {
        md += "## Plan notes\n\n";
        for (const std::string& n : r.plan.notes) md += "- " + n + "\n";
        md += "\n";
    }

    if (r.verification) {
        const VerificationReport& v = *r.verification;
        md += "## Verification\n\n";
        md += v.all_passed() ? "All checks passed.\n\n" : "Some checks FAILED.\n\n";
        if (!v.checks.empty()) {
            md += "| finding | claim | discrepancy | tolerance | sense | pass |\n";
            md += "|---|---|---|---|---|---|\n";
            for (const FactorCheck& c : v.checks) {
                char buf[64];
                std::snprintf(buf, sizeof buf, "%.3e | %.3e", c.discrepancy, c.tolerance);
                md += "| " + c.finding + " | " + md_cell(c.claim) + " | " + buf + " | " +
                      to_string(c.sense) + " | " + (c.pass ? "yes" : "NO") + " |\n";
            }
            md += "\n";
        }
        if (!v.correction_checks.empty()) {
            md += "| plan item | uncorrected bias | corrected bias | pass |\n";
            md += "|---|---|---|---|\n";
            for (const CorrectionCheck& c : v.correction_checks) {
                char buf[64];
                std::snprintf(buf, sizeof buf, "%.6f | %.3e", c.uncorrected_bias,
                              c.corrected_bias);
                md += "| " + md_cell(c.item) + " | " + buf + " | " + (c.pass ? "yes" : "NO") +
                      " |\n";
            }
            md += "\n";
        }
        for (const std::string& n : v.notes) md += "- " + n + "\n";
    }
    return md;
}

}  // namespace report_detail

inline std::string render_report(const AnalysisReport& r, ReportFormat format) {
    if (format == ReportFormat::Markdown) return report_detail::report_markdown(r);
    return report_detail::report_json(r).dump(2) + "\n";
}

}  // namespace shiftlens
