#pragma once

// Empirical verification of taxonomy claims against an attached discrete
// model. Every check is an exact enumeration identity, not a sampled
// estimate:
//   1. invariant-factor: the factor a shift finding does NOT flag stays
//      identical across train/test (tolerance 1e-9);
//   2. changed-factor: the flagged factor moves by at least delta in total
//      variation (the model must be built to exhibit the shift);
//   3. selection recoverability: P(target|image, S=in) equals P(target|image)
//      when the finding claims recoverability, and differs by at least delta
//      when it does not;
//   4. correction efficacy: importance-weighted training expectations of a
//      bounded loss equal the test expectation exactly.

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "shiftlens/bayesnet.hpp"
#include "shiftlens/taxonomy.hpp"

namespace shiftlens {

inline constexpr double kExactTolerance = 1e-9;
inline constexpr double kDefaultShiftDelta = 0.05;

enum class CheckSense { AtMost, AtLeast };

inline const char* to_string(CheckSense s) {
    return s == CheckSense::AtMost ? "at_most" : "at_least";
}

struct FactorCheck {
    std::string finding;  // e.g. "shift:0" or "selection:1"
    std::string claim;
    double discrepancy = 0;
    double tolerance = 0;
    CheckSense sense = CheckSense::AtMost;
    bool pass = false;
};

struct CorrectionCheck {
    std::string item;  // plan item subject
    double uncorrected_bias = 0;
    double corrected_bias = 0;
    double tolerance = kExactTolerance;
    bool pass = false;
};

struct VerificationReport {
    std::vector<FactorCheck> checks;
    std::vector<CorrectionCheck> correction_checks;
    std::vector<std::string> notes;  // skipped checks and support caveats

    bool all_passed() const {
        for (const FactorCheck& c : checks)
            if (!c.pass) return false;
        for (const CorrectionCheck& c : correction_checks)
            if (!c.pass) return false;
        return true;
    }
};

struct VerifyOptions {
    double delta = kDefaultShiftDelta;  // minimum TV a changed factor must show
    // Optional bounded loss table keyed by (image state, target state).
    // Defaults to 0-1 loss against the train-optimal predictor.
    std::map<std::pair<std::string, std::string>, double> loss;
};

namespace verify_detail {

// Conditional distribution table P(V | W, evidence): one row per W
// assignment with positive evidence-conditional probability.
struct ConditionalTable {
    std::vector<std::string> given;                       // sorted ids of W
    std::map<std::vector<std::string>, std::vector<double>> rows;
};

inline std::vector<std::vector<std::string>> assignments_of(const BNModel& m,
                                                            const std::set<std::string>& vars) {
    std::vector<std::string> ids(vars.begin(), vars.end());
    std::vector<std::vector<std::string>> out{{}};
    for (const std::string& id : ids) {
        std::vector<std::vector<std::string>> next;
        for (const auto& prefix : out)
            for (const std::string& s : m.variable(id).states) {
                auto row = prefix;
                row.push_back(s);
                next.push_back(std::move(row));
            }
        out = std::move(next);
    }
    return out;
}

inline ConditionalTable conditional(const BNModel& m, const std::string& v,
                                    const std::set<std::string>& given,
                                    const std::map<std::string, std::string>& evidence) {
    ConditionalTable table;
    table.given.assign(given.begin(), given.end());
    for (const auto& g : assignments_of(m, given)) {
        auto ev = evidence;
        for (std::size_t i = 0; i < table.given.size(); ++i) ev[table.given[i]] = g[i];
        try {
            Distribution d = query(m, {v}, ev);
            table.rows[g] = d.probs;
        } catch (const Error& e) {
            if (e.code() != "ZERO_PROBABILITY_EVIDENCE") throw;
            // unreachable parent assignment under this evidence: no row
        }
    }
    return table;
}

// Max over shared rows of TV between the two conditionals; support mismatch
// is reported through `note`.
inline double max_row_tv(const ConditionalTable& p, const ConditionalTable& q,
                         std::optional<std::string>& note) {
    double worst = 0;
    for (const auto& [g, row] : p.rows) {
        auto it = q.rows.find(g);
        if (it == q.rows.end()) {
            if (!note) note = "support differs across compared distributions";
            continue;
        }
        worst = std::max(worst, total_variation(row, it->second));
    }
    for (const auto& [g, row] : q.rows)
        if (!p.rows.count(g) && !note) note = "support differs across compared distributions";
    return worst;
}

struct Roles {
    std::optional<std::string> image, target, anatomy;
};

inline Roles roles_of(const CausalDiagram& d) {
    return {d.role_node(NodeRole::Image), d.role_node(NodeRole::Target),
            d.role_node(NodeRole::Anatomy)};
}

// The factor named by a shift finding, resolved to (variable, given) on role
// nodes. Returns nothing when the diagram lacks the needed role.
inline std::optional<std::pair<std::string, std::set<std::string>>> resolve_factor(
    const Roles& r, ChangedFactor f) {
    switch (f) {
        case ChangedFactor::PZ:
            if (r.anatomy) return {{*r.anatomy, {}}};
            return std::nullopt;
        case ChangedFactor::PYgivenX:
            if (r.target && r.image) return {{*r.target, {*r.image}}};
            return std::nullopt;
        case ChangedFactor::PY:
            if (r.target) return {{*r.target, {}}};
            return std::nullopt;
        case ChangedFactor::PZgivenY:
            if (r.anatomy && r.target) return {{*r.anatomy, {*r.target}}};
            return std::nullopt;
        case ChangedFactor::PXgivenZ:
            if (r.image && r.anatomy) return {{*r.image, {*r.anatomy}}};
            return std::nullopt;
        case ChangedFactor::Other: return std::nullopt;
    }
    return std::nullopt;
}

// The headline factor that must stay invariant for each shift type.
inline std::optional<std::pair<std::string, std::set<std::string>>> resolve_invariant(
    const Roles& r, ShiftType t) {
    switch (t) {
        case ShiftType::PopulationShift: return resolve_factor(r, ChangedFactor::PYgivenX);
        case ShiftType::AnnotationShift:
            if (r.image) return {{*r.image, {}}};
            return std::nullopt;
        case ShiftType::PrevalenceShift:
            if (r.image && r.target) return {{*r.image, {*r.target}}};
            return std::nullopt;
        case ShiftType::ManifestationShift: return resolve_factor(r, ChangedFactor::PY);
        case ShiftType::AcquisitionShift: return resolve_factor(r, ChangedFactor::PZ);
        case ShiftType::UnclassifiedExogenous: return std::nullopt;
    }
    return std::nullopt;
}

// A factor P(v | given) is invariant across the indicator iff the diagram
// d-separates v from the indicator given `given`. When co-present mechanisms
// break that entailment, the corresponding identity check is meaningless and
// is skipped rather than reported as a failure.
inline bool entails_invariance(const CausalDiagram& d, const std::string& v,
                               const std::set<std::string>& given,
                               const std::string& indicator) {
    if (v == indicator || given.count(indicator)) return false;
    return d_separated(d, {v}, {indicator}, given, 0).separated;
}

inline std::string factor_name(const std::string& v, const std::set<std::string>& given) {
    std::string out = "P(" + v;
    if (!given.empty()) {
        out += "|";
        bool first = true;
        for (const std::string& g : given) {
            if (!first) out += ",";
            out += g;
            first = false;
        }
    }
    return out + ")";
}

// Expectation of loss(x_state, y_state) over P(image, target | evidence),
// optionally importance-weighted by a per-state weight on one variable.
inline double expected_loss(const BNModel& m, const std::string& image,
                            const std::string& target,
                            const std::map<std::string, std::string>& evidence,
                            const std::map<std::pair<std::string, std::string>, double>& loss,
                            const std::string& weight_var,
                            const std::map<std::string, double>* weights) {
    Distribution joint = query(m, {image, target}, evidence);
    const bool image_first = joint.variables[0] == image;
    double acc = 0;
    std::vector<std::size_t> idx(2, 0);
    for (std::size_t linear = 0; linear < joint.probs.size(); ++linear) {
        const std::string& s0 = joint.states[0][idx[0]];
        const std::string& s1 = joint.states[1][idx[1]];
        const std::string& xs = image_first ? s0 : s1;
        const std::string& ys = image_first ? s1 : s0;
        double w = 1;
        if (weights) {
            const std::string& key = weight_var == image ? xs : ys;
            auto it = weights->find(key);
            w = it == weights->end() ? 0.0 : it->second;
        }
        acc += joint.probs[linear] * w * loss.at({xs, ys});
        if (++idx[1] == joint.states[1].size()) {
            idx[1] = 0;
            ++idx[0];
        }
    }
    return acc;
}

// 0-1 loss against the Bayes predictor fitted on the training distribution.
inline std::map<std::pair<std::string, std::string>, double> zero_one_loss(
    const BNModel& m, const std::string& image, const std::string& target,
    const std::map<std::string, std::string>& train_evidence) {
    std::map<std::pair<std::string, std::string>, double> loss;
    for (const std::string& xs : m.variable(image).states) {
        std::string best;
        double best_p = -1;
        try {
            auto ev = train_evidence;
            ev[image] = xs;
            Distribution d = query(m, {target}, ev);
            for (std::size_t s = 0; s < d.states[0].size(); ++s)
                if (d.probs[s] > best_p) {
                    best_p = d.probs[s];
                    best = d.states[0][s];
                }
        } catch (const Error&) {
            best = m.variable(target).states[0];  // x unreachable in training: any label
        }
        for (const std::string& ys : m.variable(target).states)
            loss[{xs, ys}] = ys == best ? 0.0 : 1.0;
    }
    return loss;
}

// Per-state importance weights p_te(v)/p_tr(v); nullopt when the training
// support misses a test-supported state.
inline std::optional<std::map<std::string, double>> importance_weights(
    const BNModel& m, const std::string& v, const std::map<std::string, std::string>& train_ev,
    const std::map<std::string, std::string>& test_ev) {
    Distribution tr = query(m, {v}, train_ev);
    Distribution te = query(m, {v}, test_ev);
    std::map<std::string, double> w;
    for (std::size_t s = 0; s < tr.states[0].size(); ++s) {
        const double ptr = tr.probs[s], pte = te.probs[s];
        if (ptr <= 0 && pte > 0) return std::nullopt;
        w[tr.states[0][s]] = ptr > 0 ? pte / ptr : 0.0;
    }
    return w;
}

}  // namespace verify_detail

// Runs the per-finding and per-correction checks described above. The model
// must attach to the very diagram the findings were derived from.
inline VerificationReport verify_findings(const BNModel& model, const CausalDiagram& analyzed,
                                          const std::vector<ShiftFinding>& shifts,
                                          const std::vector<SelectionFinding>& selections,
                                          const CorrectionPlan& plan,
                                          const VerifyOptions& options = {}) {
    using namespace verify_detail;
    if (model.diagram() != analyzed)
        throw Error("MODEL_DIAGRAM_MISMATCH",
                    "the attached model describes a different diagram than the analysis");

    VerificationReport report;
    const Roles roles = roles_of(model.diagram());

    // Shift findings: invariant factor stays put, flagged factor moves.
    for (std::size_t i = 0; i < shifts.size(); ++i) {
        const ShiftFinding& f = shifts[i];
        const std::string ref = "shift:" + std::to_string(i);
        const std::map<std::string, std::string> tr{{f.domain_node, "train"}};
        const std::map<std::string, std::string> te{{f.domain_node, "test"}};

        if (auto inv = resolve_invariant(roles, f.shift_type)) {
            if (!entails_invariance(model.diagram(), inv->first, inv->second, f.domain_node)) {
                report.notes.push_back(
                    ref + ": invariant-factor check skipped: the diagram does not entail "
                          "invariance of " +
                    factor_name(inv->first, inv->second) + " across `" + f.domain_node +
                    "` (co-present mechanisms interact)");
            } else {
                FactorCheck c;
                c.finding = ref;
                c.claim = factor_name(inv->first, inv->second) +
                          " is invariant across domains of " + f.domain_node;
                std::optional<std::string> note;
                c.discrepancy = max_row_tv(conditional(model, inv->first, inv->second, tr),
                                           conditional(model, inv->first, inv->second, te), note);
                c.tolerance = kExactTolerance;
                c.sense = CheckSense::AtMost;
                c.pass = c.discrepancy <= c.tolerance;
                if (note) report.notes.push_back(ref + ": " + *note);
                report.checks.push_back(std::move(c));
            }
        } else {
            report.notes.push_back(ref +
                                   ": invariant-factor check skipped (role nodes unavailable "
                                   "for this shift type)");
        }

        if (auto chg = resolve_factor(roles, f.changed_factor)) {
            FactorCheck c;
            c.finding = ref;
            c.claim = factor_name(chg->first, chg->second) + " changes across domains of " +
                      f.domain_node + " by at least delta";
            std::optional<std::string> note;
            c.discrepancy = max_row_tv(conditional(model, chg->first, chg->second, tr),
                                       conditional(model, chg->first, chg->second, te), note);
            c.tolerance = options.delta;
            c.sense = CheckSense::AtLeast;
            c.pass = c.discrepancy >= c.tolerance;
            if (note) report.notes.push_back(ref + ": " + *note);
            report.checks.push_back(std::move(c));
        } else {
            report.notes.push_back(
                ref + ": changed-factor check skipped (factor not expressible in role nodes)");
        }
    }

    // Selection findings: conditioning on S=in preserves or distorts the
    // predictive relation exactly as claimed.
    for (std::size_t i = 0; i < selections.size(); ++i) {
        const SelectionFinding& f = selections[i];
        const std::string ref = "selection:" + std::to_string(i);
        if (!roles.image || !roles.target) {
            report.notes.push_back(ref + ": recoverability check skipped (missing roles)");
            continue;
        }
        FactorCheck c;
        c.finding = ref;
        std::optional<std::string> note;
        const std::map<std::string, std::string> sel{{f.selection_node, "in"}};
        const double tv =
            max_row_tv(conditional(model, *roles.target, {*roles.image}, sel),
                       conditional(model, *roles.target, {*roles.image}, {}), note);
        c.discrepancy = tv;
        if (f.recoverable_predictive_relation) {
            c.claim = "P(" + *roles.target + "|" + *roles.image + ", " + f.selection_node +
                      "=in) equals P(" + *roles.target + "|" + *roles.image + ")";
            c.tolerance = kExactTolerance;
            c.sense = CheckSense::AtMost;
            c.pass = tv <= c.tolerance;
        } else {
            c.claim = "selection on " + f.selection_node + " distorts P(" + *roles.target + "|" +
                      *roles.image + ") by at least delta";
            c.tolerance = options.delta;
            c.sense = CheckSense::AtLeast;
            c.pass = tv >= c.tolerance;
        }
        if (note) report.notes.push_back(ref + ": " + *note);
        report.checks.push_back(std::move(c));
    }

    // Correction efficacy for importance-weighted plan items.
    for (const PlanItem& item : plan.items) {
        if (item.weight_formula.empty()) continue;
        if (!roles.image || !roles.target) {
            report.notes.push_back("correction check skipped for `" + item.subject +
                                   "` (missing roles)");
            continue;
        }
        std::map<std::string, std::string> train_ev, test_ev;
        std::string indicator;
        if (item.finding_kind == FindingKind::Shift) {
            const ShiftFinding& f = shifts[item.finding_index];
            indicator = f.domain_node;
            train_ev[f.domain_node] = "train";
            test_ev[f.domain_node] = "test";
        } else {
            const SelectionFinding& f = selections[item.finding_index];
            indicator = f.selection_node;
            train_ev[f.selection_node] = "in";
            // test distribution is the unselected population: no evidence
        }
        const bool weight_inputs = item.strategy == Strategy::ImportanceWeightInputs;
        const std::string weight_var = weight_inputs ? *roles.image : *roles.target;

        // Reweighting is exact only when the complementary conditional is
        // invariant: P(target|image) for input weights, P(image|target) for
        // target weights. Skip when the diagram does not entail it.
        const std::string inv_var = weight_inputs ? *roles.target : *roles.image;
        const std::string inv_given = weight_inputs ? *roles.image : *roles.target;
        if (!entails_invariance(model.diagram(), inv_var, {inv_given}, indicator)) {
            report.notes.push_back(
                "correction check skipped for `" + item.subject +
                "`: the diagram does not entail invariance of P(" + inv_var + "|" + inv_given +
                ") across `" + indicator + "`, so the reweighting identity need not hold");
            continue;
        }

        auto loss = options.loss;
        if (loss.empty()) loss = zero_one_loss(model, *roles.image, *roles.target, train_ev);

        auto weights = importance_weights(model, weight_var, train_ev, test_ev);
        if (!weights) {
            report.notes.push_back("correction check for `" + item.subject +
                                   "`: training support does not cover the test distribution; "
                                   "importance weights are undefined");
            CorrectionCheck c;
            c.item = item.subject;
            c.uncorrected_bias = 1;
            c.corrected_bias = 1;
            c.pass = false;
            report.correction_checks.push_back(c);
            continue;
        }

        const double e_test =
            expected_loss(model, *roles.image, *roles.target, test_ev, loss, weight_var, nullptr);
        const double e_train =
            expected_loss(model, *roles.image, *roles.target, train_ev, loss, weight_var, nullptr);
        const double e_weighted = expected_loss(model, *roles.image, *roles.target, train_ev,
                                                loss, weight_var, &*weights);
        CorrectionCheck c;
        c.item = item.subject;
        c.uncorrected_bias = std::abs(e_train - e_test);
        c.corrected_bias = std::abs(e_weighted - e_test);
        c.tolerance = kExactTolerance;
        c.pass = c.corrected_bias <= c.tolerance;
        report.correction_checks.push_back(c);
    }

    return report;
}

}  // namespace shiftlens
