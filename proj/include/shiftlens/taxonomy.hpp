#pragma once

// Predictive-direction classification and the mismatch taxonomy: dataset
// shift mechanisms attached to domain-indicator edges, sample-selection
// mechanisms attached to selection nodes, correction planning, and learning
// strategy advisories.

#include <algorithm>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "shiftlens/diagram.hpp"
#include "shiftlens/dsep.hpp"

namespace shiftlens {

enum class DirectionKind { Causal, Anticausal, Confounded, Unrelated };

inline const char* to_string(DirectionKind k) {
    switch (k) {
        case DirectionKind::Causal: return "causal";
        case DirectionKind::Anticausal: return "anticausal";
        case DirectionKind::Confounded: return "confounded";
        case DirectionKind::Unrelated: return "unrelated";
    }
    return "?";
}

struct PredictiveDirection {
    DirectionKind kind = DirectionKind::Unrelated;
    // Witness: a directed path (image->...->target or target->...->image) for
    // causal/anticausal, or the smallest common ancestor id for confounded.
    std::vector<std::string> path;
    std::string common_ancestor;
};

enum class ShiftType {
    PopulationShift,
    AnnotationShift,
    PrevalenceShift,
    ManifestationShift,
    AcquisitionShift,
    UnclassifiedExogenous,
};

inline const char* to_string(ShiftType t) {
    switch (t) {
        case ShiftType::PopulationShift: return "population_shift";
        case ShiftType::AnnotationShift: return "annotation_shift";
        case ShiftType::PrevalenceShift: return "prevalence_shift";
        case ShiftType::ManifestationShift: return "manifestation_shift";
        case ShiftType::AcquisitionShift: return "acquisition_shift";
        case ShiftType::UnclassifiedExogenous: return "unclassified_exogenous";
    }
    return "?";
}

// Which factor of the joint P(X, Y, Z) changes with the domain.
enum class ChangedFactor { PZ, PYgivenX, PY, PZgivenY, PXgivenZ, Other };

inline const char* to_string(ChangedFactor f) {
    switch (f) {
        case ChangedFactor::PZ: return "P(Z)";
        case ChangedFactor::PYgivenX: return "P(Y|X)";
        case ChangedFactor::PY: return "P(Y)";
        case ChangedFactor::PZgivenY: return "P(Z|Y)";
        case ChangedFactor::PXgivenZ: return "P(X|Z)";
        case ChangedFactor::Other: return "other";
    }
    return "?";
}

struct ShiftFinding {
    ShiftType shift_type = ShiftType::UnclassifiedExogenous;
    std::string domain_node;
    Edge mechanism_edge;
    ChangedFactor changed_factor = ChangedFactor::Other;
    bool transportable = false;  // true only for population shift
    // For mechanism edges into mediator nodes: which role nodes the head
    // ultimately influences.
    bool head_influences_image = false;
    bool head_influences_target = false;
    std::vector<std::string> notes;
};

struct ShiftScan {
    std::vector<ShiftFinding> findings;
    std::vector<std::string> warnings;
};

enum class SelectionType { Random, ImageDependent, TargetDependent, JointDependent, OtherDependent };

inline const char* to_string(SelectionType t) {
    switch (t) {
        case SelectionType::Random: return "random";
        case SelectionType::ImageDependent: return "image_dependent";
        case SelectionType::TargetDependent: return "target_dependent";
        case SelectionType::JointDependent: return "joint_dependent";
        case SelectionType::OtherDependent: return "other_dependent";
    }
    return "?";
}

enum class InducedBias {
    None,
    PopulationShiftLike,
    AcquisitionShiftLike,
    PrevalenceShiftLike,
    SpuriousAssociation,
};

inline const char* to_string(InducedBias b) {
    switch (b) {
        case InducedBias::None: return "none";
        case InducedBias::PopulationShiftLike: return "population_shift_like";
        case InducedBias::AcquisitionShiftLike: return "acquisition_shift_like";
        case InducedBias::PrevalenceShiftLike: return "prevalence_shift_like";
        case InducedBias::SpuriousAssociation: return "spurious_association";
    }
    return "?";
}

struct SelectionFinding {
    std::string selection_node;
    SelectionType selection_type = SelectionType::Random;
    bool recoverable_predictive_relation = false;
    InducedBias induced_bias = InducedBias::None;
    std::vector<std::string> notes;
};

enum class Strategy {
    ImportanceWeightInputs,
    ImportanceWeightTargets,
    GenerativeBayesReuse,
    Harmonization,
    Reannotation,
    ControlAdditionalVariables,
    NoneKnown,
};

inline const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::ImportanceWeightInputs: return "importance_weight_inputs";
        case Strategy::ImportanceWeightTargets: return "importance_weight_targets";
        case Strategy::GenerativeBayesReuse: return "generative_bayes_reuse";
        case Strategy::Harmonization: return "harmonization";
        case Strategy::Reannotation: return "reannotation";
        case Strategy::ControlAdditionalVariables: return "control_additional_variables";
        case Strategy::NoneKnown: return "none_known";
    }
    return "?";
}

enum class FindingKind { Shift, Selection };

inline const char* to_string(FindingKind k) {
    return k == FindingKind::Shift ? "shift" : "selection";
}

struct PlanItem {
    FindingKind finding_kind = FindingKind::Shift;
    std::size_t finding_index = 0;
    std::string subject;  // human-readable finding summary
    Strategy strategy = Strategy::NoneKnown;
    std::string weight_formula;               // empty unless importance weighting
    std::vector<Strategy> alternatives;       // e.g. generative reuse for prevalence shift
    std::vector<std::string> caveats;         // never empty
};

struct CorrectionPlan {
    std::vector<PlanItem> items;
    std::vector<std::string> notes;  // plan-level, e.g. interaction warning
};

enum class SslVerdict { TheoreticallyFutile, MayHelp, Indeterminate };

inline const char* to_string(SslVerdict v) {
    switch (v) {
        case SslVerdict::TheoreticallyFutile: return "theoretically_futile";
        case SslVerdict::MayHelp: return "may_help";
        case SslVerdict::Indeterminate: return "indeterminate";
    }
    return "?";
}

struct Advisory {
    SslVerdict ssl = SslVerdict::Indeterminate;
    std::string ssl_rationale;
    std::string augmentation = "suitable";  // always suitable
    std::string augmentation_note;
};

namespace taxonomy_detail {

// Lexicographically smallest directed path from `from` to `to`, if any.
inline std::optional<std::vector<std::string>> directed_path(const CausalDiagram& d,
                                                             const std::string& from,
                                                             const std::string& to) {
    const std::size_t source = d.index_of(from), sink = d.index_of(to);
    std::vector<std::size_t> path{source};
    std::vector<bool> on_path(d.nodes().size(), false);
    on_path[source] = true;
    std::optional<std::vector<std::string>> found;

    std::function<bool(std::size_t)> dfs = [&](std::size_t n) -> bool {
        if (n == sink) {
            std::vector<std::string> ids;
            for (std::size_t i : path) ids.push_back(d.nodes()[i].id);
            found = std::move(ids);
            return true;
        }
        std::vector<std::size_t> kids(d.child_indices(n).begin(), d.child_indices(n).end());
        std::sort(kids.begin(), kids.end());  // indices are id-sorted
        for (std::size_t c : kids) {
            if (on_path[c]) continue;
            path.push_back(c);
            on_path[c] = true;
            if (dfs(c)) return true;
            on_path[c] = false;
            path.pop_back();
        }
        return false;
    };
    dfs(source);
    return found;
}

inline bool is_ancestor_of(const CausalDiagram& d, std::size_t node, std::size_t target) {
    for (std::size_t i : d.descendant_indices(node))
        if (i == target) return true;
    return false;
}

}  // namespace taxonomy_detail

// Causal: a directed path runs image => target. Anticausal: target => image.
// Confounded: neither, but a common ancestor exists (evidence names the
// lexicographically smallest one). Unrelated otherwise.
inline PredictiveDirection classify_direction(const CausalDiagram& d) {
    const auto image = d.role_node(NodeRole::Image);
    const auto target = d.role_node(NodeRole::Target);
    if (!image || !target)
        throw Error("MISSING_ROLE",
                    "direction classification requires both an image-role and a target-role node");

    PredictiveDirection out;
    if (auto p = taxonomy_detail::directed_path(d, *image, *target)) {
        out.kind = DirectionKind::Causal;
        out.path = std::move(*p);
        return out;
    }
    if (auto p = taxonomy_detail::directed_path(d, *target, *image)) {
        out.kind = DirectionKind::Anticausal;
        out.path = std::move(*p);
        return out;
    }
    const auto anc_x = d.relatives(*image, Relation::Ancestors);
    const auto anc_y = d.relatives(*target, Relation::Ancestors);
    for (const std::string& a : anc_x) {  // sets iterate in id order
        if (anc_y.count(a)) {
            out.kind = DirectionKind::Confounded;
            out.common_ancestor = a;
            return out;
        }
    }
    out.kind = DirectionKind::Unrelated;
    return out;
}

namespace taxonomy_detail {

// Mechanism label for a domain edge head that carries no role: classify by
// which role node it ultimately influences. Anatomy wins over image because
// anatomy-mediated influence reaches the image anyway.
struct HeadClass {
    bool to_anatomy = false;
    bool to_image = false;
    bool to_target = false;
};

inline HeadClass head_influence(const CausalDiagram& d, const std::string& head) {
    HeadClass out;
    const std::size_t h = d.index_of(head);
    auto reaches = [&](NodeRole role) {
        const auto id = d.role_node(role);
        if (!id) return false;
        const std::size_t t = d.index_of(*id);
        return h == t || is_ancestor_of(d, h, t);
    };
    out.to_anatomy = reaches(NodeRole::Anatomy);
    out.to_image = reaches(NodeRole::Image);
    out.to_target = reaches(NodeRole::Target);
    return out;
}

}  // namespace taxonomy_detail

// One finding per (domain node, outgoing edge). The shift label keys on the
// role of the edge head (tracing through mediators when the head carries no
// role) combined with the predictive direction.
inline ShiftScan detect_dataset_shifts(const CausalDiagram& d,
                                       const PredictiveDirection& direction) {
    ShiftScan scan;
    const auto domains = d.nodes_of_kind(NodeKind::DomainIndicator);
    if (domains.empty()) {
        scan.warnings.push_back(
            "NO_DOMAIN_NODE: diagram declares no domain indicator; dataset-shift analysis is "
            "vacuous");
        return scan;
    }

    // Anticausal labels also apply under confounding; flag the analogy.
    const bool causal_side = direction.kind == DirectionKind::Causal;
    const bool anticausal_side =
        direction.kind == DirectionKind::Anticausal || direction.kind == DirectionKind::Confounded;

    for (const std::string& dom : domains) {
        const std::set<std::string> kids = d.relatives(dom, Relation::Children);
        std::vector<std::string> heads(kids.begin(), kids.end());
        for (const std::string& head : heads) {
            ShiftFinding f;
            f.domain_node = dom;
            f.mechanism_edge = {dom, head};

            const Node& head_node = d.node(head);
            NodeRole effective_role = head_node.role;
            if (effective_role == NodeRole::None) {
                const auto cls = taxonomy_detail::head_influence(d, head);
                f.head_influences_image = cls.to_image;
                f.head_influences_target = cls.to_target;
                if (cls.to_anatomy) effective_role = NodeRole::Anatomy;
                else if (cls.to_image) effective_role = NodeRole::Image;
                else if (cls.to_target) effective_role = NodeRole::Target;
                if (effective_role != NodeRole::None)
                    f.notes.push_back("mechanism head `" + head +
                                      "` classified by ancestor tracing to the " +
                                      to_string(effective_role) + " node");
            } else {
                f.head_influences_image = effective_role == NodeRole::Image;
                f.head_influences_target = effective_role == NodeRole::Target;
            }

            switch (effective_role) {
                case NodeRole::Anatomy:
                    if (causal_side) {
                        f.shift_type = ShiftType::PopulationShift;
                        f.changed_factor = ChangedFactor::PZ;
                        f.transportable = true;
                    } else if (anticausal_side) {
                        f.shift_type = ShiftType::ManifestationShift;
                        f.changed_factor = ChangedFactor::PZgivenY;
                    } else {
                        f.shift_type = ShiftType::UnclassifiedExogenous;
                        f.notes.push_back(
                            "anatomy-side mechanism with no image-target relationship");
                    }
                    break;
                case NodeRole::Image:
                    f.shift_type = ShiftType::AcquisitionShift;
                    f.changed_factor = ChangedFactor::PXgivenZ;
                    f.notes.push_back("acquisition shift is not directly transportable");
                    break;
                case NodeRole::Target:
                    if (causal_side) {
                        f.shift_type = ShiftType::AnnotationShift;
                        f.changed_factor = ChangedFactor::PYgivenX;
                    } else if (anticausal_side) {
                        f.shift_type = ShiftType::PrevalenceShift;
                        f.changed_factor = ChangedFactor::PY;
                    } else {
                        f.shift_type = ShiftType::UnclassifiedExogenous;
                        f.notes.push_back(
                            "target-side mechanism with no image-target relationship");
                    }
                    break;
                case NodeRole::None:
                    f.shift_type = ShiftType::UnclassifiedExogenous;
                    f.notes.push_back("mechanism head `" + head +
                                      "` does not trace to an image, target, or anatomy node");
                    break;
            }
            if (direction.kind == DirectionKind::Confounded &&
                f.shift_type != ShiftType::AcquisitionShift &&
                f.shift_type != ShiftType::UnclassifiedExogenous)
                f.notes.push_back(
                    "confounded image-target relationship labelled by analogy with the "
                    "anticausal case");
            scan.findings.push_back(std::move(f));
        }
    }
    return scan;
}

inline ShiftScan detect_dataset_shifts(const CausalDiagram& d) {
    return detect_dataset_shifts(d, classify_direction(d));
}

namespace taxonomy_detail {

// Role nodes that drive the selection node: walk up from the selection
// node's parents, stopping at image/target nodes. Lineages that terminate
// without meeting either contribute an "other" driver.
struct SelectionDrivers {
    bool image = false;
    bool target = false;
    bool other = false;
};

inline SelectionDrivers selection_drivers(const CausalDiagram& d, const std::string& sel) {
    SelectionDrivers drivers;
    const auto image = d.role_node(NodeRole::Image);
    const auto target = d.role_node(NodeRole::Target);
    const std::size_t n = d.nodes().size();
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack;
    for (std::size_t p : d.parent_indices(d.index_of(sel))) stack.push_back(p);
    while (!stack.empty()) {
        const std::size_t v = stack.back();
        stack.pop_back();
        if (seen[v]) continue;
        seen[v] = true;
        const std::string& id = d.nodes()[v].id;
        if (image && id == *image) {
            drivers.image = true;
            continue;  // influence beyond the image is mediated by it
        }
        if (target && id == *target) {
            drivers.target = true;
            continue;
        }
        const auto& parents = d.parent_indices(v);
        if (parents.empty()) drivers.other = true;
        for (std::size_t p : parents) stack.push_back(p);
    }
    return drivers;
}

}  // namespace taxonomy_detail

// Per selection node: mechanism type from ancestor analysis of the node's
// parents, recoverability of the predictive relation from S _||_ target |
// image, and the bias the selection induces.
inline std::vector<SelectionFinding> analyze_selection(const CausalDiagram& d) {
    std::vector<SelectionFinding> out;
    const auto image = d.role_node(NodeRole::Image);
    const auto target = d.role_node(NodeRole::Target);

    for (const std::string& sel : d.nodes_of_kind(NodeKind::Selection)) {
        SelectionFinding f;
        f.selection_node = sel;

        const bool has_parents = !d.parent_indices(d.index_of(sel)).empty();
        if (!has_parents) {
            f.selection_type = SelectionType::Random;
            f.induced_bias = InducedBias::None;
            f.notes.push_back("selection has no inputs: uniform subsampling of the population");
        } else {
            const auto drv = taxonomy_detail::selection_drivers(d, sel);
            if (drv.other) {
                f.selection_type = SelectionType::OtherDependent;
                f.notes.push_back(
                    "selection criteria trace to variables beyond the image and target");
            } else if (drv.image && drv.target) {
                f.selection_type = SelectionType::JointDependent;
                f.induced_bias = InducedBias::SpuriousAssociation;
                f.notes.push_back(
                    "selection is a common effect of image and target: conditioning on it can "
                    "induce a spurious image-target association");
            } else if (drv.image) {
                f.selection_type = SelectionType::ImageDependent;
                f.induced_bias = InducedBias::PopulationShiftLike;
                f.notes.push_back(
                    "image-driven selection behaves like population shift when criteria reflect "
                    "anatomy, or like acquisition shift when they reflect image quality; the "
                    "graph alone cannot distinguish the two");
            } else if (drv.target) {
                f.selection_type = SelectionType::TargetDependent;
                f.induced_bias = InducedBias::PrevalenceShiftLike;
            }
        }

        // Recoverability of P(target | image) from selected data.
        if (target && *target != sel) {
            std::set<std::string> cond;
            if (image && *image != sel) cond.insert(*image);
            f.recoverable_predictive_relation =
                d_separated(d, {sel}, {*target}, cond, 0).separated;
        } else {
            f.recoverable_predictive_relation = false;
            f.notes.push_back("no target-role node: recoverability of the predictive relation "
                              "cannot be established");
        }
        out.push_back(std::move(f));
    }
    return out;
}

// One plan item per finding, in finding order. Strategies with an importance
// weight carry its symbolic formula; an explicit none_known marks mechanisms
// with no graph-level correction.
inline CorrectionPlan plan_corrections(const PredictiveDirection& direction,
                                       const std::vector<ShiftFinding>& shifts,
                                       const std::vector<SelectionFinding>& selections) {
    (void)direction;
    CorrectionPlan plan;

    for (std::size_t i = 0; i < shifts.size(); ++i) {
        const ShiftFinding& f = shifts[i];
        PlanItem item;
        item.finding_kind = FindingKind::Shift;
        item.finding_index = i;
        item.subject = f.mechanism_edge.from + " -> " + f.mechanism_edge.to + " (" +
                       to_string(f.shift_type) + ")";
        switch (f.shift_type) {
            case ShiftType::PopulationShift:
                item.strategy = Strategy::ImportanceWeightInputs;
                item.weight_formula = "p_te(x)/p_tr(x)";
                item.caveats.push_back(
                    "the predictive relation itself transports; reweighting corrects the "
                    "training objective of under-capacity models");
                item.caveats.push_back(
                    "valid only where the training inputs cover the support of the test "
                    "distribution; no guarantees on unseen modes of variation");
                break;
            case ShiftType::PrevalenceShift:
                item.strategy = Strategy::ImportanceWeightTargets;
                item.weight_formula = "p_te(y)/p_tr(y)";
                item.alternatives.push_back(Strategy::GenerativeBayesReuse);
                item.caveats.push_back(
                    "requires the test-domain class distribution p_te(y), e.g. from an "
                    "epidemiological study");
                item.caveats.push_back(
                    "alternatively a generative model can reuse the appearance model p(x|y), "
                    "which is invariant here, with the new class prior in Bayes' rule");
                break;
            case ShiftType::AnnotationShift:
                item.strategy = Strategy::Reannotation;
                item.caveats.push_back(
                    "class definitions differ across domains; no correction follows from the "
                    "graph alone, so label calibration or (partial) re-annotation is required");
                break;
            case ShiftType::ManifestationShift:
                item.strategy = Strategy::NoneKnown;
                item.caveats.push_back(
                    "the anatomical manifestation of the target changes across domains; "
                    "correction requires strong parametric assumptions about the change");
                break;
            case ShiftType::AcquisitionShift:
                item.strategy = Strategy::Harmonization;
                item.caveats.push_back(
                    "harmonize acquisitions: spatial alignment (registration, resampling) and "
                    "intensity normalization; residual scanner effects may persist");
                item.caveats.push_back("not directly transportable without harmonization");
                break;
            case ShiftType::UnclassifiedExogenous:
                item.strategy = Strategy::NoneKnown;
                item.caveats.push_back(
                    "mechanism does not match a known shift pattern; inspect the diagram and "
                    "refine roles or structure");
                break;
        }
        plan.items.push_back(std::move(item));
    }

    for (std::size_t i = 0; i < selections.size(); ++i) {
        const SelectionFinding& f = selections[i];
        PlanItem item;
        item.finding_kind = FindingKind::Selection;
        item.finding_index = i;
        item.subject = f.selection_node + " (" + to_string(f.selection_type) + ")";
        switch (f.selection_type) {
            case SelectionType::Random:
                item.strategy = Strategy::NoneKnown;
                item.caveats.push_back(
                    "random selection incurs no bias; the selection indicator can be ignored");
                break;
            case SelectionType::ImageDependent:
                item.strategy = Strategy::ImportanceWeightInputs;
                item.weight_formula = "p_te(x)/p_tr(x)";
                item.caveats.push_back(
                    "the predictive relation is directly recoverable (selection is "
                    "image-mediated), but the training objective stays biased; here p_tr is the "
                    "selected distribution p(.|S=in) and p_te the population distribution");
                break;
            case SelectionType::TargetDependent:
                item.strategy = Strategy::ImportanceWeightTargets;
                item.weight_formula = "p_te(y)/p_tr(y)";
                item.caveats.push_back(
                    "target-driven selection acts like prevalence shift; p_tr is the selected "
                    "distribution p(.|S=in) and p_te the population distribution");
                break;
            case SelectionType::JointDependent:
                item.strategy = Strategy::ControlAdditionalVariables;
                item.caveats.push_back(
                    "selection is a collider of image- and target-side causes; recovery "
                    "requires controlling for additional variables that block the opened path, "
                    "plus assumptions on the exact selection mechanism");
                break;
            case SelectionType::OtherDependent:
                item.strategy = Strategy::NoneKnown;
                item.caveats.push_back(
                    "selection depends on variables outside the image-target relationship; "
                    "consider measuring and controlling for the selection criteria");
                break;
        }
        if (!f.recoverable_predictive_relation &&
            f.selection_type != SelectionType::JointDependent &&
            f.selection_type != SelectionType::Random)
            item.caveats.push_back(
                "P(target|image) is not recoverable from selected data in this structure");
        plan.items.push_back(std::move(item));
    }

    if (shifts.size() + selections.size() >= 2)
        plan.notes.push_back(
            "multiple mismatch mechanisms are present; corrections are planned per finding and "
            "interaction effects between simultaneous mechanisms are not analyzed");
    return plan;
}

inline Advisory advise_learning_strategies(const PredictiveDirection& direction) {
    Advisory a;
    switch (direction.kind) {
        case DirectionKind::Causal:
            a.ssl = SslVerdict::TheoreticallyFutile;
            a.ssl_rationale =
                "the task predicts an effect from its cause, so by independence of cause and "
                "mechanism the input distribution p(x) carries no information about p(y|x); "
                "unlabelled inputs cannot improve the predictive relation (regularization-style "
                "benefits may remain)";
            break;
        case DirectionKind::Anticausal:
            a.ssl = SslVerdict::MayHelp;
            a.ssl_rationale =
                "the task predicts a cause from its effect, so p(x) and p(y|x) may share "
                "information and semi-supervision has a chance of success; stay cautious of "
                "target-distribution mismatch between labelled and unlabelled sets";
            break;
        case DirectionKind::Confounded:
            a.ssl = SslVerdict::MayHelp;
            a.ssl_rationale =
                "image and target descend from a common cause; this is treated like the "
                "anticausal case, so semi-supervision may help, with the same caution about "
                "target-distribution mismatch (the analogy is structural, not a guarantee)";
            break;
        case DirectionKind::Unrelated:
            a.ssl = SslVerdict::Indeterminate;
            a.ssl_rationale =
                "the diagram relates image and target by neither a directed path nor a common "
                "ancestor; no statement about semi-supervision follows";
            break;
    }
    switch (direction.kind) {
        case DirectionKind::Causal:
            a.augmentation_note =
                "suitable: augmentation adds (x, y) pairs and informs the joint distribution; "
                "for image-derived targets apply transformations equivariantly (a spatial "
                "transform of the image transforms the target the same way), and use intensity "
                "perturbations for invariance";
            break;
        default:
            a.augmentation_note =
                "suitable: augmentation adds (x, y) pairs and informs the joint distribution; "
                "for image-level targets apply intensity and spatial perturbations uniformly to "
                "inputs, encouraging invariance of the prediction";
            break;
    }
    return a;
}

}  // namespace shiftlens
