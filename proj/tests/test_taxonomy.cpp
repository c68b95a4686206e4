#include <catch2/catch_amalgamated.hpp>

#include "corpus_util.hpp"
#include "shiftlens/dsl.hpp"
#include "shiftlens/taxonomy.hpp"

using namespace shiftlens;

namespace {

CausalDiagram parse(const std::string& text) {
    auto p = parse_dsl(text);
    REQUIRE(p.ok());
    return *p.diagram;
}

}  // namespace

TEST_CASE("direction classification on the worked examples") {
    SECTION("skin lesion is anticausal") {
        auto dir = classify_direction(testutil::load_diagram("skin_lesion"));
        CHECK(dir.kind == DirectionKind::Anticausal);
        CHECK(dir.path == std::vector<std::string>{"disease", "image"});
    }
    SECTION("brain tumour is causal") {
        auto dir = classify_direction(testutil::load_diagram("brain_tumour"));
        CHECK(dir.kind == DirectionKind::Causal);
        CHECK(dir.path == std::vector<std::string>{"image", "segmentation"});
    }
    SECTION("common ancestor with no directed path is confounded") {
        auto d = parse("diagram \"c\" {\n"
                       "  node X role=image\n  node Y role=target\n  node C\n  node A\n"
                       "  edge C -> X\n  edge C -> Y\n  edge A -> X\n  edge A -> Y\n}\n");
        auto dir = classify_direction(d);
        CHECK(dir.kind == DirectionKind::Confounded);
        CHECK(dir.common_ancestor == "A");  // smallest id wins the tie-break
    }
    SECTION("no relationship at all is unrelated") {
        auto d = parse("diagram \"u\" {\n  node X role=image\n  node Y role=target\n}\n");
        CHECK(classify_direction(d).kind == DirectionKind::Unrelated);
    }
    SECTION("missing roles raise MISSING_ROLE") {
        auto d = parse("diagram \"m\" {\n  node X role=image\n  node Y\n}\n");
        try {
            classify_direction(d);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == "MISSING_ROLE");
        }
    }
}

TEST_CASE("direction trichotomy: a directed image-target path forces causal or anticausal") {
    for (const std::string& stem : testutil::corpus_diagrams()) {
        auto d = testutil::load_diagram(stem);
        auto dir = classify_direction(d);
        const auto image = *d.role_node(NodeRole::Image);
        const auto target = *d.role_node(NodeRole::Target);
        const bool img_to_tgt = d.relatives(target, Relation::Ancestors).count(image) != 0;
        const bool tgt_to_img = d.relatives(image, Relation::Ancestors).count(target) != 0;
        CHECK_FALSE((img_to_tgt && tgt_to_img));  // acyclicity
        if (img_to_tgt) CHECK(dir.kind == DirectionKind::Causal);
        if (tgt_to_img) CHECK(dir.kind == DirectionKind::Anticausal);
    }
}

namespace {

struct ShiftRow {
    DirectionKind direction;
    ShiftType type;
    ChangedFactor factor;
    bool transportable;
};

// Expected classification of the six single-mechanism corpus diagrams.
const std::map<std::string, ShiftRow> kShiftTable = {
    {"shift_a", {DirectionKind::Causal, ShiftType::PopulationShift, ChangedFactor::PZ, true}},
    {"shift_b",
     {DirectionKind::Causal, ShiftType::AcquisitionShift, ChangedFactor::PXgivenZ, false}},
    {"shift_c",
     {DirectionKind::Causal, ShiftType::AnnotationShift, ChangedFactor::PYgivenX, false}},
    {"shift_d",
     {DirectionKind::Anticausal, ShiftType::PrevalenceShift, ChangedFactor::PY, false}},
    {"shift_e",
     {DirectionKind::Anticausal, ShiftType::ManifestationShift, ChangedFactor::PZgivenY, false}},
    {"shift_f",
     {DirectionKind::Anticausal, ShiftType::AcquisitionShift, ChangedFactor::PXgivenZ, false}},
};

}  // namespace

TEST_CASE("shift corpus reproduces the dataset-shift table") {
    for (const auto& [stem, expected] : kShiftTable) {
        INFO(stem);
        auto d = testutil::load_diagram(stem);
        auto dir = classify_direction(d);
        CHECK(dir.kind == expected.direction);
        auto scan = detect_dataset_shifts(d, dir);
        REQUIRE(scan.findings.size() == 1);
        CHECK(scan.findings[0].shift_type == expected.type);
        CHECK(scan.findings[0].changed_factor == expected.factor);
        CHECK(scan.findings[0].transportable == expected.transportable);
        CHECK(scan.findings[0].domain_node == "D");
    }
}

TEST_CASE("brain tumour yields acquisition plus population shift") {
    auto d = testutil::load_diagram("brain_tumour");
    auto scan = detect_dataset_shifts(d);
    REQUIRE(scan.findings.size() == 2);
    // Findings are sorted by (domain id, edge head).
    CHECK(scan.findings[0].mechanism_edge.to == "disease");
    CHECK(scan.findings[0].shift_type == ShiftType::PopulationShift);
    CHECK(scan.findings[1].mechanism_edge.to == "image");
    CHECK(scan.findings[1].shift_type == ShiftType::AcquisitionShift);
}

TEST_CASE("scaffold mediator edges classify by ancestor tracing") {
    auto d = testutil::load_diagram("scaffold");
    auto scan = detect_dataset_shifts(d);
    REQUIRE(scan.findings.size() == 3);
    std::map<std::string, ShiftType> by_head;
    for (const auto& f : scan.findings) by_head[f.mechanism_edge.to] = f.shift_type;
    CHECK(by_head["patient_characteristics"] == ShiftType::PopulationShift);
    CHECK(by_head["acquisition_conditions"] == ShiftType::AcquisitionShift);
    CHECK(by_head["annotation_conditions"] == ShiftType::AnnotationShift);
}

TEST_CASE("domain edge into untraceable structure is reported, not guessed") {
    auto d = parse("diagram \"x\" {\n"
                   "  node X role=image\n  node Y role=target\n  node D kind=domain\n"
                   "  node stray\n  edge X -> Y\n  edge D -> stray\n}\n");
    auto scan = detect_dataset_shifts(d);
    REQUIRE(scan.findings.size() == 1);
    CHECK(scan.findings[0].shift_type == ShiftType::UnclassifiedExogenous);
    CHECK(scan.findings[0].changed_factor == ChangedFactor::Other);
    CHECK_FALSE(scan.findings[0].head_influences_image);
    CHECK_FALSE(scan.findings[0].head_influences_target);
}

TEST_CASE("no domain node produces a warning, not a failure") {
    auto scan = detect_dataset_shifts(testutil::load_diagram("skin_lesion"));
    CHECK(scan.findings.empty());
    REQUIRE(scan.warnings.size() == 1);
    CHECK(scan.warnings[0].find("NO_DOMAIN_NODE") != std::string::npos);
}

namespace {

struct SelectionRow {
    SelectionType type;
    bool recoverable;
    InducedBias bias;
};

const std::map<std::string, SelectionRow> kSelectionTable = {
    {"selection_a", {SelectionType::Random, true, InducedBias::None}},
    {"selection_b", {SelectionType::ImageDependent, true, InducedBias::PopulationShiftLike}},
    {"selection_c", {SelectionType::TargetDependent, false, InducedBias::PrevalenceShiftLike}},
    {"selection_d", {SelectionType::JointDependent, false, InducedBias::SpuriousAssociation}},
};

}  // namespace

TEST_CASE("selection corpus reproduces the sample-selection table") {
    for (const auto& [stem, expected] : kSelectionTable) {
        INFO(stem);
        auto findings = analyze_selection(testutil::load_diagram(stem));
        REQUIRE(findings.size() == 1);
        CHECK(findings[0].selection_node == "S");
        CHECK(findings[0].selection_type == expected.type);
        CHECK(findings[0].recoverable_predictive_relation == expected.recoverable);
        CHECK(findings[0].induced_bias == expected.bias);
    }
}

TEST_CASE("skin lesion selection is image-dependent and recoverable") {
    auto findings = analyze_selection(testutil::load_diagram("skin_lesion"));
    REQUIRE(findings.size() == 1);
    CHECK(findings[0].selection_type == SelectionType::ImageDependent);
    CHECK(findings[0].recoverable_predictive_relation);
}

TEST_CASE("scaffold selection depends on variables beyond image and target") {
    auto findings = analyze_selection(testutil::load_diagram("scaffold"));
    REQUIRE(findings.size() == 1);
    CHECK(findings[0].selection_type == SelectionType::OtherDependent);
    CHECK_FALSE(findings[0].recoverable_predictive_relation);
}

TEST_CASE("findings are stable across a serialization round-trip") {
    for (const std::string stem : {"scaffold", "skin_lesion", "selection_d"}) {
        auto d = testutil::load_diagram(stem);
        auto again = *parse_dsl(serialize_dsl(d)).diagram;
        auto f1 = analyze_selection(d);
        auto f2 = analyze_selection(again);
        REQUIRE(f1.size() == f2.size());
        for (std::size_t i = 0; i < f1.size(); ++i) {
            CHECK(f1[i].selection_type == f2[i].selection_type);
            CHECK(f1[i].recoverable_predictive_relation == f2[i].recoverable_predictive_relation);
            CHECK(f1[i].induced_bias == f2[i].induced_bias);
        }
    }
}

TEST_CASE("correction plans carry the advertised strategies and formulas") {
    SECTION("population shift weights the inputs") {
        auto d = testutil::load_diagram("shift_a");
        auto dir = classify_direction(d);
        auto scan = detect_dataset_shifts(d, dir);
        auto plan = plan_corrections(dir, scan.findings, {});
        REQUIRE(plan.items.size() == 1);
        CHECK(plan.items[0].strategy == Strategy::ImportanceWeightInputs);
        CHECK(plan.items[0].weight_formula == "p_te(x)/p_tr(x)");
        bool support_caveat = false;
        for (const auto& c : plan.items[0].caveats)
            if (c.find("support") != std::string::npos) support_caveat = true;
        CHECK(support_caveat);
    }
    SECTION("prevalence shift weights the targets with a generative alternative") {
        auto d = testutil::load_diagram("shift_d");
        auto dir = classify_direction(d);
        auto scan = detect_dataset_shifts(d, dir);
        auto plan = plan_corrections(dir, scan.findings, {});
        REQUIRE(plan.items.size() == 1);
        CHECK(plan.items[0].strategy == Strategy::ImportanceWeightTargets);
        CHECK(plan.items[0].weight_formula == "p_te(y)/p_tr(y)");
        REQUIRE(plan.items[0].alternatives.size() == 1);
        CHECK(plan.items[0].alternatives[0] == Strategy::GenerativeBayesReuse);
    }
    SECTION("manifestation shift admits no known correction") {
        auto d = testutil::load_diagram("shift_e");
        auto dir = classify_direction(d);
        auto scan = detect_dataset_shifts(d, dir);
        auto plan = plan_corrections(dir, scan.findings, {});
        REQUIRE(plan.items.size() == 1);
        CHECK(plan.items[0].strategy == Strategy::NoneKnown);
        bool parametric = false;
        for (const auto& c : plan.items[0].caveats)
            if (c.find("parametric") != std::string::npos) parametric = true;
        CHECK(parametric);
    }
    SECTION("annotation shift demands reannotation, acquisition demands harmonization") {
        for (auto [stem, strategy] :
             std::vector<std::pair<std::string, Strategy>>{{"shift_c", Strategy::Reannotation},
                                                           {"shift_b", Strategy::Harmonization}}) {
            auto d = testutil::load_diagram(stem);
            auto dir = classify_direction(d);
            auto scan = detect_dataset_shifts(d, dir);
            auto plan = plan_corrections(dir, scan.findings, {});
            REQUIRE(plan.items.size() == 1);
            CHECK(plan.items[0].strategy == strategy);
        }
    }
    SECTION("joint selection requires controlling additional variables") {
        auto findings = analyze_selection(testutil::load_diagram("selection_d"));
        auto plan = plan_corrections({}, {}, findings);
        REQUIRE(plan.items.size() == 1);
        CHECK(plan.items[0].strategy == Strategy::ControlAdditionalVariables);
    }
    SECTION("every finding gets exactly one item with at least one caveat") {
        auto d = testutil::load_diagram("scaffold");
        auto dir = classify_direction(d);
        auto scan = detect_dataset_shifts(d, dir);
        auto selections = analyze_selection(d);
        auto plan = plan_corrections(dir, scan.findings, selections);
        CHECK(plan.items.size() == scan.findings.size() + selections.size());
        for (const auto& item : plan.items) CHECK_FALSE(item.caveats.empty());
        REQUIRE_FALSE(plan.notes.empty());  // interaction caveat with >= 2 findings
    }
}

TEST_CASE("learning-strategy advisories follow the direction") {
    PredictiveDirection causal{DirectionKind::Causal, {"X", "Y"}, ""};
    PredictiveDirection anticausal{DirectionKind::Anticausal, {"Y", "X"}, ""};
    PredictiveDirection confounded{DirectionKind::Confounded, {}, "C"};
    PredictiveDirection unrelated{DirectionKind::Unrelated, {}, ""};

    CHECK(advise_learning_strategies(causal).ssl == SslVerdict::TheoreticallyFutile);
    CHECK(advise_learning_strategies(anticausal).ssl == SslVerdict::MayHelp);
    CHECK(advise_learning_strategies(confounded).ssl == SslVerdict::MayHelp);
    CHECK(advise_learning_strategies(unrelated).ssl == SslVerdict::Indeterminate);

    auto anti = advise_learning_strategies(anticausal);
    CHECK(anti.ssl_rationale.find("mismatch") != std::string::npos);
    for (const auto& dir : {causal, anticausal, confounded, unrelated})
        CHECK(advise_learning_strategies(dir).augmentation == "suitable");
}
