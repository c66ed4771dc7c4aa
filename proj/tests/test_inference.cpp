#include <doctest.h>

#include <algorithm>
#include <tuple>

#include "planex/error.hpp"
#include "planex/experiences.hpp"
#include "planex/inference.hpp"
#include "planex/typicality.hpp"
#include "planex/vocab.hpp"
#include "support.hpp"

using namespace planex;
using kstore::KnowledgeBase;
using kstore::Object;
using kstore::Pattern;
using kstore::Term;

namespace {

bool holds(const KnowledgeBase& kb, std::string_view a, const Term& pred, std::string_view b) {
    return kb.contains({vocab::plan_term(a), pred, vocab::plan_term(b)});
}

KnowledgeBase grounded(const std::vector<experiences::PlanProperties>& props) {
    KnowledgeBase kb;
    for (const auto& p : props) experiences::ground_properties(kb, p);
    return kb;
}

}  // namespace

TEST_SUITE("inference") {

TEST_CASE("the worked pair: X wins every property") {
    auto kb = grounded({{"Plan_X", 12, 28.20, 0}, {"Plan_Y", 18, 40.35, 3}});
    const auto asserted = inference::compare_pair(kb, "Plan_X", "Plan_Y");
    using vocab::PropertyKind;
    CHECK(holds(kb, "Plan_X", vocab::plan_comparison(PropertyKind::cost).better, "Plan_Y"));
    CHECK(holds(kb, "Plan_X", vocab::plan_comparison(PropertyKind::num_tasks).better, "Plan_Y"));
    CHECK(holds(kb, "Plan_X", vocab::plan_comparison(PropertyKind::makespan).better, "Plan_Y"));
    CHECK(holds(kb, "Plan_X", vocab::overall_comparison().better, "Plan_Y"));
    CHECK(holds(kb, "Plan_Y", vocab::overall_comparison().worse, "Plan_X"));
    CHECK(vocab::plan_comparison(PropertyKind::cost).better.local() == "isCheaperPlanThan");
    CHECK(vocab::plan_comparison(PropertyKind::num_tasks).better.local() == "isShorterPlanThan");
    CHECK(vocab::plan_comparison(PropertyKind::makespan).better.local() == "isFasterPlanThan");
    CHECK(kb.contains({vocab::quality_term("Plan_X", PropertyKind::cost), vocab::better_quality_value(),
                       vocab::quality_term("Plan_Y", PropertyKind::cost)}));
    for (const auto& t : asserted) CHECK(kb.contains(t));
}

TEST_CASE("identical properties produce no comparisons") {
    auto kb = grounded({{"A", 5, 10.0, 1}, {"B", 5, 10.0, 1}});
    CHECK(inference::compare_pair(kb, "A", "B").empty());
}

TEST_CASE("mixed outcomes rank neither plan overall") {
    auto kb = grounded({{"A", 10, 30.0, 5}, {"B", 12, 25.0, 5}});
    inference::compare_pair(kb, "A", "B");
    using vocab::PropertyKind;
    CHECK(holds(kb, "A", vocab::plan_comparison(PropertyKind::num_tasks).better, "B"));
    CHECK(holds(kb, "B", vocab::plan_comparison(PropertyKind::makespan).better, "A"));
    CHECK_FALSE(holds(kb, "A", vocab::overall_comparison().better, "B"));
    CHECK_FALSE(holds(kb, "B", vocab::overall_comparison().better, "A"));
    CHECK_FALSE(holds(kb, "A", vocab::plan_comparison(PropertyKind::cost).better, "B"));
    CHECK_FALSE(holds(kb, "B", vocab::plan_comparison(PropertyKind::cost).better, "A"));
}

TEST_CASE("errors") {
    auto kb = grounded({{"A", 1, 1.0, 0}});
    CHECK_THROWS_AS(inference::compare_pair(kb, "A", "A"), InvalidArgument);
    CHECK_THROWS_AS(inference::compare_pair(kb, "A", "Missing"), DataError);
    CHECK_THROWS_AS(inference::classify_plan(kb, "A"), DataError);  // qualities not classified
    CHECK_THROWS_AS(inference::classify_plan(kb, "Missing"), DataError);
}

TEST_CASE("typical-plan rule agrees with the universal quantifier for m = 1..6") {
    std::size_t cases = 0;
    for (std::size_t m = 1; m <= 6; ++m) {
        for (unsigned mask = 0; mask < (1u << m); ++mask) {
            KnowledgeBase kb;
            const auto plan = vocab::plan_term("D");
            kb.assert_triple({plan, vocab::type(), vocab::plan_class()});
            bool all_typical = true;
            for (std::size_t q = 0; q < m; ++q) {
                const bool atypical = (mask >> q) & 1u;
                all_typical = all_typical && !atypical;
                const auto qt = vocab::app("D_q" + std::to_string(q));
                kb.assert_triple({qt, vocab::is_quality_of(), plan});
                kb.assert_triple({qt, vocab::quality_classified_by(),
                                  atypical ? vocab::atypical_quality_value() : vocab::typical_quality_value()});
            }
            inference::RuleTrace trace;
            const auto label = inference::classify_plan(kb, "D", &trace);
            const auto expected = all_typical ? typicality::TypicalityLabel::Typical : typicality::TypicalityLabel::Atypical;
            REQUIRE(label == expected);
            CHECK(trace.qualities == m);
            CHECK(trace.inspected <= m);
            if (all_typical) CHECK(trace.inspected == m);
            // Exactly one plan classification is asserted.
            const auto cls = kb.query(Pattern{plan, vocab::plan_classified_by(), std::nullopt});
            REQUIRE(cls.size() == 1);
            CHECK(cls[0].object == Object{all_typical ? vocab::typical_plan() : vocab::atypical_plan()});
            ++cases;
        }
    }
    CHECK(cases == 2 + 4 + 8 + 16 + 32 + 64);
}

TEST_CASE("early exit on the first atypical quality") {
    KnowledgeBase kb;
    const auto plan = vocab::plan_term("D");
    for (int q = 0; q < 3; ++q) {
        const auto qt = vocab::app("D_q" + std::to_string(q));
        kb.assert_triple({qt, vocab::is_quality_of(), plan});
        kb.assert_triple({qt, vocab::quality_classified_by(),
                          q == 0 ? vocab::atypical_quality_value() : vocab::typical_quality_value()});
    }
    inference::RuleTrace trace;
    inference::classify_plan(kb, "D", &trace);
    CHECK(trace.inspected == 1);
}

TEST_CASE("run_all over a synthetic corpus") {
    KnowledgeBase kb;
    std::vector<experiences::PlanProperties> props;
    std::vector<std::string> ids;
    for (const auto& r : experiences::generate_synthetic(42, 18, {})) {
        props.push_back(experiences::extract_properties(r));
        ids.push_back(props.back().plan_id);
        experiences::ground_properties(kb, props.back());
    }
    typicality::classify_corpus(kb, props, 0.68);
    const auto summary = inference::run_all(kb, ids);
    CHECK(summary.pairs_compared == 153);
    CHECK(summary.typical + summary.atypical == 18);
    CHECK(inference::plan_ids(kb) == ids);

    SUBCASE("antisymmetry") {
        std::vector<Term> preds;
        for (auto k : vocab::kPropertyKinds) preds.push_back(vocab::plan_comparison(k).better);
        preds.push_back(vocab::overall_comparison().better);
        for (const auto& a : ids) {
            for (const auto& b : ids) {
                if (a == b) continue;
                for (const auto& p : preds) CHECK_FALSE((holds(kb, a, p, b) && holds(kb, b, p, a)));
                for (auto k : vocab::kPropertyKinds) {
                    const auto c = vocab::plan_comparison(k);
                    // A predicate and its inverse always come together, never crosswise.
                    CHECK(holds(kb, a, c.better, b) == holds(kb, b, c.worse, a));
                    CHECK_FALSE((holds(kb, a, c.better, b) && holds(kb, a, c.worse, b)));
                }
            }
        }
    }
    SUBCASE("idempotence") {
        const auto before = kb.triples();
        const auto again = inference::run_all(kb, ids);
        CHECK(kb.triples() == before);
        CHECK(again.typical == summary.typical);
    }
}

TEST_CASE("two plans give one pair") {
    auto kb = grounded({{"A", 1, 1.0, 0}, {"B", 2, 2.0, 1}});
    typicality::classify_corpus(kb, std::vector<experiences::PlanProperties>{{"A", 1, 1.0, 0}, {"B", 2, 2.0, 1}}, 0.5);
    const std::vector<std::string> ids{"A", "B"};
    CHECK(inference::run_all(kb, ids).pairs_compared == 1);
}

TEST_CASE("inferred triples carry the intersection of their premise intervals") {
    KnowledgeBase kb;
    using vocab::PropertyKind;
    for (const auto& [id, v] : {std::pair{"A", 1}, std::pair{"B", 2}}) {
        const auto plan = vocab::plan_term(id);
        kb.assert_triple({plan, vocab::type(), vocab::plan_class()});
        for (auto k : vocab::kPropertyKinds) {
            const auto q = vocab::quality_term(id, k);
            const auto span = std::string(id) == "A" ? kstore::TimeInterval::between(0.0, 100.0)
                                                     : kstore::TimeInterval::between(50.0, std::nullopt);
            kb.assert_triple({q, vocab::is_quality_of(), plan, span});
            kb.assert_triple({plan, vocab::attribution_predicate(k), q, span});
            kb.assert_triple({q, vocab::has_data_value(), kstore::Literal::integer(v), span});
        }
    }
    inference::compare_pair(kb, "A", "B");
    const auto hits = kb.query({vocab::plan_term("A"), vocab::plan_comparison(PropertyKind::cost).better, std::nullopt});
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].holds == kstore::TimeInterval::between(50.0, 100.0));
}

TEST_CASE("values that never hold together are not compared") {
    KnowledgeBase kb;
    for (const auto& [id, v, span] : {std::tuple{"A", 1, kstore::TimeInterval::between(0.0, 10.0)},
                                      std::tuple{"B", 2, kstore::TimeInterval::between(20.0, 30.0)}}) {
        const auto plan = vocab::plan_term(id);
        for (auto k : vocab::kPropertyKinds) {
            const auto q = vocab::quality_term(id, k);
            kb.assert_triple({plan, vocab::attribution_predicate(k), q, span});
            kb.assert_triple({q, vocab::has_data_value(), kstore::Literal::integer(v), span});
        }
    }
    CHECK(inference::compare_pair(kb, "A", "B").empty());
}

}
