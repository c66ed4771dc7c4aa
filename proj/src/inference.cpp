#include "planex/inference.hpp"

#include "planex/error.hpp"
#include "planex/vocab.hpp"

namespace planex::inference {

using kstore::KnowledgeBase;
using kstore::Literal;
using kstore::Object;
using kstore::Pattern;
using kstore::Term;
using kstore::TimeInterval;
using kstore::Triple;
using typicality::TypicalityLabel;
using vocab::PropertyKind;

namespace {

struct QualityFact {
    Term quality;
    double value;
    TimeInterval holds;  // intersection of the link and value triples
};

QualityFact quality_fact(const KnowledgeBase& kb, std::string_view plan_id, PropertyKind kind) {
    const Term plan = vocab::plan_term(plan_id);
    auto links = kb.query(Pattern{plan, vocab::attribution_predicate(kind), std::nullopt});
    if (links.empty()) {
        throw DataError("plan '" + std::string(plan_id) + "' is missing its " +
                        std::string(vocab::to_string(kind)) + " quality");
    }
    const auto* q = std::get_if<Term>(&links.front().object);
    if (!q) throw DataError("plan '" + std::string(plan_id) + "': quality link points at a literal");
    auto values = kb.query(Pattern{*q, vocab::has_data_value(), std::nullopt});
    const Literal* lit = values.empty() ? nullptr : std::get_if<Literal>(&values.front().object);
    if (!lit || !lit->number()) throw DataError("quality '" + q->str() + "' has no numeric value");
    return QualityFact{*q, *lit->number(), links.front().holds.intersect(values.front().holds)};
}

}  // namespace

std::vector<Triple> compare_pair(KnowledgeBase& kb, std::string_view a, std::string_view b) {
    if (a == b) throw InvalidArgument("cannot compare plan '" + std::string(a) + "' with itself");
    const Term plan_a = vocab::plan_term(a);
    const Term plan_b = vocab::plan_term(b);

    std::vector<Triple> asserted;
    auto emit = [&](Triple t) {
        kb.assert_triple(t);
        asserted.push_back(std::move(t));
    };

    int a_wins = 0;
    int b_wins = 0;
    TimeInterval overall = TimeInterval::always();
    bool overall_valid = true;
    for (auto kind : vocab::kPropertyKinds) {
        const auto fa = quality_fact(kb, a, kind);
        const auto fb = quality_fact(kb, b, kind);
        // Values that never hold at the same time are not compared.
        if (!fa.holds.overlaps(fb.holds)) {
            overall_valid = false;
            continue;
        }
        const auto holds = fa.holds.intersect(fb.holds);
        if (!overall.overlaps(holds)) overall_valid = false;
        if (overall_valid) overall = overall.intersect(holds);
        if (fa.value == fb.value) continue;

        const bool a_lower = fa.value < fb.value;
        (a_lower ? a_wins : b_wins)++;
        const auto& win = a_lower ? fa : fb;
        const auto& lose = a_lower ? fb : fa;
        const auto& win_plan = a_lower ? plan_a : plan_b;
        const auto& lose_plan = a_lower ? plan_b : plan_a;
        const auto preds = vocab::plan_comparison(kind);
        emit(Triple{win.quality, vocab::better_quality_value(), lose.quality, holds});
        emit(Triple{win_plan, preds.better, lose_plan, holds});
        emit(Triple{lose_plan, preds.worse, win_plan, holds});
    }

    const auto overall_preds = vocab::overall_comparison();
    if (!overall_valid) return asserted;
    if (a_wins > 0 && b_wins == 0) {
        emit(Triple{plan_a, overall_preds.better, plan_b, overall});
        emit(Triple{plan_b, overall_preds.worse, plan_a, overall});
    } else if (b_wins > 0 && a_wins == 0) {
        emit(Triple{plan_b, overall_preds.better, plan_a, overall});
        emit(Triple{plan_a, overall_preds.worse, plan_b, overall});
    }
    return asserted;
}

TypicalityLabel classify_plan(KnowledgeBase& kb, std::string_view plan_id, RuleTrace* trace) {
    const Term plan = vocab::plan_term(plan_id);
    const auto links = kb.query(Pattern{std::nullopt, vocab::is_quality_of(), Object{plan}});
    if (links.empty()) throw DataError("plan '" + std::string(plan_id) + "' has no qualities");

    RuleTrace local;
    local.qualities = links.size();
    TypicalityLabel label = TypicalityLabel::Typical;
    TimeInterval holds = TimeInterval::always();
    for (const auto& link : links) {
        ++local.inspected;
        const auto labels = kb.query(Pattern{link.subject, vocab::quality_classified_by(), std::nullopt});
        if (labels.empty()) {
            throw DataError("quality '" + link.subject.str() + "' has not been classified");
        }
        const auto& t = labels.front();
        if (!holds.overlaps(link.holds) || !holds.intersect(link.holds).overlaps(t.holds)) {
            throw DataError("qualities of plan '" + std::string(plan_id) + "' never hold at the same time");
        }
        holds = holds.intersect(link.holds).intersect(t.holds);
        if (t.object == Object{vocab::atypical_quality_value()}) {
            label = TypicalityLabel::Atypical;
            break;
        }
        if (!(t.object == Object{vocab::typical_quality_value()})) {
            throw DataError("quality '" + link.subject.str() + "' carries an unknown value concept");
        }
    }
    if (trace) *trace = local;

    kb.retract(Pattern{plan, vocab::plan_classified_by(), std::nullopt});
    kb.assert_triple(Triple{plan, vocab::plan_classified_by(),
                            label == TypicalityLabel::Typical ? vocab::typical_plan() : vocab::atypical_plan(),
                            holds});
    return label;
}

RunSummary run_all(KnowledgeBase& kb, std::span<const std::string> plans) {
    RunSummary summary;
    for (std::size_t i = 0; i < plans.size(); ++i) {
        for (std::size_t j = i + 1; j < plans.size(); ++j) {
            compare_pair(kb, plans[i], plans[j]);
            ++summary.pairs_compared;
        }
    }
    for (const auto& p : plans) {
        if (classify_plan(kb, p) == TypicalityLabel::Typical) {
            ++summary.typical;
        } else {
            ++summary.atypical;
        }
    }
    return summary;
}

std::vector<std::string> plan_ids(const KnowledgeBase& kb) {
    std::vector<std::string> out;
    for (const auto& t : kb.query(Pattern{std::nullopt, vocab::type(), Object{vocab::plan_class()}})) {
        out.emplace_back(t.subject.local());
    }
    return out;
}

}  // namespace planex::inference
