#pragma once

// Rule layer over the store: pairwise quality/plan comparisons and the
// typical-plan rule (a plan is typical iff all of its qualities are).

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "planex/kstore.hpp"
#include "planex/typicality.hpp"

namespace planex::inference {

// Asserts hasBetterQualityValueThan for every property whose values differ,
// the directed plan-level predicate and its inverse, and isBetterPlanThan /
// isWorsePlanThan under strict Pareto dominance (lower is better for all
// three properties). Returns every triple it asserted.
std::vector<kstore::Triple> compare_pair(kstore::KnowledgeBase& kb, std::string_view a, std::string_view b);

// Instrumentation for the typical-plan rule.
struct RuleTrace {
    std::size_t qualities = 0;  // m, the qualities the plan has
    std::size_t inspected = 0;  // how many were looked at before deciding
};

typicality::TypicalityLabel classify_plan(kstore::KnowledgeBase& kb, std::string_view plan_id,
                                          RuleTrace* trace = nullptr);

struct RunSummary {
    std::size_t pairs_compared = 0;
    std::size_t typical = 0;
    std::size_t atypical = 0;
};

RunSummary run_all(kstore::KnowledgeBase& kb, std::span<const std::string> plans);

// Local names of every rdf:type dul:Plan subject, in store order.
std::vector<std::string> plan_ids(const kstore::KnowledgeBase& kb);

}  // namespace planex::inference
