#pragma once

// Ontology vocabulary shared by grounding, inference and narration.

#include <array>
#include <string>
#include <string_view>

#include "planex/kstore.hpp"

namespace planex::vocab {

using kstore::Namespace;
using kstore::Term;

inline Term rdf(std::string_view local) { return Term(Namespace::rdf, local); }
inline Term dul(std::string_view local) { return Term(Namespace::dul, local); }
inline Term ocra(std::string_view local) { return Term(Namespace::ocra, local); }
inline Term app(std::string_view local) { return Term(Namespace::app, local); }

inline Term type() { return rdf("type"); }
inline Term plan_class() { return dul("Plan"); }
inline Term quality_class() { return dul("Quality"); }
inline Term is_quality_of() { return dul("isQualityOf"); }
inline Term has_data_value() { return dul("hasDataValue"); }
// Qualities use the spelling isClassifyBy, plans isClassifiedBy.
inline Term quality_classified_by() { return dul("isClassifyBy"); }
inline Term plan_classified_by() { return dul("isClassifiedBy"); }

inline Term typical_quality_value() { return ocra("TypicalPlanQualityValue"); }
inline Term atypical_quality_value() { return ocra("AtypicalPlanQualityValue"); }
inline Term typical_plan() { return ocra("TypicalPlan"); }
inline Term atypical_plan() { return ocra("AtypicalPlan"); }

inline Term better_quality_value() { return ocra("hasBetterQualityValueThan"); }

enum class PropertyKind { makespan, num_tasks, cost };

inline constexpr std::array<PropertyKind, 3> kPropertyKinds = {
    PropertyKind::makespan, PropertyKind::num_tasks, PropertyKind::cost};

std::string_view to_string(PropertyKind k);
PropertyKind parse_property_kind(std::string_view s);

// Links a plan to its quality entity of the given kind ("has makespan").
Term attribution_predicate(PropertyKind k);
// Suffix of the quality entity name: Plan_X -> Plan_X_makespan.
std::string_view quality_suffix(PropertyKind k);

// Plan-level comparison predicates; `better` points from the plan with the
// lower value to the one with the higher value.
struct ComparisonPair {
    Term better;
    Term worse;
};
ComparisonPair plan_comparison(PropertyKind k);
ComparisonPair overall_comparison();

// True for any of the eight plan-level comparison predicates.
bool is_plan_comparison(const Term& predicate);

Term plan_term(std::string_view plan_id);
Term quality_term(std::string_view plan_id, PropertyKind k);

}  // namespace planex::vocab
