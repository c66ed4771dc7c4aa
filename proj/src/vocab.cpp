#include "planex/vocab.hpp"

#include "planex/error.hpp"

namespace planex::vocab {

std::string_view to_string(PropertyKind k) {
    switch (k) {
        case PropertyKind::makespan: return "makespan";
        case PropertyKind::num_tasks: return "num_tasks";
        case PropertyKind::cost: return "cost";
    }
    return "?";
}

PropertyKind parse_property_kind(std::string_view s) {
    for (auto k : kPropertyKinds) {
        if (to_string(k) == s) return k;
    }
    throw InvalidArgument("unknown property kind '" + std::string(s) + "'");
}

Term attribution_predicate(PropertyKind k) {
    switch (k) {
        case PropertyKind::makespan: return ocra("hasMakespan");
        case PropertyKind::num_tasks: return ocra("hasNumberOfTasks");
        case PropertyKind::cost: return ocra("hasCost");
    }
    throw InvalidArgument("bad property kind");
}

std::string_view quality_suffix(PropertyKind k) {
    switch (k) {
        case PropertyKind::makespan: return "makespan";
        case PropertyKind::num_tasks: return "number_of_tasks";
        case PropertyKind::cost: return "cost";
    }
    return "";
}

ComparisonPair plan_comparison(PropertyKind k) {
    switch (k) {
        case PropertyKind::cost: return {ocra("isCheaperPlanThan"), ocra("isMoreExpensivePlanThan")};
        case PropertyKind::num_tasks: return {ocra("isShorterPlanThan"), ocra("isLongerPlanThan")};
        case PropertyKind::makespan: return {ocra("isFasterPlanThan"), ocra("isSlowerPlanThan")};
    }
    throw InvalidArgument("bad property kind");
}

ComparisonPair overall_comparison() { return {ocra("isBetterPlanThan"), ocra("isWorsePlanThan")}; }

bool is_plan_comparison(const Term& predicate) {
    for (auto k : kPropertyKinds) {
        auto c = plan_comparison(k);
        if (predicate == c.better || predicate == c.worse) return true;
    }
    auto o = overall_comparison();
    return predicate == o.better || predicate == o.worse;
}

Term plan_term(std::string_view plan_id) { return app(plan_id); }

Term quality_term(std::string_view plan_id, PropertyKind k) {
    std::string local(plan_id);
    local += '_';
    local += quality_suffix(k);
    return app(local);
}

}  // namespace planex::vocab
