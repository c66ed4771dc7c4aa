#pragma once

// Empirical highest density intervals and typical/atypical labelling of
// plan quality values.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "planex/experiences.hpp"
#include "planex/kstore.hpp"
#include "planex/vocab.hpp"

namespace planex::typicality {

struct HdiInterval {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t k = 0;   // window size, ceil(alpha * n)
    std::size_t n = 0;   // sample size the interval was computed from
    double alpha = 0.0;
    std::optional<vocab::PropertyKind> property;

    bool contains(double v) const { return lo <= v && v <= hi; }
};

enum class TypicalityLabel { Typical, Atypical };

// k = ceil(alpha * n), guarded against alpha * n landing a hair above an
// integer through rounding.
std::size_t window_size(double alpha, std::size_t n);

// Narrowest window of k consecutive order statistics; ties go to the
// leftmost window. Throws InvalidArgument on an empty sample, a non-finite
// value or alpha outside (0, 1).
HdiInterval empirical_hdi(std::span<const double> sample, double alpha);

TypicalityLabel classify_value(const HdiInterval& iv, double v);

// One interval per property kind; labels every quality entity of the listed
// plans in the store with the matching value concept.
std::map<vocab::PropertyKind, HdiInterval> classify_corpus(kstore::KnowledgeBase& kb,
                                                           std::span<const experiences::PlanProperties> props,
                                                           double alpha);

nlohmann::json to_json(const HdiInterval& iv);
HdiInterval hdi_from_json(const nlohmann::json& j);

}  // namespace planex::typicality
