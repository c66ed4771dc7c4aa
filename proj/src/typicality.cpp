#include "planex/typicality.hpp"

#include <algorithm>
#include <cmath>

#include "planex/error.hpp"
#include "planex/simd/kernels.hpp"

namespace planex::typicality {

using kstore::Object;
using kstore::Pattern;
using kstore::Triple;
using vocab::PropertyKind;

std::size_t window_size(double alpha, std::size_t n) {
    const double prod = alpha * static_cast<double>(n);
    const double nearest = std::round(prod);
    double k = std::abs(prod - nearest) <= 1e-9 * std::max(1.0, prod) ? nearest : std::ceil(prod);
    k = std::clamp(k, 1.0, static_cast<double>(n));
    return static_cast<std::size_t>(k);
}

HdiInterval empirical_hdi(std::span<const double> sample, double alpha) {
    if (sample.empty()) throw InvalidArgument("HDI of an empty sample");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("HDI mass alpha must lie in (0, 1)");
    if (!std::all_of(sample.begin(), sample.end(), [](double v) { return std::isfinite(v); })) {
        throw InvalidArgument("HDI sample contains a non-finite value");
    }

    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t k = window_size(alpha, sorted.size());
    const std::size_t start = simd::min_width_window(sorted, k);

    HdiInterval iv;
    iv.lo = sorted[start];
    iv.hi = sorted[start + k - 1];
    iv.k = k;
    iv.n = sorted.size();
    iv.alpha = alpha;
    return iv;
}

TypicalityLabel classify_value(const HdiInterval& iv, double v) {
    if (!std::isfinite(v)) throw InvalidArgument("cannot classify a non-finite value");
    return iv.contains(v) ? TypicalityLabel::Typical : TypicalityLabel::Atypical;
}

std::map<PropertyKind, HdiInterval> classify_corpus(kstore::KnowledgeBase& kb,
                                                    std::span<const experiences::PlanProperties> props,
                                                    double alpha) {
    if (props.empty()) throw InvalidArgument("cannot classify an empty corpus");

    std::map<PropertyKind, HdiInterval> out;
    for (auto kind : vocab::kPropertyKinds) {
        std::vector<double> sample;
        sample.reserve(props.size());
        for (const auto& p : props) sample.push_back(p.value(kind));
        auto iv = empirical_hdi(sample, alpha);
        iv.property = kind;
        out.emplace(kind, iv);
    }

    for (const auto& p : props) {
        const auto plan = vocab::plan_term(p.plan_id);
        for (auto kind : vocab::kPropertyKinds) {
            const auto quality = vocab::quality_term(p.plan_id, kind);
            if (!kb.contains(Triple{quality, vocab::is_quality_of(), plan})) {
                throw DataError("store has no " + std::string(vocab::to_string(kind)) + " quality for plan '" +
                                p.plan_id + "'");
            }
            const auto label = classify_value(out.at(kind), p.value(kind));
            const auto concept_term = label == TypicalityLabel::Typical ? vocab::typical_quality_value()
                                                                        : vocab::atypical_quality_value();
            // A quality carries exactly one value concept.
            kb.retract(Pattern{quality, vocab::quality_classified_by(), std::nullopt});
            kb.assert_triple(Triple{quality, vocab::quality_classified_by(), concept_term});
        }
    }
    return out;
}

nlohmann::json to_json(const HdiInterval& iv) {
    nlohmann::json j{{"lo", iv.lo}, {"hi", iv.hi}, {"k", iv.k}, {"n", iv.n}, {"alpha", iv.alpha}};
    if (iv.property) j["property"] = vocab::to_string(*iv.property);
    return j;
}

HdiInterval hdi_from_json(const nlohmann::json& j) {
    try {
        HdiInterval iv;
        iv.lo = j.at("lo").get<double>();
        iv.hi = j.at("hi").get<double>();
        iv.k = j.at("k").get<std::size_t>();
        iv.n = j.at("n").get<std::size_t>();
        iv.alpha = j.at("alpha").get<double>();
        if (auto it = j.find("property"); it != j.end()) {
            iv.property = vocab::parse_property_kind(it->get<std::string>());
        }
        return iv;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("HDI interval: ") + e.what());
    }
}

}  // namespace planex::typicality
