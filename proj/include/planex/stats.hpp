#pragma once

// t-tests, skewness and the two-method summary tables.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "planex/evalmetrics.hpp"

namespace planex::stats {

struct StatTestResult {
    double t = 0.0;
    std::size_t df = 0;
    double p = 1.0;  // two-sided
};

// Regularized incomplete beta I_x(a, b), continued fraction evaluated with
// the modified Lentz method to 1e-15 relative change.
double incomplete_beta(double a, double b, double x);

// P(T <= t) for Student's t with df degrees of freedom.
double student_t_cdf(double t, double df);
// P(|T| >= |t|).
double two_sided_p(double t, double df);

// Throws InvalidArgument on length mismatch, fewer than two pairs, or all
// differences equal to zero.
StatTestResult paired_t(std::span<const double> x, std::span<const double> y);
// Throws InvalidArgument on fewer than two values or zero variance.
StatTestResult one_sample_t(std::span<const double> x, double mu0);

struct Symmetry {
    double skewness = 0.0;  // adjusted Fisher-Pearson
    bool asymmetric = false;  // |skewness| > 1
};

// Throws InvalidArgument on fewer than three values or zero variance.
Symmetry symmetry_check(std::span<const double> d);

enum class Metric { n_words, fres, cosine };
inline constexpr std::array<Metric, 3> kMetrics = {Metric::n_words, Metric::fres, Metric::cosine};
std::string to_string(Metric m);

// One method's metric reports per specificity level (index 0 = level 1),
// aligned by pair id.
struct MethodResults {
    std::string name;
    std::array<std::vector<std::string>, 3> pair_ids;
    std::array<std::vector<evalmetrics::MetricsReport>, 3> reports;
};

struct MeanCell {
    std::string method;
    int level = 1;
    Metric metric = Metric::n_words;
    std::optional<double> mean;  // empty when the method has no value
};

struct TestCell {
    int level = 1;
    Metric metric = Metric::n_words;
    std::string test;  // "paired" or "one-sample"
    std::size_t n = 0;
    std::optional<StatTestResult> result;
    std::optional<Symmetry> symmetry;  // of the paired differences / the sample
    std::string note;                  // why result is empty
};

struct SummaryTable {
    std::string title;
    std::array<std::string, 2> methods;
    std::vector<MeanCell> cells;
    std::vector<TestCell> tests;
    std::optional<double> mu0;
};

// Means for every (method, level, metric); paired t on length and
// readability; for similarity, a paired t when both methods carry it and a
// one-sample t of the second method against mu0 otherwise (mu0 then
// required). Levels where either method has no pairs are skipped. Throws
// InvalidArgument when the pair sets differ or mu0 is needed but missing.
SummaryTable build_summary(std::string title, const MethodResults& first, const MethodResults& second,
                           std::optional<double> mu0);

std::string render_text(const SummaryTable& table);
nlohmann::json to_json(const SummaryTable& table);

}  // namespace planex::stats
