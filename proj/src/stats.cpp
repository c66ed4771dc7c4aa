#include "planex/stats.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "planex/error.hpp"
#include "planex/simd/kernels.hpp"

namespace planex::stats {

namespace {

constexpr double kEps = 1e-15;
constexpr double kTiny = 1e-300;
constexpr int kMaxIter = 10000;

// Continued fraction for I_x(a, b) (Numerical Recipes form).
double beta_cf(double a, double b, double x) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    throw Error("incomplete beta: continued fraction did not converge");
}

double mean_of(std::span<const double> x) { return simd::sum(x) / static_cast<double>(x.size()); }

// Sample standard deviation with N-1 in the denominator.
double sample_sd(std::span<const double> x, double mean) {
    const auto m = simd::central_moments(x, mean);
    return std::sqrt(m.m2 / static_cast<double>(x.size() - 1));
}

StatTestResult finish(double t, std::size_t n) {
    const auto df = n - 1;
    return {t, df, two_sided_p(t, static_cast<double>(df))};
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw InvalidArgument("incomplete beta: a and b must be positive");
    if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("incomplete beta: x must lie in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double two_sided_p(double t, double df) {
    if (!(df > 0.0)) throw InvalidArgument("t distribution: df must be positive");
    if (std::isnan(t)) throw InvalidArgument("t distribution: t is NaN");
    if (std::isinf(t)) return 0.0;
    const double p = incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
    return std::clamp(p, 0.0, 1.0);
}

double student_t_cdf(double t, double df) {
    const double tail = two_sided_p(t, df) / 2.0;
    return t < 0.0 ? tail : 1.0 - tail;
}

StatTestResult paired_t(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw InvalidArgument("paired t: samples differ in length");
    if (x.size() < 2) throw InvalidArgument("paired t: need at least two pairs");
    std::vector<double> d(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - y[i];
    if (std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; })) {
        throw InvalidArgument("paired t: all differences are zero");
    }
    const double m = mean_of(d);
    const double sd = sample_sd(d, m);
    const double se = sd / std::sqrt(static_cast<double>(d.size()));
    const double t = se == 0.0 ? std::copysign(std::numeric_limits<double>::infinity(), m) : m / se;
    return finish(t, d.size());
}

StatTestResult one_sample_t(std::span<const double> x, double mu0) {
    if (x.size() < 2) throw InvalidArgument("one-sample t: need at least two values");
    const double m = mean_of(x);
    const double sd = sample_sd(x, m);
    if (!(sd > 0.0)) throw InvalidArgument("one-sample t: zero variance");
    return finish((m - mu0) / (sd / std::sqrt(static_cast<double>(x.size()))), x.size());
}

Symmetry symmetry_check(std::span<const double> d) {
    if (d.size() < 3) throw InvalidArgument("skewness: need at least three values");
    const double n = static_cast<double>(d.size());
    const double m = mean_of(d);
    const auto mom = simd::central_moments(d, m);
    const double m2 = mom.m2 / n;
    const double m3 = mom.m3 / n;
    if (!(m2 > 0.0)) throw InvalidArgument("skewness: zero variance");
    const double g1 = m3 / std::pow(m2, 1.5);
    const double skew = std::sqrt(n * (n - 1.0)) / (n - 2.0) * g1;
    return {skew, std::fabs(skew) > 1.0};
}

std::string to_string(Metric m) {
    switch (m) {
        case Metric::n_words: return "n_words";
        case Metric::fres: return "fres";
        case Metric::cosine: return "cosine";
    }
    return "";
}

namespace {

std::vector<double> column(const std::vector<evalmetrics::MetricsReport>& reports, Metric m) {
    std::vector<double> out;
    out.reserve(reports.size());
    for (const auto& r : reports) {
        switch (m) {
            case Metric::n_words: out.push_back(static_cast<double>(r.n_words)); break;
            case Metric::fres: out.push_back(r.fres); break;
            case Metric::cosine:
                if (!r.cosine) return {};
                out.push_back(*r.cosine);
                break;
        }
    }
    return out;
}

std::optional<double> mean_or_none(const std::vector<double>& v) {
    if (v.empty()) return std::nullopt;
    return simd::sum(v) / static_cast<double>(v.size());
}

}  // namespace

SummaryTable build_summary(std::string title, const MethodResults& first, const MethodResults& second,
                           std::optional<double> mu0) {
    SummaryTable table;
    table.title = std::move(title);
    table.methods = {first.name, second.name};
    table.mu0 = mu0;

    for (int level = 1; level <= 3; ++level) {
        const auto li = static_cast<std::size_t>(level - 1);
        if (first.reports[li].size() != first.pair_ids[li].size() ||
            second.reports[li].size() != second.pair_ids[li].size()) {
            throw InvalidArgument("summary: reports and pair ids differ in length at level " + std::to_string(level));
        }
        if (first.pair_ids[li].empty() && second.pair_ids[li].empty()) continue;
        if (first.pair_ids[li] != second.pair_ids[li]) {
            throw InvalidArgument("summary: methods were evaluated on different pairs at level " +
                                  std::to_string(level));
        }

        for (auto metric : kMetrics) {
            const auto xs = column(first.reports[li], metric);
            const auto ys = column(second.reports[li], metric);
            table.cells.push_back({first.name, level, metric, mean_or_none(xs)});
            table.cells.push_back({second.name, level, metric, mean_or_none(ys)});

            TestCell test;
            test.level = level;
            test.metric = metric;
            test.n = first.pair_ids[li].size();
            try {
                if (!xs.empty() && !ys.empty()) {
                    test.test = "paired";
                    std::vector<double> d(xs.size());
                    for (std::size_t i = 0; i < d.size(); ++i) d[i] = xs[i] - ys[i];
                    test.result = paired_t(xs, ys);
                    if (d.size() >= 3) test.symmetry = symmetry_check(d);
                } else if (!ys.empty()) {
                    test.test = "one-sample";
                    if (!mu0) throw InvalidArgument("summary: mu0 is required for the one-sample similarity test");
                    test.result = one_sample_t(ys, *mu0);
                    if (ys.size() >= 3) test.symmetry = symmetry_check(ys);
                } else {
                    test.test = "none";
                    test.note = "no values";
                }
            } catch (const InvalidArgument& e) {
                const std::string what = e.what();
                if (what.find("mu0") != std::string::npos) throw;
                if (what.find("all differences are zero") != std::string::npos) {
                    test.note = "no difference";
                } else if (what.find("zero variance") != std::string::npos) {
                    test.note = test.result ? "" : "zero variance";
                } else {
                    test.note = what;
                }
            }
            table.tests.push_back(std::move(test));
        }
    }
    return table;
}

namespace {

std::string fmt(double v, int places) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(places) << v;
    return os.str();
}

std::string format_mean(Metric m, const std::optional<double>& v) {
    if (!v) return "-";
    return fmt(*v, m == Metric::cosine ? 4 : 1);
}

std::string format_p(double p) { return p < 0.001 ? "<.001" : fmt(p, 3); }

std::string pad(const std::string& s, std::size_t width, bool left = false) {
    if (s.size() >= width) return s;
    return left ? s + std::string(width - s.size(), ' ') : std::string(width - s.size(), ' ') + s;
}

std::string label(Metric m) {
    switch (m) {
        case Metric::n_words: return "N_w";
        case Metric::fres: return "R_fres";
        case Metric::cosine: return "S_cs";
    }
    return "";
}

}  // namespace

std::string render_text(const SummaryTable& table) {
    std::vector<int> levels;
    for (const auto& c : table.cells) {
        if (std::find(levels.begin(), levels.end(), c.level) == levels.end()) levels.push_back(c.level);
    }
    auto find_cell = [&](const std::string& method, int level, Metric m) -> std::optional<double> {
        for (const auto& c : table.cells) {
            if (c.method == method && c.level == level && c.metric == m) return c.mean;
        }
        return std::nullopt;
    };

    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header{"Metric"};
    for (const auto& method : table.methods) {
        for (int l : levels) header.push_back(method + " L" + std::to_string(l));
    }
    rows.push_back(header);
    for (auto m : kMetrics) {
        std::vector<std::string> row{label(m)};
        for (const auto& method : table.methods) {
            for (int l : levels) row.push_back(format_mean(m, find_cell(method, l, m)));
        }
        rows.push_back(row);
    }

    std::vector<std::vector<std::string>> trows;
    std::vector<std::string> theader{"Test"};
    for (int l : levels) theader.push_back("L" + std::to_string(l));
    trows.push_back(theader);
    for (auto m : kMetrics) {
        std::vector<std::string> row{label(m)};
        for (int l : levels) {
            std::string cell = "-";
            for (const auto& t : table.tests) {
                if (t.level != l || t.metric != m) continue;
                if (t.result) {
                    cell = "[t(" + std::to_string(t.result->df) + ")=" + fmt(t.result->t, 2) + ", p" +
                           (t.result->p < 0.001 ? "" : "=") + format_p(t.result->p) + "]";
                    if (t.test == "one-sample") cell += " 1s";
                } else if (!t.note.empty()) {
                    cell = t.note;
                }
            }
            row.push_back(cell);
        }
        trows.push_back(row);
    }

    auto render = [](const std::vector<std::vector<std::string>>& rs) {
        std::vector<std::size_t> widths;
        for (const auto& r : rs) {
            widths.resize(std::max(widths.size(), r.size()), 0);
            for (std::size_t i = 0; i < r.size(); ++i) widths[i] = std::max(widths[i], r[i].size());
        }
        std::string out;
        for (std::size_t ri = 0; ri < rs.size(); ++ri) {
            std::string line;
            for (std::size_t i = 0; i < rs[ri].size(); ++i) {
                if (i) line += "  ";
                line += pad(rs[ri][i], widths[i], i == 0);
            }
            while (!line.empty() && line.back() == ' ') line.pop_back();
            out += line + "\n";
            if (ri == 0) {
                std::size_t total = 0;
                for (auto w : widths) total += w;
                out += std::string(total + 2 * (widths.size() - 1), '-') + "\n";
            }
        }
        return out;
    };

    std::string out = table.title + "\n\n" + render(rows) + "\n" + render(trows);
    if (table.mu0) out += "S_cs one-sample null mu0 = " + fmt(*table.mu0, 4) + "\n";
    return out;
}

nlohmann::json to_json(const SummaryTable& table) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : table.cells) {
        cells.push_back({{"method", c.method},
                         {"specificity", c.level},
                         {"metric", to_string(c.metric)},
                         {"mean", c.mean ? nlohmann::json(*c.mean) : nlohmann::json(nullptr)}});
    }
    nlohmann::json tests = nlohmann::json::array();
    for (const auto& t : table.tests) {
        nlohmann::json j{{"specificity", t.level}, {"metric", to_string(t.metric)}, {"test", t.test}, {"n", t.n}};
        if (t.result) {
            j["t"] = t.result->t;
            j["df"] = t.result->df;
            j["p"] = t.result->p;
        } else {
            j["t"] = nullptr;
            j["df"] = nullptr;
            j["p"] = nullptr;
        }
        j["skewness"] = t.symmetry ? nlohmann::json(t.symmetry->skewness) : nlohmann::json(nullptr);
        j["asymmetric"] = t.symmetry ? nlohmann::json(t.symmetry->asymmetric) : nlohmann::json(nullptr);
        if (!t.note.empty()) j["note"] = t.note;
        tests.push_back(std::move(j));
    }
    return {{"title", table.title},
            {"methods", table.methods},
            {"mu0", table.mu0 ? nlohmann::json(*table.mu0) : nlohmann::json(nullptr)},
            {"cells", cells},
            {"tests", tests}};
}

}  // namespace planex::stats
