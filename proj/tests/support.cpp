#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "planex/experiences.hpp"
#include "planex/inference.hpp"
#include "planex/vocab.hpp"

namespace planex::testing {

std::filesystem::path fixture(std::string_view name) { return std::filesystem::path(PLANEX_FIXTURES) / name; }

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json read_json(const std::filesystem::path& path) { return nlohmann::json::parse(read_text(path)); }

std::string fixture_text(std::string_view name) {
    auto s = read_text(fixture(name));
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
}

TempDir::TempDir(std::string_view tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            (std::string(tag) + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

kstore::KnowledgeBase worked_pair_store() {
    using vocab::PropertyKind;
    kstore::KnowledgeBase kb;
    experiences::ground_properties(kb, {"Plan_X", 12, 28.20, 0});
    experiences::ground_properties(kb, {"Plan_Y", 18, 40.35, 3});
    for (auto k : vocab::kPropertyKinds) {
        kb.assert_triple({vocab::quality_term("Plan_X", k), vocab::quality_classified_by(),
                          vocab::typical_quality_value()});
        kb.assert_triple({vocab::quality_term("Plan_Y", k), vocab::quality_classified_by(),
                          k == PropertyKind::makespan ? vocab::atypical_quality_value()
                                                      : vocab::typical_quality_value()});
    }
    const std::vector<std::string> ids{"Plan_X", "Plan_Y"};
    inference::run_all(kb, ids);
    return kb;
}

namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
    for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
        s.replace(pos, from.size(), to);
    }
}

std::string display(std::string_view id) {
    std::string s(id);
    std::replace(s.begin(), s.end(), '_', ' ');
    return s;
}

}  // namespace

std::string normalize_ids(std::string text, std::string_view a, std::string_view b) {
    replace_all(text, display(a), "<A>");
    replace_all(text, display(b), "<B>");
    return text;
}

typicality::HdiInterval brute_force_hdi(std::span<const double> sample, double alpha) {
    std::vector<double> s(sample.begin(), sample.end());
    std::sort(s.begin(), s.end());
    const auto n = s.size();
    // alpha to three decimals, k = ceil(permille * n / 1000) in integers.
    const auto permille = static_cast<std::size_t>(std::llround(alpha * 1000.0));
    const auto k = std::clamp<std::size_t>((permille * n + 999) / 1000, 1, n);
    std::size_t best = 0;
    for (std::size_t i = 1; i + k <= n; ++i) {
        if (s[i + k - 1] - s[i] < s[best + k - 1] - s[best]) best = i;
    }
    typicality::HdiInterval iv;
    iv.lo = s[best];
    iv.hi = s[best + k - 1];
    iv.k = k;
    iv.n = n;
    iv.alpha = alpha;
    return iv;
}

std::vector<double> random_sample(std::mt19937_64& rng, std::size_t n) {
    std::vector<double> out(n);
    if (std::uniform_int_distribution<int>(0, 1)(rng) == 0) {
        std::uniform_int_distribution<int> grid(0, 12);
        for (auto& v : out) v = grid(rng);
    } else {
        std::normal_distribution<double> spread(30.0, 6.0);
        for (auto& v : out) v = std::round(spread(rng) * 100.0) / 100.0;
    }
    return out;
}

}  // namespace planex::testing
