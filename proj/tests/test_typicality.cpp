#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "planex/error.hpp"
#include "planex/experiences.hpp"
#include "planex/typicality.hpp"
#include "support.hpp"

using namespace planex;
using namespace planex::typicality;

namespace {

std::size_t covered(const std::vector<double>& s, const HdiInterval& iv) {
    return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [&](double v) { return iv.contains(v); }));
}

}  // namespace

TEST_SUITE("typicality") {

TEST_CASE("worked HDI examples") {
    const std::vector<double> s{1, 2, 2, 2, 3, 10};
    auto iv = empirical_hdi(s, 0.5);
    CHECK(iv.k == 3);
    CHECK(iv.lo == 2);
    CHECK(iv.hi == 2);
    CHECK(classify_value(iv, 2) == TypicalityLabel::Typical);
    CHECK(classify_value(iv, 10) == TypicalityLabel::Atypical);

    const std::vector<double> one{5};
    iv = empirical_hdi(one, 0.68);
    CHECK(iv.lo == 5);
    CHECK(iv.hi == 5);

    const std::vector<double> two{7, 3};
    iv = empirical_hdi(two, 0.9);
    CHECK(iv.k == 2);
    CHECK(iv.lo == 3);
    CHECK(iv.hi == 7);
    CHECK(classify_value(iv, 7) == TypicalityLabel::Typical);
    CHECK(classify_value(iv, 3) == TypicalityLabel::Typical);

    CHECK(window_size(0.68, 18) == 13);
    CHECK(window_size(0.5, 6) == 3);
    CHECK(window_size(0.3, 10) == 3);  // 0.3 * 10 lands a hair above 3 in binary
    CHECK(window_size(0.7, 10) == 7);
}

TEST_CASE("precondition errors") {
    const std::vector<double> empty;
    const std::vector<double> s{1, 2};
    const std::vector<double> nan{1, std::nan("")};
    CHECK_THROWS_AS(empirical_hdi(empty, 0.5), InvalidArgument);
    CHECK_THROWS_AS(empirical_hdi(s, 0.0), InvalidArgument);
    CHECK_THROWS_AS(empirical_hdi(s, 1.0), InvalidArgument);
    CHECK_THROWS_AS(empirical_hdi(nan, 0.5), InvalidArgument);
    CHECK_THROWS_AS(classify_value(empirical_hdi(s, 0.5), INFINITY), InvalidArgument);
}

TEST_CASE("leftmost window wins width ties") {
    const std::vector<double> s{0, 1, 5, 6, 10, 11};
    auto iv = empirical_hdi(s, 0.3);
    CHECK(iv.k == 2);
    CHECK(iv.lo == 0);
    CHECK(iv.hi == 1);
}

TEST_CASE("matches exhaustive window search on 1000 random samples") {
    std::mt19937_64 rng(11);
    const double alphas[] = {0.3, 0.5, 0.68, 0.9};
    int mismatches = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto n = std::uniform_int_distribution<std::size_t>(1, 50)(rng);
        const double alpha = alphas[i % 4];
        const auto s = testing::random_sample(rng, n);
        const auto got = empirical_hdi(s, alpha);
        const auto want = testing::brute_force_hdi(s, alpha);
        if (got.lo != want.lo || got.hi != want.hi || got.k != want.k) ++mismatches;
        CHECK(covered(s, got) >= got.k);
        CHECK(got.lo <= got.hi);
    }
    CHECK(mismatches == 0);
}

TEST_CASE("coverage at n = 18, alpha = 0.68") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 500; ++i) {
        const auto s = testing::random_sample(rng, 18);
        const auto iv = empirical_hdi(s, 0.68);
        REQUIRE(iv.k == 13);
        REQUIRE(covered(s, iv) >= 13);
    }
}

TEST_CASE("a dominant mode lies inside the interval") {
    std::mt19937_64 rng(9);
    for (int i = 0; i < 200; ++i) {
        const auto n = std::uniform_int_distribution<std::size_t>(4, 40)(rng);
        const double alpha = 0.5;
        const auto k = window_size(alpha, n);
        std::vector<double> s(k, 7.0);  // the mode, repeated k times
        std::uniform_real_distribution<double> other(-50, 50);
        while (s.size() < n) {
            const double v = std::round(other(rng));
            if (v != 7.0) s.push_back(v);
        }
        std::shuffle(s.begin(), s.end(), rng);
        CHECK(empirical_hdi(s, alpha).contains(7.0));
    }
}

TEST_CASE("shift and positive scale carry through") {
    std::mt19937_64 rng(13);
    for (int i = 0; i < 200; ++i) {
        const auto n = std::uniform_int_distribution<std::size_t>(1, 40)(rng);
        // Integer samples and power-of-two scales keep the arithmetic exact.
        std::vector<double> s(n);
        for (auto& v : s) v = std::uniform_int_distribution<int>(-100, 100)(rng);
        const double a = std::ldexp(1.0, std::uniform_int_distribution<int>(-3, 3)(rng));
        const double b = std::uniform_int_distribution<int>(-1000, 1000)(rng);
        std::vector<double> t(n);
        std::transform(s.begin(), s.end(), t.begin(), [&](double v) { return a * v + b; });
        const auto x = empirical_hdi(s, 0.68);
        const auto y = empirical_hdi(t, 0.68);
        CHECK(y.lo == a * x.lo + b);
        CHECK(y.hi == a * x.hi + b);
    }
}

TEST_CASE("a million values finish quickly") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> d(0, 1);
    std::vector<double> s(1'000'000);
    for (auto& v : s) v = d(rng);
    const auto t0 = std::chrono::steady_clock::now();
    const auto iv = empirical_hdi(s, 0.68);
    const auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(secs < 5.0);
    CHECK(iv.lo < 0.0);
    CHECK(iv.hi > 0.0);
}

TEST_CASE("corpus classification labels every quality") {
    SUBCASE("synthetic 18-plan corpus") {
        kstore::KnowledgeBase kb;
        std::vector<experiences::PlanProperties> props;
        for (const auto& r : experiences::generate_synthetic(42, 18, {})) {
            props.push_back(experiences::extract_properties(r));
            experiences::ground_properties(kb, props.back());
        }
        const auto ivs = classify_corpus(kb, props, 0.68);
        REQUIRE(ivs.size() == 3);
        for (const auto& [kind, iv] : ivs) {
            CHECK(iv.k == 13);
            std::size_t in = 0;
            for (const auto& p : props) in += iv.contains(p.value(kind)) ? 1 : 0;
            CHECK(in >= 13);
        }
        CHECK(kb.query({std::nullopt, vocab::quality_classified_by(), std::nullopt}).size() == 54);

        // A second pass replaces the labels; it never stacks them.
        classify_corpus(kb, props, 0.3);
        CHECK(kb.query({std::nullopt, vocab::quality_classified_by(), std::nullopt}).size() == 54);
    }
    SUBCASE("identical plans are all typical with degenerate intervals") {
        kstore::KnowledgeBase kb;
        std::vector<experiences::PlanProperties> props;
        for (int i = 0; i < 4; ++i) {
            props.push_back({"P" + std::to_string(i), 10, 20.5, 2});
            experiences::ground_properties(kb, props.back());
        }
        for (const auto& [kind, iv] : classify_corpus(kb, props, 0.68)) CHECK(iv.lo == iv.hi);
        CHECK(kb.query({std::nullopt, vocab::quality_classified_by(), kstore::Object{vocab::atypical_quality_value()}})
                  .empty());
    }
    SUBCASE("the worked pair alone is all typical") {
        kstore::KnowledgeBase kb;
        std::vector<experiences::PlanProperties> props{{"Plan_X", 12, 28.20, 0}, {"Plan_Y", 18, 40.35, 3}};
        for (const auto& p : props) experiences::ground_properties(kb, p);
        for (const auto& [kind, iv] : classify_corpus(kb, props, 0.68)) CHECK(iv.k == 2);
        CHECK(kb.query({std::nullopt, vocab::quality_classified_by(), kstore::Object{vocab::typical_quality_value()}})
                  .size() == 6);
    }
    SUBCASE("missing qualities are reported") {
        kstore::KnowledgeBase kb;
        std::vector<experiences::PlanProperties> props{{"Ghost", 1, 1.0, 0}};
        CHECK_THROWS_AS(classify_corpus(kb, props, 0.5), DataError);
    }
}

TEST_CASE("interval JSON round trip") {
    const std::vector<double> s{1, 2, 3, 4};
    auto iv = empirical_hdi(s, 0.5);
    iv.property = vocab::PropertyKind::cost;
    const auto back = hdi_from_json(to_json(iv));
    CHECK(back.lo == iv.lo);
    CHECK(back.hi == iv.hi);
    CHECK(back.k == iv.k);
    CHECK(back.property == iv.property);
}

}
