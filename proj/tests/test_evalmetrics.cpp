#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include "planex/error.hpp"
#include "planex/evalmetrics.hpp"
#include "support.hpp"

using namespace planex;
using namespace planex::evalmetrics;

namespace {

double brute_cosine(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::map<std::string, long double> ca;
    std::map<std::string, long double> cb;
    for (const auto& w : a) {
        if (!StopWords::english().contains(w)) ca[w] += 1;
    }
    for (const auto& w : b) {
        if (!StopWords::english().contains(w)) cb[w] += 1;
    }
    long double dot = 0;
    long double na = 0;
    long double nb = 0;
    for (const auto& [w, c] : ca) {
        na += c * c;
        auto it = cb.find(w);
        if (it != cb.end()) dot += c * it->second;
    }
    for (const auto& [w, c] : cb) nb += c * c;
    if (na == 0 || nb == 0) return 0.0;
    return static_cast<double>(dot / std::sqrt(na * nb));
}

std::string join(const std::vector<std::string>& words) {
    std::string s;
    for (const auto& w : words) {
        if (!s.empty()) s += ' ';
        s += w;
    }
    return s;
}

}  // namespace

TEST_SUITE("evalmetrics") {

TEST_CASE("word count") {
    CHECK(word_count("Plan X is cheaper.") == 4);
    CHECK(word_count("") == 0);
    CHECK(word_count("  -- ; ...  ") == 0);
    CHECK(word_count("costs 28.20 units") == 3);
    const auto golden = testing::read_json(testing::fixture("word_counts.json"));
    CHECK(word_count(testing::fixture_text("worked_example_l3.txt")) == golden["worked_example_l3"]);
    CHECK(word_count(testing::fixture_text("worked_example_explanation.txt")) == golden["worked_example_explanation"]);

    std::mt19937_64 rng(2);
    const std::vector<std::string> vocab{"plan", "x", "is", "cheaper", "28.20", "while", "a1"};
    for (int i = 0; i < 200; ++i) {
        std::vector<std::string> a;
        std::vector<std::string> b;
        for (int k = rng() % 8; k > 0; --k) a.push_back(vocab[rng() % vocab.size()]);
        for (int k = rng() % 8; k > 0; --k) b.push_back(vocab[rng() % vocab.size()]);
        CHECK(word_count(join(a) + " " + join(b)) == word_count(join(a)) + word_count(join(b)));
    }
}

TEST_CASE("syllables") {
    CHECK(syllables("go") == 1);
    CHECK(syllables("cheaper") == 2);
    CHECK(syllables("take") == 1);
    CHECK(syllables("the") == 1);
    CHECK(syllables("28.20") == 1);
    CHECK(syllables("asked") == 1);
    CHECK(syllables("wanted") == 2);
    CHECK(syllables("takes") == 1);
    CHECK(syllables("boxes") == 2);
    CHECK(syllables("little") == 2);
    CHECK(syllables("trial") == 2);
    CHECK(syllables("explanation") == 4);
}

TEST_CASE("reading ease") {
    CHECK(kFresCeiling == doctest::Approx(121.22).epsilon(1e-12));
    CHECK(std::fabs(fres("Go. Run. Sit.") - 121.22) < 1e-6);
    CHECK(std::fabs(fres("The cat sat on the mat.") - 116.145) < 1e-9);
    CHECK_THROWS_AS(fres(""), InvalidArgument);
    CHECK_THROWS_AS(fres("..."), InvalidArgument);
    const auto c = text_counts("One. Two! Three? 28.20 units");
    CHECK(c.sentences == 3);
    CHECK(c.words == 5);
}

TEST_CASE("reading ease agrees with the frozen reference scores") {
    const auto ref = testing::read_json(testing::fixture("fres_reference.json"));
    REQUIRE(ref["texts"].size() == 10);
    for (const auto& t : ref["texts"]) {
        const auto text = t["text"].get<std::string>();
        INFO(text);
        CHECK(std::fabs(fres(text) - t["fres"].get<double>()) <= 2.0);
    }
}

TEST_CASE("reading ease is unchanged by repeating the text and never exceeds the ceiling") {
    const auto ref = testing::read_json(testing::fixture("fres_reference.json"));
    for (const auto& t : ref["texts"]) {
        const auto text = t["text"].get<std::string>();
        CHECK(std::fabs(fres(text + " " + text) - fres(text)) < 1e-9);
    }
    std::mt19937_64 rng(4);
    const std::vector<std::string> words{"go", "run", "explanation", "a", "plan", "cheaper", "Sit.", "typical.", "x!"};
    for (int i = 0; i < 500; ++i) {
        std::vector<std::string> w;
        for (int k = 1 + rng() % 20; k > 0; --k) w.push_back(words[rng() % words.size()]);
        const auto text = join(w);
        CHECK(fres(text) <= kFresCeiling + 1e-9);
        // Repeating only preserves the ratios when the text closes its last sentence.
        const auto closed = text + ".";
        CHECK(std::fabs(fres(closed + " " + closed) - fres(closed)) < 1e-9);
    }
}

TEST_CASE("content tokens") {
    const auto t = content_tokens("Plan X takes 28.20 time units, and costs 0.");
    CHECK(t == std::vector<std::string>{"plan", "x", "takes", "28.20", "time", "units", "costs", "0"});
}

TEST_CASE("cosine similarity") {
    CHECK(cosine_similarity("plan x cheaper faster", "plan x cheaper faster") == doctest::Approx(1.0));
    CHECK(cosine_similarity("plan cheaper", "robot slower") == 0.0);
    CHECK(std::fabs(cosine_similarity("plan x cheaper faster", "plan x cheaper slower") - 0.75) < 1e-12);
    CHECK_THROWS_AS(cosine_similarity("the and of", "is a"), InvalidArgument);
    CHECK(cosine_similarity("the and of", "plan") == 0.0);
}

TEST_CASE("cosine matches a brute-force dot product on 1000 random word bags") {
    std::mt19937_64 rng(17);
    const std::vector<std::string> vocab{"plan", "cheaper", "faster", "shorter", "typical", "atypical", "makespan",
                                         "cost", "tasks", "28.20", "40.35", "12", "x", "y", "the", "and", "is",
                                         "while", "has", "than", "robot", "value"};
    int worst = 0;
    for (int i = 0; i < 1000; ++i) {
        std::vector<std::string> a;
        std::vector<std::string> b;
        for (int k = 1 + rng() % 30; k > 0; --k) a.push_back(vocab[rng() % vocab.size()]);
        for (int k = 1 + rng() % 30; k > 0; --k) b.push_back(vocab[rng() % vocab.size()]);
        const auto ta = join(a);
        const auto tb = join(b);
        double got = 0.0;
        try {
            got = cosine_similarity(ta, tb);
        } catch (const InvalidArgument&) {
            CHECK(brute_cosine(a, b) == 0.0);
            continue;
        }
        if (std::fabs(got - brute_cosine(a, b)) > 1e-9) ++worst;
        CHECK(got == doctest::Approx(cosine_similarity(tb, ta)).epsilon(1e-12));
        CHECK(got >= 0.0);
        CHECK(got <= 1.0);
    }
    CHECK(worst == 0);
}

TEST_CASE("report") {
    const auto narrative = testing::fixture_text("worked_example_l3.txt");
    const auto explanation = testing::fixture_text("worked_example_explanation.txt");
    const auto r = report(narrative, explanation);
    CHECK(r.n_words == 47);
    REQUIRE(r.cosine.has_value());
    CHECK(*r.cosine > 0.5);
    CHECK(*report("plan x", "plan x").cosine == doctest::Approx(1.0));
    CHECK_FALSE(report("", "plan x").cosine.has_value());
    CHECK_THROWS_AS(report(narrative, ""), InvalidArgument);
    const auto j = to_json(report("", "Go."));
    CHECK(j["cosine"].is_null());
    CHECK(j["n_words"] == 1);
}

TEST_CASE("stop-word list") {
    const auto& en = StopWords::english();
    CHECK(en.size() >= 100);
    CHECK(en.size() <= 150);
    CHECK(en.contains("the"));
    CHECK_FALSE(en.contains("plan"));
    testing::TempDir dir;
    {
        std::ofstream out(dir.path() / "stop.txt");
        out << "# custom\nPlan\n\nrobot\n";
    }
    const auto custom = StopWords::load(dir.path() / "stop.txt");
    CHECK(custom.size() == 2);
    CHECK(custom.contains("plan"));
    CHECK(content_tokens("Plan the robot", custom) == std::vector<std::string>{"the"});
    CHECK_THROWS_AS(StopWords::load(dir.path() / "nope.txt"), DataError);
}

}
