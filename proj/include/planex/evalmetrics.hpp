#pragma once

// Explanation metrics: length in words, Flesch Reading Ease, and cosine
// similarity of stop-word-filtered token count vectors.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

namespace planex::evalmetrics {

// Highest attainable score: one one-syllable word per sentence.
inline constexpr double kFresCeiling = 206.835 - 1.015 - 84.6;

// A word is a maximal run of non-whitespace holding at least one ASCII
// letter or digit; pure punctuation runs do not count.
std::size_t word_count(std::string_view text);

struct TextCounts {
    std::size_t words = 0;
    std::size_t sentences = 0;
    std::size_t syllables = 0;
};

// Sentences end at '.', '!' or '?' followed by whitespace or end of text
// (at least one sentence). Syllables per word: vowel groups over aeiouy,
// minus one for a silent final 'e' (also in "-es"/"-ed" endings) unless that
// would leave none, corrected for common vowel hiatus spellings ("trial");
// at least one. Tokens without letters (numbers) count as one syllable.
TextCounts text_counts(std::string_view text);
std::size_t syllables(std::string_view word);

// 206.835 - 1.015 * words/sentences - 84.6 * syllables/words.
// Throws InvalidArgument when the text has no words.
double fres(std::string_view text);

class StopWords {
public:
    // The bundled English list.
    static const StopWords& english();
    // One word per line; blank lines and '#' comments ignored.
    static StopWords load(const std::filesystem::path& path);
    static StopWords from_words(const std::vector<std::string>& words);

    bool contains(std::string_view word) const;
    std::size_t size() const { return words_.size(); }
    std::vector<std::string> sorted() const;

private:
    std::unordered_set<std::string> words_;
};

// Lowercased runs of letters and digits; a '.' or ',' between two digits is
// kept, so "28.20" is one token. Stop words are dropped.
std::vector<std::string> content_tokens(std::string_view text, const StopWords& stop = StopWords::english());

// Cosine of the two token count vectors over their joint vocabulary.
// Throws InvalidArgument when both vectors are zero after filtering.
double cosine_similarity(std::string_view a, std::string_view b, const StopWords& stop = StopWords::english());

struct MetricsReport {
    std::size_t n_words = 0;
    double fres = 0.0;
    std::optional<double> cosine;
};

// Length and readability of the explanation plus its similarity to the
// narrative it came from.
MetricsReport report(std::string_view narrative, std::string_view explanation,
                     const StopWords& stop = StopWords::english());

nlohmann::json to_json(const MetricsReport& r);

}  // namespace planex::evalmetrics
