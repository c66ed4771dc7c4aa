#include "planex/evalmetrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <regex>

#include "planex/error.hpp"
#include "planex/simd/kernels.hpp"

namespace planex::evalmetrics {

namespace detail {
extern const std::string_view kBundledStopWords;
}

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

bool is_vowel(char c) {
    switch (c) {
        case 'a': case 'e': case 'i': case 'o': case 'u': case 'y': return true;
        default: return false;
    }
}

bool ends_with(std::string_view s, std::string_view tail) {
    return s.size() >= tail.size() && s.substr(s.size() - tail.size()) == tail;
}

// Whether the word ends in an 'e' that forms its own vowel group but is not
// pronounced: "take", "takes", "asked". Consonant + "le(s)" stays syllabic
// ("little"), and so does the 'e' of "-es" after a sibilant ("boxes") and of
// "-ed" after t or d ("wanted").
bool silent_final_e(std::string_view w) {
    char suffix = 0;
    if (ends_with(w, "es")) {
        suffix = 's';
    } else if (ends_with(w, "ed")) {
        suffix = 'd';
    } else if (!ends_with(w, "e")) {
        return false;
    }
    const std::size_t e = w.size() - (suffix ? 2 : 1);
    if (e < 2 || is_vowel(w[e - 1])) return false;
    const char before = w[e - 1];
    if (before == 'l' && !is_vowel(w[e - 2])) return false;
    if (suffix == 's' && std::string_view("sxzcgh").find(before) != std::string_view::npos) return false;
    if (suffix == 'd' && (before == 't' || before == 'd')) return false;
    return true;
}

// Vowel pairs the group count merges although they are spoken as two
// syllables ("trial", "audience"), and spellings where it splits one.
int hiatus_adjustment(const std::string& w) {
    static const std::vector<std::regex> add = [] {
        std::vector<std::regex> r;
        for (const char* p : {"ia", "riet", "dien", "iu", "io", "ii", "[aeiou]{3}", "^mc", "ism$", "[^l]lien",
                              "^coa[dglx].", "[^gq]ua[^auieo]", "dnt$"}) {
            r.emplace_back(p, std::regex::optimize);
        }
        return r;
    }();
    static const std::vector<std::regex> sub = [] {
        std::vector<std::regex> r;
        for (const char* p : {"cial", "tia", "cius", "cious", "giu", "ion", "iou", "sia$", ".ely$"}) {
            r.emplace_back(p, std::regex::optimize);
        }
        return r;
    }();
    int n = 0;
    for (const auto& r : add) n += std::regex_search(w, r) ? 1 : 0;
    for (const auto& r : sub) n -= std::regex_search(w, r) ? 1 : 0;
    return n;
}

// Calls fn(word) for each whitespace-delimited run holding an alphanumeric.
template <class Fn>
void for_each_word(std::string_view text, Fn&& fn) {
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        const std::size_t begin = i;
        bool has_alnum = false;
        while (i < text.size() && !is_space(text[i])) {
            has_alnum = has_alnum || is_alnum(text[i]);
            ++i;
        }
        if (i > begin && has_alnum) fn(text.substr(begin, i - begin));
    }
}

StopWords parse_list(std::string_view body) {
    std::vector<std::string> words;
    std::size_t pos = 0;
    while (pos <= body.size()) {
        auto nl = body.find('\n', pos);
        auto line = body.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        while (!line.empty() && is_space(line.back())) line.remove_suffix(1);
        while (!line.empty() && is_space(line.front())) line.remove_prefix(1);
        if (!line.empty() && line.front() != '#') words.emplace_back(line);
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    return StopWords::from_words(words);
}

}  // namespace

std::size_t word_count(std::string_view text) {
    std::size_t n = 0;
    for_each_word(text, [&](std::string_view) { ++n; });
    return n;
}

std::size_t syllables(std::string_view word) {
    std::string letters;
    for (char c : word) {
        if (std::isalpha(static_cast<unsigned char>(c))) letters += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    if (letters.empty()) return 1;
    std::size_t groups = 0;
    bool in_group = false;
    for (char c : letters) {
        const bool v = is_vowel(c);
        if (v && !in_group) ++groups;
        in_group = v;
    }
    if (groups > 1 && silent_final_e(letters)) --groups;
    const auto n = static_cast<long>(groups) + hiatus_adjustment(letters);
    return static_cast<std::size_t>(std::max<long>(n, 1));
}

TextCounts text_counts(std::string_view text) {
    TextCounts c;
    for_each_word(text, [&](std::string_view w) {
        ++c.words;
        c.syllables += syllables(w);
    });
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if ((ch == '.' || ch == '!' || ch == '?') && (i + 1 == text.size() || is_space(text[i + 1]))) ++c.sentences;
    }
    c.sentences = std::max<std::size_t>(c.sentences, 1);
    return c;
}

double fres(std::string_view text) {
    const auto c = text_counts(text);
    if (c.words == 0) throw InvalidArgument("FRES of a text without words");
    const double words = static_cast<double>(c.words);
    return 206.835 - 1.015 * (words / static_cast<double>(c.sentences)) -
           84.6 * (static_cast<double>(c.syllables) / words);
}

const StopWords& StopWords::english() {
    static const StopWords list = parse_list(detail::kBundledStopWords);
    return list;
}

StopWords StopWords::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open stop-word list " + path.string());
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_list(body);
}

StopWords StopWords::from_words(const std::vector<std::string>& words) {
    StopWords s;
    for (const auto& w : words) {
        std::string lower;
        for (char c : w) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        s.words_.insert(std::move(lower));
    }
    return s;
}

bool StopWords::contains(std::string_view word) const { return words_.count(std::string(word)) > 0; }

std::vector<std::string> StopWords::sorted() const {
    std::vector<std::string> out(words_.begin(), words_.end());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> content_tokens(std::string_view text, const StopWords& stop) {
    std::vector<std::string> out;
    std::string current;
    auto flush = [&] {
        if (!current.empty() && !stop.contains(current)) out.push_back(current);
        current.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (is_alnum(c)) {
            current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if ((c == '.' || c == ',') && !current.empty() && is_digit(current.back()) && i + 1 < text.size() &&
                   is_digit(text[i + 1])) {
            current += c;
        } else {
            flush();
        }
    }
    flush();
    return out;
}

double cosine_similarity(std::string_view a, std::string_view b, const StopWords& stop) {
    std::map<std::string, std::pair<double, double>> counts;
    for (auto& t : content_tokens(a, stop)) counts[std::move(t)].first += 1.0;
    for (auto& t : content_tokens(b, stop)) counts[std::move(t)].second += 1.0;

    std::vector<double> va;
    std::vector<double> vb;
    va.reserve(counts.size());
    vb.reserve(counts.size());
    for (const auto& [token, c] : counts) {
        va.push_back(c.first);
        vb.push_back(c.second);
    }
    const double na = simd::dot(va, va);
    const double nb = simd::dot(vb, vb);
    if (na == 0.0 && nb == 0.0) throw InvalidArgument("cosine similarity: both texts are empty after stop-word removal");
    if (na == 0.0 || nb == 0.0) return 0.0;
    const double c = simd::dot(va, vb) / std::sqrt(na * nb);
    return std::clamp(c, 0.0, 1.0);
}

MetricsReport report(std::string_view narrative, std::string_view explanation, const StopWords& stop) {
    MetricsReport r;
    r.n_words = word_count(explanation);
    if (r.n_words == 0) throw InvalidArgument("cannot score an explanation without words");
    r.fres = fres(explanation);
    if (!narrative.empty()) r.cosine = cosine_similarity(narrative, explanation, stop);
    return r;
}

nlohmann::json to_json(const MetricsReport& r) {
    nlohmann::json j{{"n_words", r.n_words}, {"fres", r.fres}};
    j["cosine"] = r.cosine ? nlohmann::json(*r.cosine) : nlohmann::json(nullptr);
    return j;
}

}  // namespace planex::evalmetrics
