#include "planex/narrative.hpp"

#include <algorithm>
#include <cctype>

#include "planex/error.hpp"
#include "planex/inference.hpp"
#include "planex/parallel.hpp"
#include "planex/vocab.hpp"

namespace planex::narrative {

using kstore::KnowledgeBase;
using kstore::Literal;
using kstore::Object;
using kstore::Pattern;
using kstore::Term;
using kstore::TimeInterval;
using kstore::Triple;
using vocab::PropertyKind;

namespace {

constexpr char kPairSeparator = '~';
constexpr std::string_view kNoContrast = " have no contrastive relations.";

struct PhraseEntry {
    Term predicate;
    std::string phrase;
};

// Predicates whose rendering is not their camel-case split, followed by the
// rest of the known vocabulary so phrases can be mapped back.
const std::vector<PhraseEntry>& phrase_table() {
    static const std::vector<PhraseEntry> table = [] {
        std::vector<PhraseEntry> t{
            {vocab::has_data_value(), "has value"},
            {vocab::plan_classified_by(), "is classified by"},
            {vocab::quality_classified_by(), "is classified by"},
            {vocab::type(), "is a"},
        };
        std::vector<Term> regular{vocab::is_quality_of(), vocab::better_quality_value()};
        for (auto k : vocab::kPropertyKinds) {
            regular.push_back(vocab::plan_comparison(k).better);
            regular.push_back(vocab::plan_comparison(k).worse);
            regular.push_back(vocab::attribution_predicate(k));
        }
        regular.push_back(vocab::overall_comparison().better);
        regular.push_back(vocab::overall_comparison().worse);
        for (auto& p : regular) {
            auto phrase = split_camel_case(p.local());
            t.push_back({std::move(p), std::move(phrase)});
        }
        return t;
    }();
    return table;
}

// Order of chained comparison predicates: cost, number of tasks, makespan,
// then the overall verdict.
int comparison_rank(const Term& p) {
    int rank = 0;
    for (auto k : {PropertyKind::cost, PropertyKind::num_tasks, PropertyKind::makespan}) {
        auto c = vocab::plan_comparison(k);
        if (p == c.better || p == c.worse) return rank;
        ++rank;
    }
    return rank;
}

std::string quote(std::string_view s) {
    std::string out = "'";
    out += s;
    out += '\'';
    return out;
}

std::string render_object(const Object& o) {
    if (const auto* t = std::get_if<Term>(&o)) return quote(display_name(*t));
    return quote(std::get<Literal>(o).lexical());
}

std::optional<Triple> first(const KnowledgeBase& kb, const Term& s, const Term& p, const TimeInterval& within) {
    auto hits = kb.query(Pattern{s, p, std::nullopt}, within);
    if (hits.empty()) return std::nullopt;
    return hits.front();
}

// "'A' p 'x'; while 'B' p 'y'." with either side optional.
void contrast_sentence(std::vector<std::string>& out, const std::optional<Triple>& ta, const std::optional<Triple>& tb) {
    auto clause = [](const Triple& t) {
        return quote(display_name(t.subject)) + " " + predicate_phrase(t.predicate) + " " + render_object(t.object);
    };
    if (ta && tb) {
        out.push_back(clause(*ta) + "; while " + clause(*tb) + ".");
    } else if (ta) {
        out.push_back(clause(*ta) + ".");
    } else if (tb) {
        out.push_back(clause(*tb) + ".");
    }
}

}  // namespace

Specificity specificity_from_int(int level) {
    if (level < 1 || level > 3) throw InvalidArgument("specificity must be 1, 2 or 3");
    return static_cast<Specificity>(level);
}

std::string pair_id(std::string_view a, std::string_view b) {
    std::string id(a);
    id += kPairSeparator;
    id += b;
    return id;
}

std::pair<std::string, std::string> split_pair_id(std::string_view id) {
    auto sep = id.find(kPairSeparator);
    if (sep == std::string_view::npos || sep == 0 || sep + 1 >= id.size() ||
        id.find(kPairSeparator, sep + 1) != std::string_view::npos) {
        throw InvalidArgument("malformed pair id '" + std::string(id) + "'");
    }
    return {std::string(id.substr(0, sep)), std::string(id.substr(sep + 1))};
}

std::string Narrative::pair_id() const { return narrative::pair_id(a, b); }

std::string Narrative::ref() const { return pair_id() + "@" + std::to_string(to_int(level)); }

std::string split_camel_case(std::string_view name) {
    std::string out;
    for (std::size_t i = 0; i < name.size(); ++i) {
        const auto c = static_cast<unsigned char>(name[i]);
        if (std::isupper(c)) {
            if (!out.empty() && out.back() != ' ') out += ' ';
            out += static_cast<char>(std::tolower(c));
        } else if (name[i] == '_') {
            if (!out.empty() && out.back() != ' ') out += ' ';
        } else {
            out += name[i];
        }
    }
    return out;
}

std::string predicate_phrase(const Term& predicate) {
    for (const auto& e : phrase_table()) {
        if (e.predicate == predicate) return e.phrase;
    }
    return split_camel_case(predicate.local());
}

std::optional<Term> predicate_for_phrase(std::string_view phrase) {
    for (const auto& e : phrase_table()) {
        if (e.phrase == phrase) return e.predicate;
    }
    return std::nullopt;
}

std::string display_name(const Term& entity) {
    std::string out(entity.local());
    std::replace(out.begin(), out.end(), '_', ' ');
    return out;
}

Narrative retrieve_pair(const KnowledgeBase& kb, std::string_view a, std::string_view b, Specificity level,
                        const TimeInterval& within) {
    if (a == b) throw InvalidArgument("a narrative needs two distinct plans");
    const Term plan_a = vocab::plan_term(a);
    const Term plan_b = vocab::plan_term(b);

    const auto class_a = first(kb, plan_a, vocab::plan_classified_by(), within);
    const auto class_b = first(kb, plan_b, vocab::plan_classified_by(), within);
    if (!class_a || !class_b) {
        throw StageError("pair " + pair_id(a, b) + " has no inference output (plans not classified)");
    }

    Narrative n;
    n.a = std::string(a);
    n.b = std::string(b);
    n.level = level;
    std::vector<std::string> sentences;

    // Level 1: comparison chain with a as the subject.
    std::vector<Triple> comparisons;
    for (auto& t : kb.query(Pattern{plan_a, std::nullopt, Object{plan_b}}, within)) {
        if (vocab::is_plan_comparison(t.predicate)) comparisons.push_back(std::move(t));
    }
    std::stable_sort(comparisons.begin(), comparisons.end(), [](const Triple& x, const Triple& y) {
        return comparison_rank(x.predicate) < comparison_rank(y.predicate);
    });
    if (!comparisons.empty()) {
        std::string s = quote(display_name(plan_a));
        for (std::size_t i = 0; i < comparisons.size(); ++i) {
            s += i == 0 ? " " : " and ";
            s += predicate_phrase(comparisons[i].predicate);
        }
        s += " " + quote(display_name(plan_b)) + ".";
        sentences.push_back(std::move(s));
        n.tuples.insert(n.tuples.end(), comparisons.begin(), comparisons.end());
    }

    if (level != Specificity::low) {
        std::vector<std::pair<std::optional<Triple>, std::optional<Triple>>> attributions;
        for (auto kind : vocab::kPropertyKinds) {
            auto ta = first(kb, plan_a, vocab::attribution_predicate(kind), within);
            auto tb = first(kb, plan_b, vocab::attribution_predicate(kind), within);
            contrast_sentence(sentences, ta, tb);
            for (const auto& t : {ta, tb}) {
                if (t) n.tuples.push_back(*t);
            }
            attributions.emplace_back(std::move(ta), std::move(tb));
        }
        contrast_sentence(sentences, class_a, class_b);
        n.tuples.push_back(*class_a);
        n.tuples.push_back(*class_b);

        if (level == Specificity::high) {
            auto value_of = [&](const std::optional<Triple>& link) -> std::optional<Triple> {
                if (!link) return std::nullopt;
                const auto* q = std::get_if<Term>(&link->object);
                if (!q) return std::nullopt;
                return first(kb, *q, vocab::has_data_value(), within);
            };
            for (const auto& [ta, tb] : attributions) {
                auto va = value_of(ta);
                auto vb = value_of(tb);
                contrast_sentence(sentences, va, vb);
                for (const auto& t : {va, vb}) {
                    if (t) n.tuples.push_back(*t);
                }
            }
        }
    }

    if (sentences.empty()) {
        sentences.push_back(quote(display_name(plan_a)) + " and " + quote(display_name(plan_b)) +
                            std::string(kNoContrast));
    }
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        if (i) n.text += ' ';
        n.text += sentences[i];
    }
    n.tuple_count = n.tuples.size();
    return n;
}

std::vector<Narrative> narrate_all(const KnowledgeBase& kb, Specificity level, const TimeInterval& within,
                                   std::size_t threads) {
    auto plans = inference::plan_ids(kb);
    if (plans.size() < 2) throw InvalidArgument("narration needs at least two plans");
    std::sort(plans.begin(), plans.end());

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < plans.size(); ++i) {
        for (std::size_t j = i + 1; j < plans.size(); ++j) pairs.emplace_back(i, j);
    }
    std::vector<Narrative> out(pairs.size());
    parallel_for(
        pairs.size(),
        [&](std::size_t idx) {
            out[idx] = retrieve_pair(kb, plans[pairs[idx].first], plans[pairs[idx].second], level, within);
        },
        threads);
    return out;
}

namespace {

class Parser {
public:
    explicit Parser(std::string_view text) : s_(text) {}

    ParsedNarrative run() {
        ParsedNarrative out;
        skip_spaces();
        if (pos_ >= s_.size()) fail("empty narrative");
        while (pos_ < s_.size()) {
            sentence(out);
            skip_spaces();
        }
        if (out.no_contrast && !out.sentences.empty()) fail("fallback sentence mixed with content");
        return out;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw DataError("narrative parse error at offset " + std::to_string(pos_) + ": " + what);
    }

    void skip_spaces() {
        while (pos_ < s_.size() && s_[pos_] == ' ') ++pos_;
    }

    bool consume(std::string_view lit) {
        if (s_.substr(pos_, lit.size()) != lit) return false;
        pos_ += lit.size();
        return true;
    }

    void expect(std::string_view lit) {
        if (!consume(lit)) fail("expected \"" + std::string(lit) + "\"");
    }

    std::string quoted() {
        expect("'");
        auto close = s_.find('\'', pos_);
        if (close == std::string_view::npos || close == pos_) fail("unterminated or empty quoted name");
        std::string name(s_.substr(pos_, close - pos_));
        pos_ = close + 1;
        return name;
    }

    // Text between the subject and the next quote, e.g. "is a and is b".
    std::string phrase_block() {
        expect(" ");
        auto next = s_.find('\'', pos_);
        if (next == std::string_view::npos || next == pos_ || s_[next - 1] != ' ') fail("missing predicate phrase");
        std::string block(s_.substr(pos_, next - 1 - pos_));
        pos_ = next;
        return block;
    }

    Clause clause_after(std::string subject, const std::string& block) {
        Clause c;
        c.subject = std::move(subject);
        std::size_t from = 0;
        while (true) {
            auto at = block.find(" and ", from);
            auto piece = block.substr(from, at == std::string::npos ? std::string::npos : at - from);
            if (piece.empty()) fail("empty predicate phrase");
            c.predicates.push_back(std::move(piece));
            if (at == std::string::npos) break;
            from = at + 5;
        }
        c.object = quoted();
        return c;
    }

    void sentence(ParsedNarrative& out) {
        auto subject = quoted();
        auto block = phrase_block();
        if (block == "and") {
            auto other = quoted();
            expect(kNoContrast);
            if (out.no_contrast) fail("repeated fallback sentence");
            out.no_contrast = std::make_pair(std::move(subject), std::move(other));
            return;
        }
        Sentence sent;
        sent.clauses.push_back(clause_after(std::move(subject), block));
        if (consume("; while ")) {
            auto second = quoted();
            auto second_block = phrase_block();
            sent.clauses.push_back(clause_after(std::move(second), second_block));
        }
        expect(".");
        if (pos_ < s_.size() && s_[pos_] != ' ') fail("sentence must be followed by a space");
        out.sentences.push_back(std::move(sent));
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

}  // namespace

ParsedNarrative parse(std::string_view text) { return Parser(text).run(); }

nlohmann::json to_json(const Narrative& n) {
    return nlohmann::json{{"pair", {n.a, n.b}},
                          {"pair_id", n.pair_id()},
                          {"level", to_int(n.level)},
                          {"text", n.text},
                          {"tuple_count", n.tuple_count}};
}

Narrative narrative_from_json(const nlohmann::json& j) {
    try {
        Narrative n;
        const auto& pair = j.at("pair");
        if (!pair.is_array() || pair.size() != 2) throw DataError("narrative: 'pair' must hold two plan ids");
        n.a = pair[0].get<std::string>();
        n.b = pair[1].get<std::string>();
        n.level = specificity_from_int(j.at("level").get<int>());
        n.text = j.at("text").get<std::string>();
        n.tuple_count = j.value("tuple_count", std::size_t{0});
        if (n.text.empty()) throw DataError("narrative " + n.ref() + " has empty text");
        return n;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("narrative record: ") + e.what());
    }
}

}  // namespace planex::narrative
