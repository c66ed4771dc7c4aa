#pragma once

// Time-indexed triple store. Every assertion carries the interval in which it
// holds; queries filter by pattern and by interval overlap.

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace planex::kstore {

enum class Namespace { app, dul, ocra, rdf };

std::string_view to_string(Namespace ns);
std::optional<Namespace> parse_namespace(std::string_view s);

// A namespaced entity name, rendered as "ns:local".
class Term {
public:
    Term(Namespace ns, std::string_view local);

    // Parses "ns:local"; throws InvalidArgument on unknown namespaces.
    static Term parse(std::string_view rendered);

    Namespace ns() const { return ns_; }
    std::string_view local() const { return std::string_view(rendered_).substr(prefix_); }
    const std::string& str() const { return rendered_; }

    friend bool operator==(const Term& a, const Term& b) { return a.rendered_ == b.rendered_; }
    friend std::strong_ordering operator<=>(const Term& a, const Term& b) {
        return a.rendered_ <=> b.rendered_;
    }

private:
    Namespace ns_;
    std::size_t prefix_;
    std::string rendered_;
};

class Literal {
public:
    enum class Kind { integer, decimal, text };

    static Literal integer(std::int64_t v);
    // Fixed-point lexical form with `places` digits after the point ("28.20").
    static Literal decimal(double v, int places);
    static Literal text(std::string v);
    // Rebuilds a literal from its lexical form; validates numeric kinds.
    static Literal from_lexical(Kind kind, std::string lexical);

    Kind kind() const { return kind_; }
    const std::string& lexical() const { return lexical_; }
    std::optional<double> number() const;

    // Quoted form used for ordering and export, e.g. "28.20"^^xsd:decimal.
    std::string str() const;

    friend bool operator==(const Literal& a, const Literal& b) {
        return a.kind_ == b.kind_ && a.lexical_ == b.lexical_;
    }

private:
    Literal(Kind kind, std::string lexical, double value)
        : kind_(kind), lexical_(std::move(lexical)), value_(value) {}

    Kind kind_;
    std::string lexical_;
    double value_ = 0.0;
};

using Object = std::variant<Term, Literal>;

std::string render(const Object& o);
bool operator==(const Object& a, const Object& b);

// Closed interval of validity; a missing bound is unbounded.
struct TimeInterval {
    std::optional<double> start;
    std::optional<double> end;

    static TimeInterval always() { return {}; }
    static TimeInterval between(std::optional<double> start, std::optional<double> end);

    bool overlaps(const TimeInterval& other) const;
    // Intersection of two overlapping intervals.
    TimeInterval intersect(const TimeInterval& other) const;

    friend bool operator==(const TimeInterval&, const TimeInterval&) = default;
};

struct Triple {
    Term subject;
    Term predicate;
    Object object;
    TimeInterval holds = TimeInterval::always();
};

bool operator==(const Triple& a, const Triple& b);
// Lexicographic on rendered subject, predicate and object, then interval.
bool operator<(const Triple& a, const Triple& b);

// Any unset position is a wildcard.
struct Pattern {
    std::optional<Term> subject;
    std::optional<Term> predicate;
    std::optional<Object> object;
};

// Many readers or one writer. All public members take the lock themselves.
class KnowledgeBase {
public:
    KnowledgeBase() = default;
    KnowledgeBase(const KnowledgeBase& other);
    KnowledgeBase(KnowledgeBase&& other) noexcept;
    KnowledgeBase& operator=(KnowledgeBase other) noexcept;
    ~KnowledgeBase() = default;

    // Returns false when the identical triple was already present.
    bool assert_triple(Triple t);

    // Removes every triple matching the pattern; returns how many went.
    std::size_t retract(const Pattern& pattern);

    std::vector<Triple> query(const Pattern& pattern,
                              const TimeInterval& within = TimeInterval::always()) const;

    // Triples where `entity` is the subject or the (term) object.
    std::vector<Triple> neighborhood(const Term& entity,
                                     const TimeInterval& within = TimeInterval::always()) const;

    bool contains(const Triple& t) const;
    std::size_t size() const;
    std::vector<Triple> triples() const;

    // Line format: subject predicate object start end .
    // Unbounded interval ends are written as "-".
    void write(std::ostream& out) const;
    static KnowledgeBase read(std::istream& in);

    friend void swap(KnowledgeBase& a, KnowledgeBase& b) noexcept;

private:
    using Index = std::unordered_map<std::string, std::vector<const Triple*>>;

    void index(const Triple& t);
    void unindex(const Triple& t);
    void rebuild_indices();

    mutable std::shared_mutex mutex_;
    std::set<Triple> triples_;
    Index by_subject_;
    Index by_predicate_;
    Index by_object_;
};

}  // namespace planex::kstore
