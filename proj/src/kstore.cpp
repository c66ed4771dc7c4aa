#include "planex/kstore.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>

#include "planex/error.hpp"

namespace planex::kstore {

namespace {

constexpr std::string_view kIntegerType = "xsd:integer";
constexpr std::string_view kDecimalType = "xsd:decimal";

bool valid_local(std::string_view s) {
    if (s.empty()) return false;
    return std::none_of(s.begin(), s.end(), [](char c) {
        auto u = static_cast<unsigned char>(c);
        return u <= ' ' || c == '"' || c == '\x7f';
    });
}

std::string format_number(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

std::optional<double> parse_double(std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::string escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default: out += c;
        }
    }
    return out;
}

// -1 when a missing start (minus infinity) or end (plus infinity) decides it.
int compare_bound(const std::optional<double>& a, const std::optional<double>& b, bool is_start) {
    if (!a && !b) return 0;
    if (!a) return is_start ? -1 : 1;
    if (!b) return is_start ? 1 : -1;
    if (*a < *b) return -1;
    if (*b < *a) return 1;
    return 0;
}

}  // namespace

std::string_view to_string(Namespace ns) {
    switch (ns) {
        case Namespace::app: return "app";
        case Namespace::dul: return "dul";
        case Namespace::ocra: return "ocra";
        case Namespace::rdf: return "rdf";
    }
    return "?";
}

std::optional<Namespace> parse_namespace(std::string_view s) {
    if (s == "app") return Namespace::app;
    if (s == "dul") return Namespace::dul;
    if (s == "ocra") return Namespace::ocra;
    if (s == "rdf") return Namespace::rdf;
    return std::nullopt;
}

Term::Term(Namespace ns, std::string_view local) : ns_(ns) {
    if (!valid_local(local)) {
        throw InvalidArgument("malformed term local name: '" + std::string(local) + "'");
    }
    rendered_ = std::string(to_string(ns)) + ":" + std::string(local);
    prefix_ = to_string(ns).size() + 1;
}

Term Term::parse(std::string_view rendered) {
    auto colon = rendered.find(':');
    if (colon == std::string_view::npos) {
        throw InvalidArgument("term without namespace: '" + std::string(rendered) + "'");
    }
    auto ns = parse_namespace(rendered.substr(0, colon));
    if (!ns) {
        throw InvalidArgument("unknown namespace in term: '" + std::string(rendered) + "'");
    }
    return Term(*ns, rendered.substr(colon + 1));
}

Literal Literal::integer(std::int64_t v) {
    return Literal(Kind::integer, std::to_string(v), static_cast<double>(v));
}

Literal Literal::decimal(double v, int places) {
    if (!std::isfinite(v)) throw InvalidArgument("numeric literal must be finite");
    if (places < 0 || places > 17) throw InvalidArgument("decimal places out of range");
    char buf[128];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, places);
    if (ec != std::errc{}) throw InvalidArgument("decimal literal too large");
    std::string lexical(buf, end);
    double value = *parse_double(lexical);
    return Literal(Kind::decimal, std::move(lexical), value);
}

Literal Literal::text(std::string v) { return Literal(Kind::text, std::move(v), 0.0); }

Literal Literal::from_lexical(Kind kind, std::string lexical) {
    if (kind == Kind::text) return text(std::move(lexical));
    auto v = parse_double(lexical);
    if (!v) throw InvalidArgument("non-numeric lexical form: '" + lexical + "'");
    if (kind == Kind::integer) {
        std::int64_t i = 0;
        auto [ptr, ec] = std::from_chars(lexical.data(), lexical.data() + lexical.size(), i);
        if (ec != std::errc{} || ptr != lexical.data() + lexical.size()) {
            throw InvalidArgument("malformed integer literal: '" + lexical + "'");
        }
    }
    return Literal(kind, std::move(lexical), *v);
}

std::optional<double> Literal::number() const {
    if (kind_ == Kind::text) return std::nullopt;
    return value_;
}

std::string Literal::str() const {
    std::string out = "\"" + escape(lexical_) + "\"";
    if (kind_ == Kind::integer) out += "^^" + std::string(kIntegerType);
    if (kind_ == Kind::decimal) out += "^^" + std::string(kDecimalType);
    return out;
}

std::string render(const Object& o) {
    if (const auto* t = std::get_if<Term>(&o)) return t->str();
    return std::get<Literal>(o).str();
}

bool operator==(const Object& a, const Object& b) {
    if (a.index() != b.index()) return false;
    if (const auto* t = std::get_if<Term>(&a)) return *t == std::get<Term>(b);
    return std::get<Literal>(a) == std::get<Literal>(b);
}

TimeInterval TimeInterval::between(std::optional<double> start, std::optional<double> end) {
    if ((start && !std::isfinite(*start)) || (end && !std::isfinite(*end))) {
        throw InvalidArgument("interval bounds must be finite");
    }
    if (start && end && *start > *end) throw InvalidArgument("interval start exceeds end");
    return TimeInterval{start, end};
}

bool TimeInterval::overlaps(const TimeInterval& other) const {
    if (start && other.end && *start > *other.end) return false;
    if (other.start && end && *other.start > *end) return false;
    return true;
}

TimeInterval TimeInterval::intersect(const TimeInterval& other) const {
    TimeInterval r;
    r.start = compare_bound(start, other.start, true) >= 0 ? start : other.start;
    r.end = compare_bound(end, other.end, false) <= 0 ? end : other.end;
    return r;
}

bool operator==(const Triple& a, const Triple& b) {
    return a.subject == b.subject && a.predicate == b.predicate && a.object == b.object &&
           a.holds == b.holds;
}

bool operator<(const Triple& a, const Triple& b) {
    if (auto c = a.subject <=> b.subject; c != 0) return c < 0;
    if (auto c = a.predicate <=> b.predicate; c != 0) return c < 0;
    if (auto ra = render(a.object), rb = render(b.object); ra != rb) return ra < rb;
    if (int c = compare_bound(a.holds.start, b.holds.start, true); c != 0) return c < 0;
    return compare_bound(a.holds.end, b.holds.end, false) < 0;
}

KnowledgeBase::KnowledgeBase(const KnowledgeBase& other) {
    std::shared_lock lock(other.mutex_);
    triples_ = other.triples_;
    rebuild_indices();
}

KnowledgeBase::KnowledgeBase(KnowledgeBase&& other) noexcept {
    std::unique_lock lock(other.mutex_);
    triples_ = std::move(other.triples_);
    other.triples_.clear();
    other.by_subject_.clear();
    other.by_predicate_.clear();
    other.by_object_.clear();
    rebuild_indices();
}

KnowledgeBase& KnowledgeBase::operator=(KnowledgeBase other) noexcept {
    swap(*this, other);
    return *this;
}

void swap(KnowledgeBase& a, KnowledgeBase& b) noexcept {
    if (&a == &b) return;
    std::scoped_lock lock(a.mutex_, b.mutex_);
    a.triples_.swap(b.triples_);
    a.by_subject_.swap(b.by_subject_);
    a.by_predicate_.swap(b.by_predicate_);
    a.by_object_.swap(b.by_object_);
}

void KnowledgeBase::index(const Triple& t) {
    by_subject_[t.subject.str()].push_back(&t);
    by_predicate_[t.predicate.str()].push_back(&t);
    by_object_[render(t.object)].push_back(&t);
}

void KnowledgeBase::unindex(const Triple& t) {
    auto drop = [&](Index& idx, const std::string& key) {
        auto it = idx.find(key);
        if (it == idx.end()) return;
        std::erase(it->second, &t);
        if (it->second.empty()) idx.erase(it);
    };
    drop(by_subject_, t.subject.str());
    drop(by_predicate_, t.predicate.str());
    drop(by_object_, render(t.object));
}

void KnowledgeBase::rebuild_indices() {
    by_subject_.clear();
    by_predicate_.clear();
    by_object_.clear();
    for (const auto& t : triples_) index(t);
}

bool KnowledgeBase::assert_triple(Triple t) {
    std::unique_lock lock(mutex_);
    auto [it, inserted] = triples_.insert(std::move(t));
    if (inserted) index(*it);
    return inserted;
}

std::size_t KnowledgeBase::retract(const Pattern& pattern) {
    auto doomed = query(pattern);
    std::unique_lock lock(mutex_);
    std::size_t removed = 0;
    for (const auto& t : doomed) {
        auto it = triples_.find(t);
        if (it == triples_.end()) continue;
        unindex(*it);
        triples_.erase(it);
        ++removed;
    }
    return removed;
}

std::vector<Triple> KnowledgeBase::query(const Pattern& pattern, const TimeInterval& within) const {
    std::shared_lock lock(mutex_);

    auto matches = [&](const Triple& t) {
        if (pattern.subject && !(t.subject == *pattern.subject)) return false;
        if (pattern.predicate && !(t.predicate == *pattern.predicate)) return false;
        if (pattern.object && !(t.object == *pattern.object)) return false;
        return t.holds.overlaps(within);
    };

    // Smallest posting list among the bound positions.
    const std::vector<const Triple*>* candidates = nullptr;
    bool bound = false;
    auto consider = [&](const Index& idx, const std::string& key) {
        bound = true;
        auto it = idx.find(key);
        static const std::vector<const Triple*> empty;
        const auto* list = it == idx.end() ? &empty : &it->second;
        if (!candidates || list->size() < candidates->size()) candidates = list;
    };
    if (pattern.subject) consider(by_subject_, pattern.subject->str());
    if (pattern.predicate) consider(by_predicate_, pattern.predicate->str());
    if (pattern.object) consider(by_object_, render(*pattern.object));

    std::vector<Triple> out;
    if (!bound) {
        for (const auto& t : triples_) {
            if (matches(t)) out.push_back(t);
        }
        return out;
    }
    std::vector<const Triple*> hits;
    for (const auto* t : *candidates) {
        if (matches(*t)) hits.push_back(t);
    }
    std::sort(hits.begin(), hits.end(), [](const Triple* a, const Triple* b) { return *a < *b; });
    out.reserve(hits.size());
    for (const auto* t : hits) out.push_back(*t);
    return out;
}

std::vector<Triple> KnowledgeBase::neighborhood(const Term& entity, const TimeInterval& within) const {
    auto out = query(Pattern{entity, std::nullopt, std::nullopt}, within);
    auto as_object = query(Pattern{std::nullopt, std::nullopt, Object{entity}}, within);
    for (auto& t : as_object) {
        // Self loops are already present from the subject side.
        if (!(t.subject == entity)) out.push_back(std::move(t));
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool KnowledgeBase::contains(const Triple& t) const {
    std::shared_lock lock(mutex_);
    return triples_.count(t) > 0;
}

std::size_t KnowledgeBase::size() const {
    std::shared_lock lock(mutex_);
    return triples_.size();
}

std::vector<Triple> KnowledgeBase::triples() const {
    std::shared_lock lock(mutex_);
    return {triples_.begin(), triples_.end()};
}

void KnowledgeBase::write(std::ostream& out) const {
    std::shared_lock lock(mutex_);
    for (const auto& t : triples_) {
        out << t.subject.str() << ' ' << t.predicate.str() << ' ' << render(t.object) << ' '
            << (t.holds.start ? format_number(*t.holds.start) : "-") << ' '
            << (t.holds.end ? format_number(*t.holds.end) : "-") << " .\n";
    }
}

namespace {

struct LineReader {
    std::string_view line;
    std::size_t pos = 0;
    std::size_t line_no = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw DataError("store line " + std::to_string(line_no) + ": " + what);
    }

    void skip_ws() {
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    }

    std::string_view token() {
        skip_ws();
        auto begin = pos;
        while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t') ++pos;
        if (begin == pos) fail("unexpected end of line");
        return line.substr(begin, pos - begin);
    }

    Term term() {
        auto tok = token();
        try {
            return Term::parse(tok);
        } catch (const InvalidArgument& e) {
            fail(e.what());
        }
    }

    Object object() {
        skip_ws();
        if (pos >= line.size()) fail("missing object");
        if (line[pos] != '"') return term();
        ++pos;
        std::string value;
        bool closed = false;
        while (pos < line.size()) {
            char c = line[pos++];
            if (c == '"') {
                closed = true;
                break;
            }
            if (c == '\\') {
                if (pos >= line.size()) fail("dangling escape");
                char e = line[pos++];
                switch (e) {
                    case 'n': value += '\n'; break;
                    case 't': value += '\t'; break;
                    case 'r': value += '\r'; break;
                    case '"': value += '"'; break;
                    case '\\': value += '\\'; break;
                    default: fail(std::string("unknown escape \\") + e);
                }
            } else {
                value += c;
            }
        }
        if (!closed) fail("unterminated literal");
        auto kind = Literal::Kind::text;
        if (line.substr(pos, 2) == "^^") {
            pos += 2;
            auto type = token();
            if (type == kIntegerType) {
                kind = Literal::Kind::integer;
            } else if (type == kDecimalType) {
                kind = Literal::Kind::decimal;
            } else {
                fail("unknown literal datatype " + std::string(type));
            }
        }
        try {
            return Literal::from_lexical(kind, std::move(value));
        } catch (const InvalidArgument& e) {
            fail(e.what());
        }
    }

    std::optional<double> bound() {
        auto tok = token();
        if (tok == "-") return std::nullopt;
        auto v = parse_double(tok);
        if (!v) fail("bad interval bound '" + std::string(tok) + "'");
        return v;
    }
};

}  // namespace

KnowledgeBase KnowledgeBase::read(std::istream& in) {
    KnowledgeBase kb;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;

        LineReader r{line, 0, line_no};
        Term s = r.term();
        Term p = r.term();
        Object o = r.object();
        auto start = r.bound();
        auto end = r.bound();
        if (r.token() != ".") r.fail("expected terminating '.'");
        r.skip_ws();
        if (r.pos != line.size()) r.fail("trailing content");
        TimeInterval holds;
        try {
            holds = TimeInterval::between(start, end);
        } catch (const InvalidArgument& e) {
            r.fail(e.what());
        }
        kb.assert_triple(Triple{std::move(s), std::move(p), std::move(o), holds});
    }
    return kb;
}

}  // namespace planex::kstore
