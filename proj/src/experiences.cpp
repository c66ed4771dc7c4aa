#include "planex/experiences.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "planex/error.hpp"

namespace planex::experiences {

using json = nlohmann::json;
using kstore::KnowledgeBase;
using kstore::Literal;
using kstore::Object;
using kstore::Pattern;
using kstore::Term;
using kstore::Triple;
using vocab::PropertyKind;

namespace {

std::string_view actor_name(Actor a) { return a == Actor::human ? "human" : "robot"; }
std::string_view action_name(Action a) { return a == Action::inspect ? "inspect" : "re_inspect"; }

[[noreturn]] void field_error(const std::string& path, const std::string& what) {
    throw DataError(path + ": " + what);
}

const json& require(const json& obj, const char* key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) field_error(path + "." + key, "missing field");
    return *it;
}

double require_number(const json& obj, const char* key, const std::string& path) {
    const auto& v = require(obj, key, path);
    if (!v.is_number()) field_error(path + "." + key, "expected a number");
    double d = v.get<double>();
    if (!std::isfinite(d)) field_error(path + "." + key, "expected a finite number");
    return d;
}

std::string require_string(const json& obj, const char* key, const std::string& path) {
    const auto& v = require(obj, key, path);
    if (!v.is_string()) field_error(path + "." + key, "expected a string");
    return v.get<std::string>();
}

TaskEvent parse_event(const json& j, const std::string& path) {
    if (!j.is_object()) field_error(path, "expected an object");
    TaskEvent e;
    auto actor = require_string(j, "actor", path);
    if (actor == "human") {
        e.actor = Actor::human;
    } else if (actor == "robot") {
        e.actor = Actor::robot;
    } else {
        field_error(path + ".actor", "expected 'human' or 'robot', got '" + actor + "'");
    }
    auto action = require_string(j, "action", path);
    if (action == "inspect") {
        e.action = Action::inspect;
    } else if (action == "re_inspect") {
        e.action = Action::re_inspect;
    } else {
        field_error(path + ".action", "expected 'inspect' or 're_inspect', got '" + action + "'");
    }
    e.item = require_string(j, "item", path);
    e.start = require_number(j, "start", path);
    e.end = require_number(j, "end", path);
    const auto& doubted = require(j, "doubted", path);
    if (!doubted.is_boolean()) field_error(path + ".doubted", "expected a boolean");
    e.doubted = doubted.get<bool>();
    return e;
}

// Byte offset -> 1-based line number, for parse diagnostics.
std::size_t line_of(std::string_view text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + byte, '\n'));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform in [0, 1) from the top 53 bits; portable across standard libraries.
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

private:
    std::mt19937_64 engine_;
};

std::int64_t centis(double seconds) { return static_cast<std::int64_t>(std::llround(seconds * 100.0)); }

}  // namespace

double PlanProperties::value(PropertyKind k) const {
    switch (k) {
        case PropertyKind::makespan: return makespan;
        case PropertyKind::num_tasks: return static_cast<double>(num_tasks);
        case PropertyKind::cost: return static_cast<double>(cost);
    }
    return 0.0;
}

void GenConfig::validate() const {
    auto bad = [](const std::string& what) { throw InvalidArgument("generator config: " + what); };
    if (tray_size < 1) bad("tray_size must be >= 1");
    if (!(doubt_prob >= 0.0 && doubt_prob <= 1.0)) bad("doubt_prob must lie in [0, 1]");
    if (!(human_extra_prob >= 0.0 && human_extra_prob <= 1.0)) bad("human_extra_prob must lie in [0, 1]");
    if (!(duration_min > 0.0) || !std::isfinite(duration_min)) bad("duration_min must be positive");
    if (!(duration_max >= duration_min) || !std::isfinite(duration_max)) {
        bad("duration_max must be >= duration_min");
    }
    if (!(human_speed_factor > 0.0) || !std::isfinite(human_speed_factor)) {
        bad("human_speed_factor must be positive");
    }
}

GenConfig GenConfig::from_json(const json& j) {
    if (!j.is_object()) throw InvalidArgument("generator config: expected a JSON object");
    GenConfig cfg;
    auto num = [&](const char* key, double& out) {
        if (auto it = j.find(key); it != j.end()) {
            if (!it->is_number()) throw InvalidArgument(std::string("generator config: ") + key + " must be a number");
            out = it->get<double>();
        }
    };
    if (auto it = j.find("tray_size"); it != j.end()) {
        if (!it->is_number_integer()) throw InvalidArgument("generator config: tray_size must be an integer");
        cfg.tray_size = it->get<int>();
    }
    num("doubt_prob", cfg.doubt_prob);
    num("duration_min", cfg.duration_min);
    num("duration_max", cfg.duration_max);
    num("human_speed_factor", cfg.human_speed_factor);
    num("human_extra_prob", cfg.human_extra_prob);
    cfg.validate();
    return cfg;
}

json GenConfig::to_json() const {
    return json{{"tray_size", tray_size},
                {"doubt_prob", doubt_prob},
                {"duration_min", duration_min},
                {"duration_max", duration_max},
                {"human_speed_factor", human_speed_factor},
                {"human_extra_prob", human_extra_prob}};
}

bool valid_plan_id(std::string_view id) {
    if (id.empty()) return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
    });
}

void validate(const ExperienceRecord& rec) {
    const std::string where = "plan '" + rec.plan_id + "'";
    if (!valid_plan_id(rec.plan_id)) throw DataError(where + ": plan_id must match [A-Za-z0-9_-]+");
    if (rec.events.empty()) throw DataError(where + ": events must be non-empty");
    for (std::size_t i = 0; i < rec.events.size(); ++i) {
        const auto& e = rec.events[i];
        const std::string path = where + " events[" + std::to_string(i) + "]";
        if (!std::isfinite(e.start) || !std::isfinite(e.end)) throw DataError(path + ": times must be finite");
        if (e.start > e.end) throw DataError(path + ".end: end precedes start");
        if (e.item.empty()) throw DataError(path + ".item: must be non-empty");
        if (e.doubted && e.actor != Actor::robot) throw DataError(path + ".doubted: only robot events can be doubted");
        if (i > 0 && e.start < rec.events[i - 1].start) {
            throw DataError(path + ".start: events are not ordered by start time");
        }
    }
}

PlanProperties extract_properties(const ExperienceRecord& rec) {
    if (rec.events.empty()) throw DataError("plan '" + rec.plan_id + "': cannot extract properties of an empty plan");
    double first = rec.events.front().start;
    double last = rec.events.front().end;
    std::int64_t doubts = 0;
    for (const auto& e : rec.events) {
        first = std::min(first, e.start);
        last = std::max(last, e.end);
        if (e.doubted) ++doubts;
    }
    PlanProperties p;
    p.plan_id = rec.plan_id;
    p.num_tasks = static_cast<std::int64_t>(rec.events.size());
    p.makespan = last - first;
    p.cost = doubts;
    if (!(p.makespan > 0.0)) throw DataError("plan '" + rec.plan_id + "': makespan must be positive");
    return p;
}

std::vector<ExperienceRecord> parse_experiences(std::string_view text) {
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) return {};
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError("line " + std::to_string(line_of(text, e.byte > 0 ? e.byte - 1 : 0)) + ": " + e.what());
    }
    if (!doc.is_array()) throw DataError("$: experience corpus must be a JSON array");

    std::vector<ExperienceRecord> out;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const std::string path = "$[" + std::to_string(i) + "]";
        const auto& r = doc[i];
        if (!r.is_object()) field_error(path, "expected an object");
        ExperienceRecord rec;
        rec.plan_id = require_string(r, "plan_id", path);
        if (!valid_plan_id(rec.plan_id)) field_error(path + ".plan_id", "must match [A-Za-z0-9_-]+");
        if (!seen.insert(rec.plan_id).second) field_error(path + ".plan_id", "duplicate plan_id '" + rec.plan_id + "'");
        const auto& events = require(r, "events", path);
        if (!events.is_array()) field_error(path + ".events", "expected an array");
        if (events.empty()) field_error(path + ".events", "must be non-empty");
        for (std::size_t k = 0; k < events.size(); ++k) {
            const std::string epath = path + ".events[" + std::to_string(k) + "]";
            auto e = parse_event(events[k], epath);
            if (e.start > e.end) field_error(epath + ".end", "end precedes start");
            if (e.doubted && e.actor != Actor::robot) field_error(epath + ".doubted", "only robot events can be doubted");
            if (!rec.events.empty() && e.start < rec.events.back().start) {
                field_error(epath + ".start", "non-monotone timestamps (events must be ordered by start)");
            }
            rec.events.push_back(std::move(e));
        }
        validate(rec);
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<ExperienceRecord> load_experiences(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open experience file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_experiences(buf.str());
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

json to_json(const std::vector<ExperienceRecord>& records) {
    json arr = json::array();
    for (const auto& r : records) {
        json events = json::array();
        for (const auto& e : r.events) {
            events.push_back(json{{"actor", actor_name(e.actor)},
                                  {"action", action_name(e.action)},
                                  {"item", e.item},
                                  {"start", e.start},
                                  {"end", e.end},
                                  {"doubted", e.doubted}});
        }
        arr.push_back(json{{"plan_id", r.plan_id}, {"events", std::move(events)}});
    }
    return arr;
}

void save_experiences(const std::filesystem::path& path, const std::vector<ExperienceRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write experience file " + path.string());
    out << to_json(records).dump(2) << '\n';
}

std::vector<ExperienceRecord> generate_synthetic(std::uint64_t seed, int n, const GenConfig& cfg) {
    if (n < 1) throw InvalidArgument("synthetic corpus size must be >= 1");
    cfg.validate();

    Rng rng(seed);
    auto digits = [](int v) { return std::max(2, static_cast<int>(std::to_string(v).size())); };
    const int width = digits(n);
    const int item_width = digits(cfg.tray_size);
    auto padded = [](int v, int w) {
        auto s = std::to_string(v);
        return std::string(static_cast<std::size_t>(std::max(0, w - static_cast<int>(s.size()))), '0') + s;
    };

    std::vector<ExperienceRecord> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int p = 1; p <= n; ++p) {
        ExperienceRecord rec;
        rec.plan_id = "Plan_" + padded(p, width);

        // Work in hundredths of a second so times stay exact in decimal.
        std::int64_t robot_at = 0;
        std::int64_t human_free = 0;
        for (int item = 1; item <= cfg.tray_size; ++item) {
            const std::string item_id = "case_" + padded(item, item_width);
            const std::int64_t dur = std::max<std::int64_t>(1, centis(rng.uniform(cfg.duration_min, cfg.duration_max)));
            const bool doubted = rng.unit() < cfg.doubt_prob;
            const bool extra = rng.unit() < cfg.human_extra_prob;
            const double human_dur = rng.uniform(cfg.duration_min, cfg.duration_max) * cfg.human_speed_factor;

            const std::int64_t robot_end = robot_at + dur;
            rec.events.push_back(TaskEvent{Actor::robot, Action::inspect, item_id, robot_at / 100.0,
                                           robot_end / 100.0, doubted});
            robot_at = robot_end;

            if (doubted || extra) {
                const std::int64_t hs = std::max(robot_end, human_free);
                const std::int64_t he = hs + std::max<std::int64_t>(1, centis(human_dur));
                rec.events.push_back(TaskEvent{Actor::human, doubted ? Action::re_inspect : Action::inspect,
                                               item_id, hs / 100.0, he / 100.0, false});
                human_free = he;
            }
        }
        std::stable_sort(rec.events.begin(), rec.events.end(),
                         [](const TaskEvent& a, const TaskEvent& b) { return a.start < b.start; });
        out.push_back(std::move(rec));
    }
    return out;
}

namespace {

Literal value_literal(PropertyKind k, const PlanProperties& p) {
    switch (k) {
        case PropertyKind::makespan: return Literal::decimal(p.makespan, 2);
        case PropertyKind::num_tasks: return Literal::integer(p.num_tasks);
        case PropertyKind::cost: return Literal::integer(p.cost);
    }
    throw InvalidArgument("bad property kind");
}

}  // namespace

void ground_properties(KnowledgeBase& kb, const PlanProperties& p) {
    if (!valid_plan_id(p.plan_id)) throw InvalidArgument("invalid plan id '" + p.plan_id + "'");
    if (p.num_tasks < 1 || !(p.makespan > 0.0) || p.cost < 0 || p.cost > p.num_tasks) {
        throw InvalidArgument("plan '" + p.plan_id + "': properties violate num_tasks >= 1, makespan > 0, 0 <= cost <= num_tasks");
    }
    const Term plan = vocab::plan_term(p.plan_id);

    // Refuse conflicting re-grounding before touching the store.
    for (auto k : vocab::kPropertyKinds) {
        const Term q = vocab::quality_term(p.plan_id, k);
        const auto lit = value_literal(k, p);
        for (const auto& t : kb.query(Pattern{q, vocab::has_data_value(), std::nullopt})) {
            if (!(t.object == Object{lit})) {
                throw DataError("plan '" + p.plan_id + "' already grounded with a different " +
                                std::string(vocab::to_string(k)) + " value (" + kstore::render(t.object) + ")");
            }
        }
    }

    kb.assert_triple(Triple{plan, vocab::type(), vocab::plan_class()});
    for (auto k : vocab::kPropertyKinds) {
        const Term q = vocab::quality_term(p.plan_id, k);
        kb.assert_triple(Triple{q, vocab::type(), vocab::quality_class()});
        kb.assert_triple(Triple{q, vocab::is_quality_of(), plan});
        kb.assert_triple(Triple{plan, vocab::attribution_predicate(k), q});
        kb.assert_triple(Triple{q, vocab::has_data_value(), value_literal(k, p)});
    }
}

PlanProperties read_properties(const KnowledgeBase& kb, std::string_view plan_id) {
    const Term plan = vocab::plan_term(plan_id);
    PlanProperties p;
    p.plan_id = std::string(plan_id);
    for (auto k : vocab::kPropertyKinds) {
        auto quals = kb.query(Pattern{plan, vocab::attribution_predicate(k), std::nullopt});
        if (quals.empty()) {
            throw DataError("plan '" + p.plan_id + "' has no " + std::string(vocab::to_string(k)) + " quality");
        }
        const auto* q = std::get_if<Term>(&quals.front().object);
        if (!q) throw DataError("plan '" + p.plan_id + "': quality link points at a literal");
        auto values = kb.query(Pattern{*q, vocab::has_data_value(), std::nullopt});
        const Literal* lit = values.empty() ? nullptr : std::get_if<Literal>(&values.front().object);
        if (!lit || !lit->number()) {
            throw DataError("quality '" + q->str() + "' has no numeric value");
        }
        double v = *lit->number();
        switch (k) {
            case PropertyKind::makespan: p.makespan = v; break;
            case PropertyKind::num_tasks: p.num_tasks = static_cast<std::int64_t>(std::llround(v)); break;
            case PropertyKind::cost: p.cost = static_cast<std::int64_t>(std::llround(v)); break;
        }
    }
    return p;
}

json to_json(const PlanProperties& p) {
    return json{{"plan_id", p.plan_id}, {"num_tasks", p.num_tasks}, {"makespan", p.makespan}, {"cost", p.cost}};
}

PlanProperties properties_from_json(const json& j) {
    try {
        PlanProperties p;
        p.plan_id = j.at("plan_id").get<std::string>();
        p.num_tasks = j.at("num_tasks").get<std::int64_t>();
        p.makespan = j.at("makespan").get<double>();
        p.cost = j.at("cost").get<std::int64_t>();
        return p;
    } catch (const json::exception& e) {
        throw DataError(std::string("plan properties: ") + e.what());
    }
}

}  // namespace planex::experiences
