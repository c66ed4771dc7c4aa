#include "planex/refine.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include <httplib.h>

#include "planex/error.hpp"
#include "planex/parallel.hpp"
#include "planex/vocab.hpp"

namespace planex::refine {

using narrative::Clause;
using narrative::ParsedNarrative;
using vocab::PropertyKind;

std::string to_string(Role r) {
    switch (r) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

Role parse_role(std::string_view s) {
    if (s == "system") return Role::system;
    if (s == "user") return Role::user;
    if (s == "assistant") return Role::assistant;
    throw DataError("unknown chat role '" + std::string(s) + "'");
}

const std::string& system_prompt() {
    static const std::string prompt =
        "You are an agent that based on a given ontology-based narrative, shall provide a new narrative that: "
        "(a) is shorter than the original, (b) uses an easier language than the original, and (c) keeps the "
        "semantic meaning of the original.";
    return prompt;
}

// ---------------------------------------------------------------------------
// Deterministic rewrite

namespace {

struct PlanFacts {
    std::string name;
    std::optional<std::string> category;  // "typical", "atypical", ...
    std::map<PropertyKind, std::string> values;
    std::vector<PropertyKind> measured;
};

struct Facts {
    std::string a;
    std::string b;
    std::vector<std::string> adjectives;  // ordered cost, makespan, tasks, overall
    PlanFacts first;
    PlanFacts second;
    bool no_contrast = false;

    PlanFacts* plan(const std::string& name) {
        if (name == first.name) return &first;
        if (name == second.name) return &second;
        return nullptr;
    }
};

int adjective_rank(const kstore::Term& p) {
    int rank = 0;
    for (auto k : {PropertyKind::cost, PropertyKind::makespan, PropertyKind::num_tasks}) {
        auto c = vocab::plan_comparison(k);
        if (p == c.better || p == c.worse) return rank;
        ++rank;
    }
    return rank;
}

// "is more expensive plan than" -> "more expensive"
std::string adjective(std::string_view phrase) {
    constexpr std::string_view head = "is ";
    constexpr std::string_view tail = " plan than";
    if (phrase.substr(0, head.size()) == head) phrase.remove_prefix(head.size());
    if (phrase.size() > tail.size() && phrase.substr(phrase.size() - tail.size()) == tail) {
        phrase.remove_suffix(tail.size());
    }
    return std::string(phrase);
}

// "TypicalPlan" -> "typical"; anything not ending in "Plan" is kept whole.
std::string category(std::string_view cls) {
    std::string words = narrative::split_camel_case(cls);
    std::string lower;
    for (char c : words) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    constexpr std::string_view tail = " plan";
    if (lower.size() > tail.size() && lower.compare(lower.size() - tail.size(), tail.size(), tail) == 0) {
        lower.resize(lower.size() - tail.size());
    }
    return lower;
}

std::string join_list(const std::vector<std::string>& items, bool oxford_and) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) {
            if (oxford_and && i + 1 == items.size()) {
                out += items.size() == 2 ? " and " : ", and ";
            } else {
                out += ", ";
            }
        }
        out += items[i];
    }
    return out;
}

Facts collect(const ParsedNarrative& parsed) {
    Facts f;
    if (parsed.no_contrast) {
        f.no_contrast = true;
        f.a = parsed.no_contrast->first;
        f.b = parsed.no_contrast->second;
        f.first.name = f.a;
        f.second.name = f.b;
        return f;
    }

    std::map<std::string, std::pair<std::string, PropertyKind>> quality_owner;
    std::vector<std::pair<int, std::string>> ranked;
    std::vector<std::pair<std::string, std::string>> values;  // quality -> lexical

    auto note_plan = [&](const std::string& name) {
        if (f.first.name.empty()) {
            f.first.name = name;
        } else if (f.second.name.empty() && name != f.first.name) {
            f.second.name = name;
        }
    };

    for (const auto& sentence : parsed.sentences) {
        for (const Clause& c : sentence.clauses) {
            for (const auto& phrase : c.predicates) {
                auto p = narrative::predicate_for_phrase(phrase);
                if (!p) continue;
                if (vocab::is_plan_comparison(*p)) {
                    note_plan(c.subject);
                    note_plan(c.object);
                    ranked.emplace_back(adjective_rank(*p), adjective(phrase));
                } else if (*p == vocab::plan_classified_by()) {
                    note_plan(c.subject);
                    if (auto* pf = f.plan(c.subject)) pf->category = category(c.object);
                } else if (*p == vocab::has_data_value()) {
                    values.emplace_back(c.subject, c.object);
                } else {
                    for (auto k : vocab::kPropertyKinds) {
                        if (*p != vocab::attribution_predicate(k)) continue;
                        note_plan(c.subject);
                        quality_owner[c.object] = {c.subject, k};
                        if (auto* pf = f.plan(c.subject)) pf->measured.push_back(k);
                    }
                }
            }
        }
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& x, const auto& y) { return x.first < y.first; });
    for (auto& [rank, adj] : ranked) f.adjectives.push_back(std::move(adj));
    for (const auto& [quality, lexical] : values) {
        auto it = quality_owner.find(quality);
        if (it == quality_owner.end()) continue;
        if (auto* pf = f.plan(it->second.first)) pf->values[it->second.second] = lexical;
    }
    f.a = f.first.name;
    f.b = f.second.name;
    return f;
}

std::string kind_noun(PropertyKind k) {
    switch (k) {
        case PropertyKind::makespan: return "makespan";
        case PropertyKind::num_tasks: return "number of tasks";
        case PropertyKind::cost: return "cost";
    }
    return "";
}

// "takes 28.20 time units, has 12 tasks, and costs 0"
std::string value_clause(const PlanFacts& p) {
    std::vector<std::string> parts;
    for (auto k : vocab::kPropertyKinds) {
        auto it = p.values.find(k);
        if (it == p.values.end()) continue;
        switch (k) {
            case PropertyKind::makespan: parts.push_back("takes " + it->second + " time units"); break;
            case PropertyKind::num_tasks: parts.push_back("has " + it->second + " tasks"); break;
            case PropertyKind::cost: parts.push_back("costs " + it->second); break;
        }
    }
    return join_list(parts, true);
}

// "28.20 units, 18 tasks, and cost 3"
std::string value_nouns(const PlanFacts& p) {
    std::vector<std::string> parts;
    for (auto k : vocab::kPropertyKinds) {
        auto it = p.values.find(k);
        if (it == p.values.end()) continue;
        switch (k) {
            case PropertyKind::makespan: parts.push_back(it->second + " units"); break;
            case PropertyKind::num_tasks: parts.push_back(it->second + " tasks"); break;
            case PropertyKind::cost: parts.push_back("cost " + it->second); break;
        }
    }
    return join_list(parts, true);
}

// "takes 28.20 units, has 12 tasks, and costs 0"
std::string short_value_clause(const PlanFacts& p) {
    std::vector<std::string> parts;
    for (auto k : vocab::kPropertyKinds) {
        auto it = p.values.find(k);
        if (it == p.values.end()) continue;
        switch (k) {
            case PropertyKind::makespan: parts.push_back("takes " + it->second + " units"); break;
            case PropertyKind::num_tasks: parts.push_back("has " + it->second + " tasks"); break;
            case PropertyKind::cost: parts.push_back("costs " + it->second); break;
        }
    }
    return join_list(parts, true);
}

std::string join_sentences(const std::vector<std::string>& sentences) {
    std::string out;
    for (const auto& s : sentences) {
        if (!out.empty()) out += ' ';
        out += s;
    }
    return out;
}

std::string render_initial(const Facts& f) {
    if (f.no_contrast) return f.a + " and " + f.b + " do not differ.";
    std::vector<std::string> out;
    if (!f.adjectives.empty()) {
        out.push_back(f.a + " is " + join_list(f.adjectives, true) + " than " + f.b + ".");
    }

    const bool has_values = !f.first.values.empty() || !f.second.values.empty();
    if (has_values) {
        for (const auto* p : {&f.first, &f.second}) {
            if (!p->values.empty()) out.push_back(p->name + " " + value_clause(*p) + ".");
        }
    } else {
        std::vector<std::string> nouns;
        for (auto k : vocab::kPropertyKinds) {
            const auto& m1 = f.first.measured;
            const auto& m2 = f.second.measured;
            if (std::find(m1.begin(), m1.end(), k) != m1.end() || std::find(m2.begin(), m2.end(), k) != m2.end()) {
                nouns.push_back(kind_noun(k));
            }
        }
        if (!nouns.empty()) out.push_back(f.a + " and " + f.b + " are measured by " + join_list(nouns, true) + ".");
    }

    std::vector<std::string> classes;
    for (const auto* p : {&f.first, &f.second}) {
        if (!p->category) continue;
        const auto& c = *p->category;
        const bool vowel = !c.empty() && std::string_view("aeiou").find(c.front()) != std::string_view::npos;
        classes.push_back(p->name + " is " + (vowel ? "an " : "a ") + c + " plan");
    }
    if (!classes.empty()) {
        std::string s = classes[0];
        if (classes.size() > 1) s += "; " + classes[1];
        out.push_back(s + ".");
    }
    if (out.empty()) return f.a + " and " + f.b + " do not differ.";
    return join_sentences(out);
}

std::string render_short(const Facts& f) {
    if (f.no_contrast || f.adjectives.empty()) return f.a + " equals " + f.b + ".";
    auto tagged = [](const PlanFacts& p) { return p.category ? p.name + " (" + *p.category + ")" : p.name; };
    std::vector<std::string> out;
    out.push_back(tagged(f.first) + " vs " + tagged(f.second) + ": " + join_list(f.adjectives, false) + ".");
    if (!f.first.values.empty() && !f.second.values.empty()) {
        out.push_back("It " + short_value_clause(f.first) + ", versus " + f.second.name + "'s " +
                      value_nouns(f.second) + ".");
    } else {
        for (const auto* p : {&f.first, &f.second}) {
            if (!p->values.empty()) out.push_back(p->name + " " + short_value_clause(*p) + ".");
        }
    }
    return join_sentences(out);
}

bool asks_for_shorter(std::string_view request) {
    std::string lower;
    for (char c : request) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (std::string_view cue : {"short", "brief", "concise", "compress"}) {
        if (lower.find(cue) != std::string::npos) return true;
    }
    return false;
}

}  // namespace

std::string deterministic_refine(std::string_view narrative_text, Mode mode) {
    const auto facts = collect(narrative::parse(narrative_text));
    return mode == Mode::shorten ? render_short(facts) : render_initial(facts);
}

std::string DeterministicBackend::complete(const std::vector<ChatMessage>& messages) {
    const ChatMessage* source = nullptr;
    const ChatMessage* last_user = nullptr;
    for (const auto& m : messages) {
        if (m.role != Role::user) continue;
        if (!source) source = &m;
        last_user = &m;
    }
    if (!source) throw BackendError("deterministic backend: conversation has no user message");
    const Mode mode = (last_user != source && asks_for_shorter(last_user->content)) ? Mode::shorten : Mode::initial;
    try {
        return deterministic_refine(source->content, mode);
    } catch (const DataError& e) {
        throw BackendError(std::string("deterministic backend: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Remote backend

void RemoteConfig::validate() const {
    if (base_url.empty()) throw InvalidArgument("remote backend: base_url is required");
    if (base_url.rfind("https://", 0) == 0) {
        throw InvalidArgument("remote backend: https is not supported, use a plain http endpoint or a local proxy");
    }
    if (base_url.rfind("http://", 0) != 0) throw InvalidArgument("remote backend: base_url must start with http://");
    if (model.empty()) throw InvalidArgument("remote backend: model is required");
    if (path.empty() || path.front() != '/') throw InvalidArgument("remote backend: path must start with '/'");
    if (attempts < 1) throw InvalidArgument("remote backend: attempts must be at least 1");
    if (!token_env.empty() && std::getenv(token_env.c_str()) == nullptr) {
        throw InvalidArgument("remote backend: environment variable " + token_env + " is not set");
    }
}

RemoteConfig RemoteConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InvalidArgument("remote backend config must be an object");
    RemoteConfig c;
    try {
        c.base_url = j.value("base_url", c.base_url);
        c.path = j.value("path", c.path);
        c.model = j.value("model", c.model);
        c.token_env = j.value("token_env", c.token_env);
        c.timeout = std::chrono::milliseconds(j.value("timeout_ms", static_cast<long long>(c.timeout.count())));
        c.attempts = j.value("attempts", c.attempts);
        c.backoff = std::chrono::milliseconds(j.value("backoff_ms", static_cast<long long>(c.backoff.count())));
        c.verbose = j.value("verbose", c.verbose);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("remote backend config: ") + e.what());
    }
    return c;
}

nlohmann::json RemoteConfig::to_json() const {
    return {{"base_url", base_url},      {"path", path},
            {"model", model},            {"token_env", token_env},
            {"timeout_ms", timeout.count()}, {"attempts", attempts},
            {"backoff_ms", backoff.count()}, {"verbose", verbose}};
}

HttpChatBackend::HttpChatBackend(RemoteConfig config, std::ostream* log) : config_(std::move(config)), log_(log) {
    config_.validate();
    if (!config_.token_env.empty()) token_ = std::getenv(config_.token_env.c_str());
}

nlohmann::json HttpChatBackend::request_body(const std::string& model, const std::vector<ChatMessage>& messages) {
    nlohmann::json msgs = nlohmann::json::array();
    for (const auto& m : messages) msgs.push_back(to_json(m));
    return {{"model", model}, {"messages", msgs}, {"stream", false}, {"options", {{"temperature", 0}}}};
}

std::string HttpChatBackend::parse_reply(std::string_view body) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        throw BackendError(std::string("backend reply is not JSON: ") + e.what());
    }
    const nlohmann::json* content = nullptr;
    if (j.contains("message") && j["message"].is_object() && j["message"].contains("content")) {
        content = &j["message"]["content"];
    } else if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
        const auto& c0 = j["choices"][0];
        if (c0.contains("message") && c0["message"].contains("content")) content = &c0["message"]["content"];
    }
    if (!content || !content->is_string()) throw BackendError("backend reply has no message content");
    auto text = content->get<std::string>();
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw BackendError("backend replied with empty content");
    return text;
}

std::string HttpChatBackend::complete(const std::vector<ChatMessage>& messages) {
    const std::string body = request_body(config_.model, messages).dump();
    auto redact = [&](std::string s) {
        if (token_.empty()) return s;
        for (auto at = s.find(token_); at != std::string::npos; at = s.find(token_, at)) s.replace(at, token_.size(), "***");
        return s;
    };
    if (config_.verbose && log_) {
        *log_ << "POST " << config_.base_url << config_.path;
        if (!token_.empty()) *log_ << " (Authorization: Bearer ***)";
        *log_ << "\n" << redact(body) << "\n";
    }

    httplib::Client client(config_.base_url);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

    std::string last_error;
    auto delay = config_.backoff;
    for (int attempt = 1; attempt <= config_.attempts; ++attempt) {
        auto res = client.Post(config_.path, headers, body, "application/json");
        if (!res) {
            last_error = "request failed: " + httplib::to_string(res.error());
        } else {
            if (config_.verbose && log_) *log_ << "HTTP " << res->status << "\n" << redact(res->body) << "\n";
            if (res->status == 200) return parse_reply(res->body);
            last_error = "HTTP " + std::to_string(res->status);
            if (res->status != 429 && res->status < 500) throw BackendError("backend rejected the request: " + last_error);
        }
        if (log_) *log_ << "backend attempt " << attempt << "/" << config_.attempts << " failed: " << last_error << "\n";
        if (attempt < config_.attempts) {
            std::this_thread::sleep_for(delay);
            delay *= 2;
        }
    }
    throw BackendError("backend unreachable after " + std::to_string(config_.attempts) + " attempts: " + last_error);
}

// ---------------------------------------------------------------------------
// Sessions

std::string session_id_for(std::string_view narrative_ref) { return "s-" + std::string(narrative_ref); }

Refinement refine(const narrative::Narrative& n, RefinerBackend& backend) {
    if (n.text.find_first_not_of(" \t\r\n") == std::string::npos) {
        throw InvalidArgument("cannot refine an empty narrative");
    }
    Refinement r;
    r.session.narrative_ref = n.ref();
    r.session.session_id = session_id_for(r.session.narrative_ref);
    r.session.messages = {{Role::system, system_prompt()}, {Role::user, n.text}};
    auto reply = backend.complete(r.session.messages);
    if (reply.empty()) throw BackendError("backend replied with empty content");
    r.session.messages.push_back({Role::assistant, reply});
    r.revisions.push_back({std::move(reply), r.session.narrative_ref, n.level, 0});
    return r;
}

const Explanation& follow_up(Refinement& r, std::string_view request, RefinerBackend& backend) {
    if (r.revisions.empty()) throw InvalidArgument("follow-up needs an initial explanation");
    if (request.find_first_not_of(" \t\r\n") == std::string_view::npos) {
        throw InvalidArgument("follow-up request is empty");
    }
    auto messages = r.session.messages;
    messages.push_back({Role::user, std::string(request)});
    auto reply = backend.complete(messages);
    if (reply.empty()) throw BackendError("backend replied with empty content");
    messages.push_back({Role::assistant, reply});

    const auto& prev = r.revisions.back();
    Explanation next{std::move(reply), prev.narrative_ref, prev.level, prev.revision + 1};
    r.revisions.push_back(std::move(next));
    r.session.messages = std::move(messages);
    return r.revisions.back();
}

std::vector<Refinement> refine_all(const std::vector<narrative::Narrative>& narratives, RefinerBackend& backend,
                                   const BatchOptions& options) {
    std::vector<Refinement> out(narratives.size());
    std::atomic<std::size_t> done{0};
    std::mutex progress_mutex;
    parallel_for(
        narratives.size(),
        [&](std::size_t i) {
            auto r = refine(narratives[i], backend);
            if (!options.follow_up.empty()) follow_up(r, options.follow_up, backend);
            out[i] = std::move(r);
            const auto finished = ++done;
            if (options.progress) {
                std::lock_guard lock(progress_mutex);
                options.progress(finished, narratives.size());
            }
        },
        std::max<std::size_t>(options.in_flight, 1));
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json to_json(const ChatMessage& m) { return {{"role", to_string(m.role)}, {"content", m.content}}; }

ChatMessage message_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("role") || !j.contains("content") || !j["role"].is_string() ||
        !j["content"].is_string()) {
        throw DataError("chat message needs string 'role' and 'content'");
    }
    ChatMessage m{parse_role(j["role"].get<std::string>()), j["content"].get<std::string>()};
    if (m.content.empty()) throw DataError("chat message content is empty");
    return m;
}

nlohmann::json to_json(const Refinement& r) {
    nlohmann::json revisions = nlohmann::json::array();
    for (const auto& e : r.revisions) revisions.push_back({{"revision", e.revision}, {"text", e.text}});
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& m : r.session.messages) messages.push_back(to_json(m));
    const auto level = r.revisions.empty() ? 0 : narrative::to_int(r.revisions.front().level);
    return {{"narrative_ref", r.session.narrative_ref},
            {"level", level},
            {"session_id", r.session.session_id},
            {"revisions", revisions},
            {"messages", messages}};
}

Refinement refinement_from_json(const nlohmann::json& j) {
    try {
        Refinement r;
        r.session.narrative_ref = j.at("narrative_ref").get<std::string>();
        r.session.session_id = j.at("session_id").get<std::string>();
        const auto level = narrative::specificity_from_int(j.at("level").get<int>());
        for (const auto& m : j.at("messages")) r.session.messages.push_back(message_from_json(m));
        for (const auto& e : j.at("revisions")) {
            Explanation x{e.at("text").get<std::string>(), r.session.narrative_ref, level,
                          e.at("revision").get<std::size_t>()};
            if (x.revision != r.revisions.size()) throw DataError("explanation revisions out of sequence");
            r.revisions.push_back(std::move(x));
        }
        if (r.revisions.empty()) throw DataError("explanation without revisions");
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("explanation record: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw DataError(std::string("explanation record: ") + e.what());
    }
}

std::unique_ptr<RefinerBackend> make_backend(std::string_view name, const RemoteConfig& remote, std::ostream* log) {
    if (name == "deterministic") return std::make_unique<DeterministicBackend>();
    if (name == "remote") return std::make_unique<HttpChatBackend>(remote, log);
    throw InvalidArgument("unknown backend '" + std::string(name) + "' (expected deterministic or remote)");
}

}  // namespace planex::refine
