#pragma once

// Narrative -> explanation through a chat model, with follow-up requests on
// the same session. The deterministic backend is a rule-based stand-in that
// needs no model.

#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "planex/narrative.hpp"

namespace planex::refine {

enum class Role { system, user, assistant };

std::string to_string(Role r);
Role parse_role(std::string_view s);

struct ChatMessage {
    Role role = Role::user;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

// The instruction sent as the system message of every session.
const std::string& system_prompt();

inline constexpr std::string_view kShortenRequest = "Make the explanation shorter";

class RefinerBackend {
public:
    virtual ~RefinerBackend() = default;
    // Returns the assistant reply to the conversation so far. Throws
    // BackendError when no usable reply can be obtained.
    virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
    virtual std::string name() const = 0;
};

enum class Mode { initial, shorten };

// Rule-based rewrite of narrative text. Throws DataError when the text does
// not follow the narrative grammar.
std::string deterministic_refine(std::string_view narrative_text, Mode mode);

// Replies from the first user message (the narrative). A later user request
// asking for something shorter switches to Mode::shorten; any other request
// gets the initial rewrite again.
class DeterministicBackend final : public RefinerBackend {
public:
    std::string complete(const std::vector<ChatMessage>& messages) override;
    std::string name() const override { return "deterministic"; }
};

struct RemoteConfig {
    std::string base_url;  // http://host:port
    std::string path = "/api/chat";
    std::string model;
    std::string token_env;  // empty: no Authorization header
    std::chrono::milliseconds timeout{120000};
    int attempts = 3;
    std::chrono::milliseconds backoff{500};  // doubled after each failed attempt
    bool verbose = false;

    // Throws InvalidArgument on a missing/unsupported URL or model, or when
    // token_env names an unset variable.
    void validate() const;
    static RemoteConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

// POST {model, messages, stream:false, options:{temperature:0}} and read
// {message:{content}} (or the choices[0].message.content form).
class HttpChatBackend final : public RefinerBackend {
public:
    explicit HttpChatBackend(RemoteConfig config, std::ostream* log = nullptr);
    std::string complete(const std::vector<ChatMessage>& messages) override;
    std::string name() const override { return "remote:" + config_.model; }

    static nlohmann::json request_body(const std::string& model, const std::vector<ChatMessage>& messages);
    // Throws BackendError when the body holds no non-empty reply.
    static std::string parse_reply(std::string_view body);

private:
    RemoteConfig config_;
    std::string token_;
    std::ostream* log_;
};

struct RefinementSession {
    std::string session_id;
    std::string narrative_ref;
    std::vector<ChatMessage> messages;
};

struct Explanation {
    std::string text;
    std::string narrative_ref;
    narrative::Specificity level = narrative::Specificity::low;
    std::size_t revision = 0;
};

struct Refinement {
    RefinementSession session;
    std::vector<Explanation> revisions;  // revisions[i].revision == i

    const Explanation& latest() const { return revisions.back(); }
};

// Revision 0 for the narrative. Throws InvalidArgument on empty text and
// BackendError when the backend fails or replies with nothing.
Refinement refine(const narrative::Narrative& n, RefinerBackend& backend);

// Appends the request and the reply; on failure the refinement is left as it
// was.
const Explanation& follow_up(Refinement& r, std::string_view request, RefinerBackend& backend);

struct BatchOptions {
    std::size_t in_flight = 4;
    std::string follow_up;  // applied once to every refinement when non-empty
    std::function<void(std::size_t done, std::size_t total)> progress;
};

// Results are in input order. The backend must tolerate concurrent calls.
std::vector<Refinement> refine_all(const std::vector<narrative::Narrative>& narratives, RefinerBackend& backend,
                                   const BatchOptions& options = {});

// "Plan_01~Plan_02@3" -> "s-Plan_01~Plan_02@3"
std::string session_id_for(std::string_view narrative_ref);

nlohmann::json to_json(const ChatMessage& m);
ChatMessage message_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Refinement& r);
Refinement refinement_from_json(const nlohmann::json& j);

// Backend from a name ("deterministic" or "remote"); the remote config is
// validated.
std::unique_ptr<RefinerBackend> make_backend(std::string_view name, const RemoteConfig& remote,
                                             std::ostream* log = nullptr);

}  // namespace planex::refine
