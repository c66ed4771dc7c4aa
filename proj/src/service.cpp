#include "planex/service.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <map>
#include <mutex>
#include <regex>
#include <shared_mutex>
#include <thread>

#include <httplib.h>

#include "planex/error.hpp"
#include "planex/evalmetrics.hpp"
#include "planex/experiences.hpp"
#include "planex/pipeline.hpp"

namespace planex::service {

namespace fs = std::filesystem;
using nlohmann::json;
using pipeline::RunDir;
using pipeline::Stage;

namespace {

constexpr int kMaxGeneratedPlans = 500;
constexpr double kDefaultAlpha = 0.68;

struct HttpError : Error {
    HttpError(int status, const std::string& what) : Error(what), status(status) {}
    int status;
};

struct Reply {
    int status = 200;
    json body;
};

struct Route {
    std::string method;
    std::string path;   // documented form, e.g. /runs/{id}
    std::string regex;  // httplib pattern
    std::string summary;
    json request;       // documented body fields
    std::vector<int> responses;
    std::function<Reply(const httplib::Request&)> handler;
};

struct Job {
    std::string status = "idle";  // idle, running, succeeded, failed
    std::size_t done = 0;
    std::size_t total = 0;
    std::string backend;
    std::string error;
    int error_status = 0;

    json to_json() const {
        json j{{"status", status}, {"done", done}, {"total", total}, {"backend", backend}};
        j["error"] = error.empty() ? json(nullptr) : json(error);
        j["error_status"] = error_status ? json(error_status) : json(nullptr);
        return j;
    }
};

struct RunEntry {
    explicit RunEntry(fs::path dir) : run(std::move(dir)) {}
    RunDir run;
    std::shared_mutex mutex;  // readers share, stage changes and follow-ups are exclusive
    std::mutex job_mutex;
    Job job;
    std::jthread worker;

    bool job_running() {
        std::lock_guard lock(job_mutex);
        return job.status == "running";
    }
};

json error_body(const std::string& message) { return {{"error", message}}; }

json parse_body(const httplib::Request& req, int status_on_error) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw HttpError(status_on_error, std::string("request body is not valid JSON: ") + e.what());
    }
}

std::vector<std::string> sorted_plan_ids(const RunDir& run) {
    std::vector<std::string> ids;
    for (const auto& p : run.properties()) ids.push_back(p.plan_id);
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::vector<int> narrated_levels(const pipeline::RunState& state) {
    for (const auto& r : state.completed) {
        if (r.stage == Stage::narrated) return r.params.at("levels").get<std::vector<int>>();
    }
    return {};
}

}  // namespace

struct Service::Impl {
    ServiceConfig config;
    httplib::Server server;
    std::vector<Route> routes;
    std::shared_mutex registry_mutex;
    std::map<std::string, std::shared_ptr<RunEntry>> runs;
    std::size_t next_id = 1;
    refine::DeterministicBackend deterministic;
    std::unique_ptr<refine::HttpChatBackend> remote;

    explicit Impl(ServiceConfig c) : config(std::move(c)) {
        if (config.backend != "deterministic" && config.backend != "remote") {
            throw InvalidArgument("unknown backend '" + config.backend + "'");
        }
        if (config.backend == "remote" || config.remote_configured) {
            remote = std::make_unique<refine::HttpChatBackend>(config.remote, config.log);
        }
        fs::create_directories(config.data_dir / "runs");
        load_runs();
        build_routes();
        install();
    }

    fs::path runs_dir() const { return config.data_dir / "runs"; }

    void load_runs() {
        for (const auto& e : fs::directory_iterator(runs_dir())) {
            if (!e.is_directory()) continue;
            const auto id = e.path().filename().string();
            auto entry = std::make_shared<RunEntry>(e.path());
            if (!entry->run.exists()) continue;
            runs[id] = entry;
            if (id.rfind("run-", 0) == 0) {
                try {
                    next_id = std::max<std::size_t>(next_id, std::stoul(id.substr(4)) + 1);
                } catch (const std::exception&) {
                }
            }
        }
    }

    std::shared_ptr<RunEntry> find_run(const std::string& id) {
        std::shared_lock lock(registry_mutex);
        auto it = runs.find(id);
        if (it == runs.end()) throw HttpError(404, "unknown run '" + id + "'");
        return it->second;
    }

    refine::RefinerBackend& backend_for(const std::string& name) {
        if (name == "deterministic") return deterministic;
        if (name == "remote" || name.rfind("remote:", 0) == 0) {
            if (!remote) throw HttpError(422, "no remote backend is configured on this service");
            return *remote;
        }
        throw HttpError(422, "unknown backend '" + name + "'");
    }

    // ---------------------------------------------------------------------

    Reply create_run(const httplib::Request& req) {
        const auto body = parse_body(req, 400);
        std::vector<experiences::ExperienceRecord> corpus;
        json params;
        try {
            if (body.is_array() || (body.is_object() && body.contains("corpus"))) {
                const auto& c = body.is_array() ? body : body["corpus"];
                corpus = experiences::parse_experiences(c.dump());
                params = {{"source", "upload"}};
            } else if (body.is_object() && body.contains("generate")) {
                const auto& g = body["generate"];
                if (!g.is_object()) throw HttpError(400, "generate: expected an object");
                if (!g.contains("seed") || !g["seed"].is_number_integer()) {
                    throw HttpError(400, "generate.seed: integer required");
                }
                const int n = g.value("n", 18);
                if (n < 2 || n > kMaxGeneratedPlans) {
                    throw HttpError(400, "generate.n: must lie in [2, " + std::to_string(kMaxGeneratedPlans) + "]");
                }
                const auto cfg = experiences::GenConfig::from_json(g.value("config", json::object()));
                const auto seed = g["seed"].get<std::uint64_t>();
                corpus = experiences::generate_synthetic(seed, n, cfg);
                params = {{"source", "generate"}, {"seed", seed}, {"n", n}, {"config", cfg.to_json()}};
            } else {
                throw HttpError(400, "expected an experience array, {\"corpus\": [...]} or {\"generate\": {...}}");
            }
        } catch (const json::exception& e) {
            throw HttpError(400, e.what());
        } catch (const DataError& e) {
            throw HttpError(400, e.what());
        } catch (const InvalidArgument& e) {
            throw HttpError(400, e.what());
        }
        if (corpus.size() < 2) throw HttpError(400, "a corpus needs at least two plans");

        std::unique_lock lock(registry_mutex);
        std::string id;
        do {
            char buf[32];
            std::snprintf(buf, sizeof buf, "run-%04zu", next_id++);
            id = buf;
        } while (fs::exists(runs_dir() / id));
        auto entry = std::make_shared<RunEntry>(runs_dir() / id);
        try {
            pipeline::ingest(entry->run, corpus, id, params, pipeline::Rerun::forbid);
        } catch (const DataError& e) {
            fs::remove_all(runs_dir() / id);
            throw HttpError(400, e.what());
        }
        runs[id] = entry;
        return {201, {{"id", id}, {"state", entry->run.state().to_json()}}};
    }

    Reply list_runs(const httplib::Request&) {
        std::vector<std::pair<std::string, std::shared_ptr<RunEntry>>> all;
        {
            std::shared_lock lock(registry_mutex);
            all.assign(runs.begin(), runs.end());
        }
        json out = json::array();
        for (const auto& [id, entry] : all) {
            std::shared_lock lock(entry->mutex);
            auto st = entry->run.state().stage();
            out.push_back({{"id", id}, {"stage", st ? json(pipeline::to_string(*st)) : json(nullptr)}});
        }
        return {200, {{"runs", out}}};
    }

    Reply get_run(const httplib::Request& req) {
        const auto id = req.matches[1].str();
        auto entry = find_run(id);
        std::shared_lock lock(entry->mutex);
        json job;
        {
            std::lock_guard jl(entry->job_mutex);
            job = entry->job.status == "idle" ? json(nullptr) : entry->job.to_json();
        }
        return {200, {{"id", id}, {"state", entry->run.state().to_json()}, {"job", job}}};
    }

    Reply advance(const httplib::Request& req) {
        const auto id = req.matches[1].str();
        auto entry = find_run(id);
        const auto body = parse_body(req, 422);
        if (!body.is_object() || !body.contains("stage") || !body["stage"].is_string()) {
            throw HttpError(422, "body must name the target stage: {\"stage\": ..., \"params\": {...}}");
        }
        Stage stage;
        try {
            stage = pipeline::parse_stage(body["stage"].get<std::string>());
        } catch (const InvalidArgument& e) {
            throw HttpError(422, e.what());
        }
        const json params = body.value("params", json::object());
        if (!params.is_object()) throw HttpError(422, "params must be an object");

        std::unique_lock lock(entry->mutex);
        if (entry->job_running()) throw HttpError(409, "a refinement job is still running for this run");
        const auto state = entry->run.state();
        try {
            pipeline::check_can_run(state, stage, pipeline::Rerun::forbid);
        } catch (const StageError& e) {
            throw HttpError(409, e.what());
        }

        json result;
        try {
            switch (stage) {
                case Stage::ingested:
                    throw HttpError(409, "runs are ingested when they are created");
                case Stage::classified: {
                    const auto& a = params.contains("alpha") ? params["alpha"] : json(kDefaultAlpha);
                    if (!a.is_number()) throw HttpError(422, "params.alpha: number required");
                    const double alpha = a.get<double>();
                    if (!(alpha > 0.0 && alpha < 1.0)) throw HttpError(422, "params.alpha: must lie in (0, 1)");
                    pipeline::classify(entry->run, alpha, pipeline::Rerun::forbid);
                    json ivs = json::array();
                    for (const auto& [k, iv] : entry->run.hdi()) ivs.push_back(typicality::to_json(iv));
                    result = {{"alpha", alpha}, {"intervals", ivs}};
                    break;
                }
                case Stage::inferred:
                    pipeline::infer(entry->run, pipeline::Rerun::forbid);
                    result = entry->run.inference();
                    break;
                case Stage::narrated: {
                    pipeline::NarrateParams np;
                    if (params.contains("specificity")) {
                        if (!params["specificity"].is_number_integer()) {
                            throw HttpError(422, "params.specificity: integer 1-3 required");
                        }
                        np.levels = {params["specificity"].get<int>()};
                    } else if (params.contains("levels")) {
                        if (!params["levels"].is_array()) throw HttpError(422, "params.levels: array required");
                        np.levels.clear();
                        for (const auto& l : params["levels"]) {
                            if (!l.is_number_integer()) throw HttpError(422, "params.levels: integers 1-3 required");
                            np.levels.push_back(l.get<int>());
                        }
                    }
                    for (int l : np.levels) {
                        if (l < 1 || l > 3) throw HttpError(422, "specificity must be 1, 2 or 3");
                    }
                    pipeline::narrate(entry->run, np, pipeline::Rerun::forbid);
                    std::map<int, std::size_t> per_level;
                    for (const auto& n : entry->run.narratives()) ++per_level[narrative::to_int(n.level)];
                    json counts = json::object();
                    std::size_t total = 0;
                    for (auto [l, c] : per_level) {
                        counts[std::to_string(l)] = c;
                        total += c;
                    }
                    result = {{"narratives", total}, {"per_level", counts}};
                    break;
                }
                case Stage::refined:
                    return start_refinement(entry, params);
                case Stage::evaluated: {
                    if (!params.contains("mu0") || !params["mu0"].is_number()) {
                        throw HttpError(422, "params.mu0: number required (null value of the similarity test)");
                    }
                    pipeline::evaluate(entry->run, {params["mu0"].get<double>()}, pipeline::Rerun::forbid);
                    result = entry->run.report().at("tables");
                    break;
                }
            }
        } catch (const InvalidArgument& e) {
            throw HttpError(422, e.what());
        } catch (const StageError& e) {
            throw HttpError(409, e.what());
        }
        return {200, {{"id", id}, {"state", entry->run.state().to_json()}, {"result", result}}};
    }

    // Caller holds the run's exclusive lock.
    Reply start_refinement(const std::shared_ptr<RunEntry>& entry, const json& params) {
        const std::string backend_name = params.value("backend", config.backend);
        auto& backend = backend_for(backend_name);
        pipeline::ExplainParams ep;
        if (params.contains("follow_up")) {
            if (!params["follow_up"].is_string()) throw HttpError(422, "params.follow_up: string required");
            ep.follow_up = params["follow_up"].get<std::string>();
        }
        ep.in_flight = params.value("in_flight", config.in_flight);
        if (ep.in_flight == 0) throw HttpError(422, "params.in_flight: must be positive");
        const bool wait = params.value("wait", false);
        const auto total = entry->run.narratives().size();
        {
            std::lock_guard jl(entry->job_mutex);
            entry->job = Job{"running", 0, total, backend.name(), "", 0};
        }
        std::weak_ptr<RunEntry> weak = entry;
        ep.progress = [weak](std::size_t done, std::size_t) {
            if (auto e = weak.lock()) {
                std::lock_guard jl(e->job_mutex);
                e->job.done = done;
            }
        };

        auto work = [entry, &backend, ep]() {
            std::string error;
            int status = 0;
            try {
                pipeline::explain(entry->run, backend, ep, pipeline::Rerun::forbid);
            } catch (const BackendError& e) {
                error = e.what();
                status = 502;
            } catch (const StageError& e) {
                error = e.what();
                status = 409;
            } catch (const std::exception& e) {
                error = e.what();
                status = 500;
            }
            std::lock_guard jl(entry->job_mutex);
            entry->job.status = error.empty() ? "succeeded" : "failed";
            entry->job.error = error;
            entry->job.error_status = status;
            if (error.empty()) entry->job.done = entry->job.total;
        };

        if (wait) {
            work();
            std::lock_guard jl(entry->job_mutex);
            if (entry->job.status == "failed") throw HttpError(entry->job.error_status, entry->job.error);
            return {200, {{"id", entry->run.state().corpus_id}, {"state", entry->run.state().to_json()},
                          {"job", entry->job.to_json()}}};
        }
        if (entry->worker.joinable()) entry->worker.join();
        entry->worker = std::jthread(work);
        std::lock_guard jl(entry->job_mutex);
        return {202, {{"id", entry->run.state().corpus_id}, {"state", entry->run.state().to_json()},
                      {"job", entry->job.to_json()}}};
    }

    Reply list_pairs(const httplib::Request& req) {
        const auto id = req.matches[1].str();
        auto entry = find_run(id);
        std::shared_lock lock(entry->mutex);
        const auto state = entry->run.state();
        const auto ids = sorted_plan_ids(entry->run);
        json pairs = json::array();
        for (std::size_t i = 0; i < ids.size(); ++i) {
            for (std::size_t j = i + 1; j < ids.size(); ++j) {
                pairs.push_back({{"pair_id", narrative::pair_id(ids[i], ids[j])}, {"a", ids[i]}, {"b", ids[j]}});
            }
        }
        return {200, {{"id", id}, {"levels", narrated_levels(state)}, {"count", pairs.size()}, {"pairs", pairs}}};
    }

    // Canonical (a < b) pair id of a plan pair in the run, or 404.
    std::pair<std::string, std::string> resolve_pair(const RunDir& run, const std::string& pid) {
        std::pair<std::string, std::string> ab;
        try {
            ab = narrative::split_pair_id(pid);
        } catch (const InvalidArgument&) {
            throw HttpError(404, "unknown pair '" + pid + "'");
        }
        const auto ids = sorted_plan_ids(run);
        const bool known = std::binary_search(ids.begin(), ids.end(), ab.first) &&
                           std::binary_search(ids.begin(), ids.end(), ab.second) && ab.first < ab.second;
        if (!known) throw HttpError(404, "unknown pair '" + pid + "'");
        return ab;
    }

    int pick_level(const httplib::Request& req, const json& body, const std::vector<int>& levels) {
        std::optional<int> wanted;
        if (req.has_param("level")) {
            try {
                wanted = std::stoi(req.get_param_value("level"));
            } catch (const std::exception&) {
                throw HttpError(400, "level: integer 1-3 required");
            }
        } else if (body.is_object() && body.contains("level")) {
            if (!body["level"].is_number_integer()) throw HttpError(400, "level: integer 1-3 required");
            wanted = body["level"].get<int>();
        }
        if (wanted && (*wanted < 1 || *wanted > 3)) throw HttpError(400, "level: integer 1-3 required");
        if (wanted) return *wanted;
        return levels.empty() ? 0 : *std::max_element(levels.begin(), levels.end());
    }

    Reply get_pair(const httplib::Request& req) {
        const auto id = req.matches[1].str();
        const auto pid = req.matches[2].str();
        auto entry = find_run(id);
        std::shared_lock lock(entry->mutex);
        const auto [a, b] = resolve_pair(entry->run, pid);
        const auto state = entry->run.state();
        const auto levels = narrated_levels(state);
        const int level = pick_level(req, json(), levels);
        const std::string ref = narrative::pair_id(a, b) + "@" + std::to_string(level);

        json out{{"id", id}, {"pair_id", narrative::pair_id(a, b)}, {"a", a}, {"b", b},
                 {"level", level ? json(level) : json(nullptr)}, {"levels", levels}};
        out["narrative"] = nullptr;
        out["explanation"] = nullptr;
        out["metrics"] = nullptr;
        out["session"] = nullptr;
        if (state.reached(Stage::narrated)) {
            for (const auto& n : entry->run.narratives()) {
                if (n.ref() == ref) out["narrative"] = {{"ref", ref}, {"text", n.text}, {"tuple_count", n.tuple_count}};
            }
        }
        if (state.reached(Stage::refined)) {
            for (const auto& r : entry->run.explanations()) {
                if (r.session.narrative_ref != ref) continue;
                out["explanation"] = {{"text", r.latest().text},
                                      {"revision", r.latest().revision},
                                      {"n_words", evalmetrics::word_count(r.latest().text)}};
                json revisions = json::array();
                for (const auto& e : r.revisions) {
                    revisions.push_back(
                        {{"revision", e.revision}, {"text", e.text}, {"n_words", evalmetrics::word_count(e.text)}});
                }
                out["revisions"] = revisions;
                out["session"] = refine::to_json(r);
            }
        }
        if (state.reached(Stage::evaluated)) {
            const auto report = entry->run.report();
            for (const auto& p : report.at("pairs")) {
                if (p.at("narrative_ref") == ref) out["metrics"] = p;
            }
        }
        return {200, out};
    }

    Reply follow_up(const httplib::Request& req) {
        const auto id = req.matches[1].str();
        const auto pid = req.matches[2].str();
        auto entry = find_run(id);
        const auto body = parse_body(req, 400);
        if (!body.is_object() || !body.contains("request") || !body["request"].is_string()) {
            throw HttpError(400, "body must be {\"request\": \"...\"}");
        }
        const auto request = body["request"].get<std::string>();
        if (request.find_first_not_of(" \t\r\n") == std::string::npos) throw HttpError(400, "request is empty");

        std::unique_lock lock(entry->mutex);
        const auto [a, b] = resolve_pair(entry->run, pid);
        if (entry->job_running()) throw HttpError(409, "a refinement job is still running for this run");
        const auto state = entry->run.state();
        if (!state.reached(Stage::refined)) throw HttpError(409, "pair has no explanation yet (run not refined)");
        const int level = pick_level(req, body, narrated_levels(state));
        const std::string ref = narrative::pair_id(a, b) + "@" + std::to_string(level);

        auto all = entry->run.explanations();
        auto it = std::find_if(all.begin(), all.end(),
                               [&](const refine::Refinement& r) { return r.session.narrative_ref == ref; });
        if (it == all.end()) throw HttpError(404, "no explanation for " + ref);

        std::string backend_name = config.backend;
        for (const auto& r : state.completed) {
            if (r.stage == Stage::refined) backend_name = r.params.value("backend", backend_name);
        }
        auto& backend = backend_for(backend_name);
        const auto& e = refine::follow_up(*it, request, backend);
        entry->run.save_explanations(all);

        std::string narrative_text;
        for (const auto& n : entry->run.narratives()) {
            if (n.ref() == ref) narrative_text = n.text;
        }
        json metrics = evalmetrics::to_json(evalmetrics::report(narrative_text, e.text));
        return {200,
                {{"id", id},
                 {"pair_id", narrative::pair_id(a, b)},
                 {"level", level},
                 {"explanation", {{"text", e.text}, {"revision", e.revision}, {"n_words", evalmetrics::word_count(e.text)}}},
                 {"metrics", metrics},
                 {"session", refine::to_json(*it)}}};
    }

    // ---------------------------------------------------------------------

    void build_routes() {
        auto bind = [this](Reply (Impl::*fn)(const httplib::Request&)) {
            return [this, fn](const httplib::Request& r) { return (this->*fn)(r); };
        };
        routes = {
            {"POST", "/runs", R"(/runs)", "Create a run from an experience corpus or a generator request",
             {{"oneOf", {"array of experience records", {{"corpus", "array"}}, {{"generate", {{"seed", "integer"}, {"n", "integer"}, {"config", "object"}}}}}}},
             {201, 400, 413},
             bind(&Impl::create_run)},
            {"GET", "/runs", R"(/runs)", "List runs", nullptr, {200}, bind(&Impl::list_runs)},
            {"POST", "/runs/{id}/advance", R"(/runs/([^/]+)/advance)", "Run the next pipeline stage",
             {{"stage", "classified|inferred|narrated|refined|evaluated"},
              {"params", {{"alpha", "number"}, {"specificity", "integer"}, {"levels", "array"}, {"backend", "string"},
                          {"follow_up", "string"}, {"wait", "boolean"}, {"mu0", "number"}}}},
             {200, 202, 404, 409, 422, 502},
             bind(&Impl::advance)},
            {"GET", "/runs/{id}", R"(/runs/([^/]+))", "Run state and refinement job", nullptr, {200, 404},
             bind(&Impl::get_run)},
            {"GET", "/runs/{id}/pairs", R"(/runs/([^/]+)/pairs)", "Plan pairs of a run", nullptr, {200, 404},
             bind(&Impl::list_pairs)},
            {"GET", "/runs/{id}/pairs/{pid}", R"(/runs/([^/]+)/pairs/([^/]+))",
             "Narrative, explanation, metrics and session of one pair (query: level)", nullptr, {200, 400, 404},
             bind(&Impl::get_pair)},
            {"POST", "/runs/{id}/pairs/{pid}/followup", R"(/runs/([^/]+)/pairs/([^/]+)/followup)",
             "Ask for another revision of a pair's explanation",
             {{"request", "string"}, {"level", "integer"}},
             {200, 400, 404, 409, 502},
             bind(&Impl::follow_up)},
            {"GET", "/healthz", R"(/healthz)", "Liveness", nullptr, {200},
             [](const httplib::Request&) { return Reply{200, {{"status", "ok"}}}; }},
            {"GET", "/schema", R"(/schema)", "This document", nullptr, {200},
             [this](const httplib::Request&) { return Reply{200, schema()}; }},
        };
    }

    json schema() const {
        json paths = json::object();
        for (const auto& r : routes) {
            std::string method = r.method;
            std::transform(method.begin(), method.end(), method.begin(), [](unsigned char c) { return std::tolower(c); });
            json responses = json::object();
            for (int s : r.responses) responses[std::to_string(s)] = {{"description", httplib::status_message(s)}};
            json op{{"summary", r.summary}, {"responses", responses}};
            if (!r.request.is_null()) op["requestBody"] = {{"content", {{"application/json", {{"schema", r.request}}}}}};
            paths[r.path][method] = op;
        }
        return {{"openapi", "3.0.3"}, {"info", {{"title", "planex service"}, {"version", "1"}}}, {"paths", paths}};
    }

    void install() {
        server.set_payload_max_length(config.max_body_bytes);
        // The library default adds SO_REUSEPORT, which lets a second server
        // share a port that is already being served.
        server.set_socket_options([](socket_t sock) {
            int yes = 1;
            setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof yes);
        });
        server.set_default_headers({{"Access-Control-Allow-Origin", config.cors_origin},
                                    {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                    {"Access-Control-Allow-Headers", "Content-Type, Authorization"}});
        for (const auto& r : routes) {
            auto handler = [this, &r](const httplib::Request& req, httplib::Response& res) { dispatch(r, req, res); };
            if (r.method == "GET") {
                server.Get(r.regex, handler);
            } else {
                server.Post(r.regex, handler);
            }
        }
        server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
        server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
            res.set_content(error_body(httplib::status_message(res.status)).dump(), "application/json");
            return httplib::Server::HandlerResponse::Handled;
        });
        if (config.log) {
            server.set_logger([this](const httplib::Request& req, const httplib::Response& res) {
                static std::mutex log_mutex;
                std::lock_guard lock(log_mutex);
                *config.log << req.method << " " << req.path << " " << res.status << "\n";
            });
        }
    }

    void dispatch(const Route& r, const httplib::Request& req, httplib::Response& res) {
        Reply reply;
        try {
            reply = r.handler(req);
        } catch (const HttpError& e) {
            reply = {e.status, error_body(e.what())};
        } catch (const StageError& e) {
            reply = {409, error_body(e.what())};
        } catch (const BackendError& e) {
            reply = {502, error_body(e.what())};
        } catch (const InvalidArgument& e) {
            reply = {422, error_body(e.what())};
        } catch (const DataError& e) {
            reply = {400, error_body(e.what())};
        } catch (const std::exception& e) {
            reply = {500, error_body(e.what())};
        }
        res.status = reply.status;
        res.set_content(reply.body.dump(), "application/json");
    }

    void join_jobs() {
        std::vector<std::shared_ptr<RunEntry>> all;
        {
            std::shared_lock lock(registry_mutex);
            for (const auto& [id, e] : runs) all.push_back(e);
        }
        for (auto& e : all) {
            std::unique_lock lock(e->mutex);
            if (e->worker.joinable()) e->worker.join();
        }
    }
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

Service::~Service() {
    impl_->server.stop();
    impl_->join_jobs();
}

bool Service::bind(const std::string& host, int port) { return impl_->server.bind_to_port(host, port); }

int Service::bind_any(const std::string& host) { return impl_->server.bind_to_any_port(host); }

void Service::serve() { impl_->server.listen_after_bind(); }

void Service::stop() { impl_->server.stop(); }

void Service::join_jobs() { impl_->join_jobs(); }

json Service::schema() const { return impl_->schema(); }

}  // namespace planex::service
