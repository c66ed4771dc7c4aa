// planex: command-line driver for every pipeline stage, the follow-up REPL
// and the HTTP service.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <pthread.h>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "planex/error.hpp"
#include "planex/evalmetrics.hpp"
#include "planex/experiences.hpp"
#include "planex/pipeline.hpp"
#include "planex/refine.hpp"
#include "planex/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace planex;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kBackend = 3 };

struct CliConfig {
    fs::path data_dir = "planex-data";
    std::string run = "default";
    std::string backend = "deterministic";
    refine::RemoteConfig remote;
    double alpha = 0.68;
    std::vector<int> specificity{1, 2, 3};
    std::optional<double> mu0;
    std::uint64_t seed = 42;
    int n = 18;
    std::size_t in_flight = 4;
    std::size_t threads = 0;
    std::string follow_up{refine::kShortenRequest};

    fs::path run_dir() const { return data_dir / "runs" / run; }
};

// Values from --config fill in whatever was not given on the command line.
void apply_config_file(CliConfig& c, const fs::path& path, const CLI::App& app) {
    json j;
    try {
        j = json::parse(pipeline::read_file(path));
    } catch (const json::parse_error& e) {
        throw InvalidArgument("config " + path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw InvalidArgument("config " + path.string() + ": expected an object");
    auto given = [&](const std::string& flag) {
        for (const auto* sub : app.get_subcommands()) {
            if (sub->count(flag) > 0) return true;
        }
        return app.count(flag) > 0;
    };
    try {
        if (j.contains("data_dir") && !given("--data-dir")) c.data_dir = j["data_dir"].get<std::string>();
        if (j.contains("run") && !given("--run")) c.run = j["run"].get<std::string>();
        if (j.contains("backend") && !given("--backend")) c.backend = j["backend"].get<std::string>();
        if (j.contains("alpha") && !given("--alpha")) c.alpha = j["alpha"].get<double>();
        if (j.contains("specificity") && !given("--specificity")) {
            c.specificity = j["specificity"].is_array() ? j["specificity"].get<std::vector<int>>()
                                                        : std::vector<int>{j["specificity"].get<int>()};
        }
        if (j.contains("mu0") && !given("--mu0")) c.mu0 = j["mu0"].get<double>();
        if (j.contains("seed") && !given("--seed")) c.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("remote")) {
            const auto r = refine::RemoteConfig::from_json(j["remote"]);
            if (!given("--base-url")) c.remote.base_url = r.base_url;
            if (!given("--model")) c.remote.model = r.model;
            if (!given("--token-env")) c.remote.token_env = r.token_env;
            c.remote.path = r.path;
            c.remote.timeout = r.timeout;
            c.remote.attempts = r.attempts;
            c.remote.backoff = r.backoff;
            c.remote.verbose = c.remote.verbose || r.verbose;
        }
    } catch (const json::exception& e) {
        throw InvalidArgument("config " + path.string() + ": " + e.what());
    }
}

std::unique_ptr<refine::RefinerBackend> make_backend(const CliConfig& c) {
    return refine::make_backend(c.backend, c.remote, &std::cerr);
}

void print_state(const pipeline::RunState& s, const pipeline::RunDir& run) {
    std::cerr << "run " << s.corpus_id << " at stage " << pipeline::to_string(*s.stage()) << " (" << run.dir().string()
              << ")\n";
}

int cmd_generate(const CliConfig& c, const std::string& out, const std::string& gen_config) {
    experiences::GenConfig cfg;
    if (!gen_config.empty()) {
        try {
            cfg = experiences::GenConfig::from_json(json::parse(pipeline::read_file(gen_config)));
        } catch (const json::parse_error& e) {
            throw InvalidArgument("generator config: " + std::string(e.what()));
        }
    }
    if (c.n < 2) throw InvalidArgument("--n must be at least 2");
    const auto corpus = experiences::generate_synthetic(c.seed, c.n, cfg);
    if (out == "-") {
        std::cout << experiences::to_json(corpus).dump(2) << "\n";
        return kOk;
    }
    if (!out.empty()) {
        experiences::save_experiences(out, corpus);
        std::cerr << "wrote " << corpus.size() << " experiences to " << out << "\n";
        return kOk;
    }
    pipeline::RunDir run(c.run_dir());
    const json params{{"source", "generate"}, {"seed", c.seed}, {"n", c.n}, {"config", cfg.to_json()}};
    print_state(pipeline::ingest(run, corpus, c.run, params), run);
    return kOk;
}

int cmd_ingest(const CliConfig& c, const std::string& file) {
    const auto corpus = experiences::load_experiences(file);
    pipeline::RunDir run(c.run_dir());
    print_state(pipeline::ingest(run, corpus, c.run, {{"source", "upload"}, {"file", file}}), run);
    return kOk;
}

int cmd_classify(const CliConfig& c) {
    pipeline::RunDir run(c.run_dir());
    const auto s = pipeline::classify(run, c.alpha);
    for (const auto& [k, iv] : run.hdi()) {
        std::cout << vocab::to_string(k) << "\t[" << iv.lo << ", " << iv.hi << "]\tk=" << iv.k << "/" << iv.n << "\n";
    }
    print_state(s, run);
    return kOk;
}

int cmd_infer(const CliConfig& c) {
    pipeline::RunDir run(c.run_dir());
    const auto s = pipeline::infer(run);
    const auto j = run.inference();
    std::cout << "pairs compared: " << j["pairs_compared"] << ", typical plans: " << j["typical"]
              << ", atypical plans: " << j["atypical"] << "\n";
    print_state(s, run);
    return kOk;
}

int cmd_narrate(const CliConfig& c) {
    pipeline::RunDir run(c.run_dir());
    pipeline::NarrateParams p;
    p.levels = c.specificity;
    p.threads = c.threads;
    for (int l : p.levels) {
        if (l < 1 || l > 3) throw InvalidArgument("--specificity must be 1, 2 or 3");
    }
    const auto s = pipeline::narrate(run, p);
    std::cout << run.narratives().size() << " narratives\n";
    print_state(s, run);
    return kOk;
}

int cmd_explain(const CliConfig& c) {
    auto backend = make_backend(c);
    pipeline::RunDir run(c.run_dir());
    pipeline::ExplainParams p;
    p.follow_up = c.follow_up;
    p.in_flight = c.in_flight;
    p.progress = [](std::size_t done, std::size_t total) {
        if (done == total || done % 50 == 0) std::cerr << "refined " << done << "/" << total << "\n";
    };
    const auto s = pipeline::explain(run, *backend, p);
    std::cout << run.explanations().size() << " explanations (" << backend->name() << ")\n";
    print_state(s, run);
    return kOk;
}

int cmd_evaluate(const CliConfig& c) {
    if (!c.mu0) throw InvalidArgument("--mu0 is required (null value of the one-sample similarity test)");
    pipeline::RunDir run(c.run_dir());
    const auto s = pipeline::evaluate(run, {c.mu0});
    std::cout << pipeline::read_file(run.file("report.txt"));
    print_state(s, run);
    return kOk;
}

int cmd_repl(const CliConfig& c, const std::string& pair, std::optional<int> level, std::istream& in,
             std::ostream& out) {
    pipeline::RunDir run(c.run_dir());
    const auto state = run.state();
    if (!state.reached(pipeline::Stage::refined)) throw StageError("run has no explanations yet (run explain first)");
    auto all = run.explanations();
    const auto [a, b] = narrative::split_pair_id(pair);
    const auto canonical = narrative::pair_id(a, b);

    refine::Refinement* session = nullptr;
    int best = 0;
    for (auto& r : all) {
        const auto& ref = r.session.narrative_ref;
        const auto at = ref.rfind('@');
        if (ref.substr(0, at) != canonical) continue;
        const int l = std::stoi(ref.substr(at + 1));
        if (level ? l == *level : l > best) {
            session = &r;
            best = l;
        }
    }
    if (!session) throw InvalidArgument("no explanation for pair " + pair + (level ? " at that level" : ""));

    auto backend = make_backend(c);
    out << "[" << session->session.narrative_ref << " revision " << session->latest().revision << "] "
        << session->latest().text << "\n";
    std::string line;
    while (out << "> " << std::flush, std::getline(in, line)) {
        if (line == ":quit") return kOk;
        if (line == ":history") {
            for (std::size_t i = 0; i < session->session.messages.size(); ++i) {
                const auto& m = session->session.messages[i];
                out << i << " " << refine::to_string(m.role) << ": " << m.content << "\n";
            }
            continue;
        }
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto& e = refine::follow_up(*session, line, *backend);
            run.save_explanations(all);
            out << "[revision " << e.revision << ", " << evalmetrics::word_count(e.text) << " words] " << e.text << "\n";
        } catch (const BackendError& e) {
            out << "error: " << e.what() << "\n";
        }
    }
    return kOk;
}

int cmd_serve(const CliConfig& c, const std::string& host, int port, const std::string& cors) {
    service::ServiceConfig sc;
    sc.data_dir = c.data_dir;
    sc.backend = c.backend;
    sc.remote = c.remote;
    sc.remote_configured = !c.remote.base_url.empty();
    sc.cors_origin = cors;
    sc.in_flight = c.in_flight;
    sc.log = &std::cerr;

    // Signals go to a dedicated thread that stops the server.
    // A shell starts background jobs with SIGINT ignored; an ignored signal
    // never reaches sigwait.
    std::signal(SIGINT, SIG_DFL);
    std::signal(SIGTERM, SIG_DFL);
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    service::Service svc(sc);
    if (!svc.bind(host, port)) {
        std::cerr << "error: cannot bind " << host << ":" << port << " (port in use?)\n";
        return kData;
    }
    std::cerr << "serving on http://" << host << ":" << port << " data dir " << c.data_dir.string() << "\n";
    std::thread waiter([&svc, set] {
        int sig = 0;
        sigwait(&set, &sig);
        svc.stop();
    });
    svc.serve();
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    svc.join_jobs();
    std::cerr << "stopped\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"planex: contrastive plan explanations from execution experiences"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    CliConfig c;
    std::string config_path;
    std::vector<int> specificity;
    std::optional<double> mu0;
    app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--data-dir", c.data_dir, "Directory holding runs/<id>");
    app.add_option("--run", c.run, "Run id inside the data directory");
    app.add_option("--backend", c.backend, "Refinement backend")->check(CLI::IsMember({"deterministic", "remote"}));
    app.add_option("--base-url", c.remote.base_url, "Remote chat endpoint, http://host:port");
    app.add_option("--model", c.remote.model, "Remote model name");
    app.add_option("--token-env", c.remote.token_env, "Environment variable holding the bearer token");
    app.add_flag("--verbose", c.remote.verbose, "Log backend requests and responses (token redacted)");

    auto* gen = app.add_subcommand("generate", "Synthesise a corpus and ingest it (or write it with --out)");
    std::string gen_out;
    std::string gen_config;
    gen->add_option("--seed", c.seed, "Random seed");
    gen->add_option("--n", c.n, "Number of plans");
    gen->add_option("--out", gen_out, "Write the corpus JSON here ('-' for stdout) instead of ingesting");
    gen->add_option("--gen-config", gen_config, "Generator settings (JSON)")->check(CLI::ExistingFile);

    auto* ingest = app.add_subcommand("ingest", "Load an experience corpus into the run");
    std::string ingest_file;
    ingest->add_option("file", ingest_file, "Experience JSON")->required()->check(CLI::ExistingFile);

    auto* classify = app.add_subcommand("classify", "Compute HDIs and label quality values");
    classify->add_option("--alpha", c.alpha, "HDI mass, in (0, 1)");

    app.add_subcommand("infer", "Compare plans and classify them typical/atypical");

    auto* narrate = app.add_subcommand("narrate", "Build contrastive narratives for every plan pair");
    narrate->add_option("--specificity", specificity, "Level(s) 1-3; default all three");
    narrate->add_option("--threads", c.threads, "Worker threads (0 = hardware)");

    auto* explain = app.add_subcommand("explain", "Refine every narrative into an explanation");
    std::optional<std::string> follow_up;
    bool no_follow_up = false;
    explain->add_option("--follow-up", follow_up, "Request sent once after each initial explanation");
    explain->add_flag("--no-follow-up", no_follow_up, "Skip the follow-up request");
    explain->add_option("--in-flight", c.in_flight, "Concurrent backend requests")->check(CLI::PositiveNumber);

    auto* evaluate = app.add_subcommand("evaluate", "Score explanations and write the summary report");
    evaluate->add_option("--mu0", mu0, "Null value for the one-sample similarity t-test (required)");

    auto* repl = app.add_subcommand("repl", "Interactive follow-ups on one pair's explanation");
    std::string repl_pair;
    std::optional<int> repl_level;
    repl->add_option("pair", repl_pair, "Pair id, e.g. Plan_01~Plan_02")->required();
    repl->add_option("--level", repl_level, "Specificity level (default: highest narrated)");

    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string cors = "*";
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--port", port, "Port");
    serve->add_option("--cors-origin", cors, "Access-Control-Allow-Origin value");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (!specificity.empty()) c.specificity = specificity;
        if (mu0) c.mu0 = mu0;
        if (follow_up) c.follow_up = *follow_up;
        if (no_follow_up) c.follow_up.clear();
        if (!config_path.empty()) apply_config_file(c, config_path, app);
        if (c.backend == "remote") c.remote.validate();

        const auto* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        if (name == "classify" && !(c.alpha > 0.0 && c.alpha < 1.0)) {
            throw InvalidArgument("--alpha must lie in (0, 1)");
        }
        if (name == "generate") return cmd_generate(c, gen_out, gen_config);
        if (name == "ingest") return cmd_ingest(c, ingest_file);
        if (name == "classify") return cmd_classify(c);
        if (name == "infer") return cmd_infer(c);
        if (name == "narrate") return cmd_narrate(c);
        if (name == "explain") return cmd_explain(c);
        if (name == "evaluate") return cmd_evaluate(c);
        if (name == "repl") return cmd_repl(c, repl_pair, repl_level, std::cin, std::cout);
        if (name == "serve") return cmd_serve(c, host, port, cors);
        return kUsage;
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const BackendError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return kBackend;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    }
}
