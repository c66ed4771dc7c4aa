#pragma once

// HTTP facade over the pipeline. Runs live under <data_dir>/runs/<id> with the
// same layout the CLI uses.
//
//   POST /runs                              create from a corpus or generator request
//   GET  /runs                              list runs
//   POST /runs/{id}/advance                 run the next stage
//   GET  /runs/{id}                         state and refinement job status
//   GET  /runs/{id}/pairs                   every plan pair of the run
//   GET  /runs/{id}/pairs/{pid}             narrative, explanation, metrics, session
//   POST /runs/{id}/pairs/{pid}/followup    one more revision of an explanation
//   GET  /healthz
//   GET  /schema                            route description generated from the route table

#include <cstddef>
#include <filesystem>
#include <memory>
#include <ostream>
#include <string>

#include <json.hpp>

#include "planex/refine.hpp"

namespace planex::service {

struct ServiceConfig {
    std::filesystem::path data_dir = "planex-data";
    std::string backend = "deterministic";  // default for refinement
    refine::RemoteConfig remote;            // used when backend == "remote" or requested per run
    bool remote_configured = false;
    std::string cors_origin = "*";
    std::size_t max_body_bytes = 8 * 1024 * 1024;
    std::size_t in_flight = 4;
    std::ostream* log = nullptr;
};

class Service {
public:
    // Validates the backend configuration (a remote backend with an unset
    // token variable fails here) and loads existing runs.
    explicit Service(ServiceConfig config);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Returns false when the address cannot be bound.
    bool bind(const std::string& host, int port);
    // Binds an ephemeral port; returns it, or -1 on failure.
    int bind_any(const std::string& host);
    // Blocks until stop() is called.
    void serve();
    void stop();
    // Waits for background refinement jobs.
    void join_jobs();

    // The route description served at /schema.
    nlohmann::json schema() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace planex::service
