#pragma once

// In-process chat endpoint for backend tests. Replies are served from a
// script in order; the last one repeats.

#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

namespace planex::testing {

class MockChat {
public:
    struct Reply {
        int status = 200;
        std::string body;
    };
    struct Request {
        std::string authorization;
        std::string body;
    };

    explicit MockChat(std::vector<Reply> script) : script_(std::move(script)) {
        server_.Post("/api/chat", [this](const httplib::Request& req, httplib::Response& res) {
            std::lock_guard lock(mutex_);
            requests_.push_back({req.get_header_value("Authorization"), req.body});
            const auto& r = script_[std::min(served_++, script_.size() - 1)];
            res.status = r.status;
            res.set_content(r.body, "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~MockChat() {
        server_.stop();
        thread_.join();
    }
    MockChat(const MockChat&) = delete;
    MockChat& operator=(const MockChat&) = delete;

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    std::vector<Request> requests() const {
        std::lock_guard lock(mutex_);
        return requests_;
    }

    static Reply ollama(const std::string& content) {
        return {200, nlohmann::json{{"message", {{"role", "assistant"}, {"content", content}}}}.dump()};
    }
    static Reply openai(const std::string& content) {
        return {200, nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump()};
    }

private:
    httplib::Server server_;
    int port_ = -1;
    std::thread thread_;
    mutable std::mutex mutex_;
    std::vector<Reply> script_;
    std::size_t served_ = 0;
    std::vector<Request> requests_;
};

}  // namespace planex::testing
