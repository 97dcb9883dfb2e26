#pragma once

#include "schoolopt/agent.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <string>

namespace schoolopt {

struct ServiceConfig {
    std::shared_ptr<Provider> provider;
    RuntimeLimits limits;
    std::string snapshot_dir;  // JSONL snapshot per session on teardown when non-empty
};

/// Interactive sessions with the optimization agent, served over HTTP/JSON.
/// Only the optimization side is loaded; humans are the decision-makers.
class SessionService {
public:
    struct Response {
        int status = 200;
        nlohmann::json body;
    };

    SessionService(const SchoolData& data, ServiceConfig cfg);
    ~SessionService();
    SessionService(const SessionService&) = delete;
    SessionService& operator=(const SessionService&) = delete;

    Response create_session();
    /// 400 bad body, 404 unknown session, 409 turn in flight, 502 provider failure.
    Response post_message(const std::string& id, const std::string& body);
    Response get_session(const std::string& id) const;
    Response get_model(const std::string& id) const;
    Response delete_session(const std::string& id);
    std::size_t session_count() const;

    /// Binds to `host`; port 0 picks a free port. Returns the bound port or -1.
    int bind(const std::string& host, int port);
    /// Blocks serving requests until stop().
    bool listen_after_bind();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace schoolopt
