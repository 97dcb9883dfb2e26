#include "schoolopt/service.hpp"

#include <httplib.h>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <shared_mutex>

namespace schoolopt {

namespace {

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

nlohmann::json objectives_json(const ScheduleFeatures& f) {
    return {{"student_load_balancing", to_string(f.peak_load_hundreds())},
            {"peak_students", f.peak_load},
            {"schedule_deviation", to_string(f.avg_deviation())},
            {"display",
             {{"student_load_balancing", objective_display(ObjectiveId::StudentLoadBalancing, f.peak_load_hundreds())},
              {"schedule_deviation", objective_display(ObjectiveId::ScheduleDeviation, f.avg_deviation())}}}};
}

nlohmann::json presented_json(const Schedule& s, const SchoolData& data) {
    return {{"schedule", schedule_to_json(s, data)}, {"objectives", objectives_json(compute_features(s, data))}};
}

nlohmann::json error_body(const std::string& msg) { return {{"error", msg}}; }

}  // namespace

struct Session {
    std::string id;
    std::unique_ptr<OptimizationAgent> agent;
    std::string created_at;
    std::string updated_at;
    nlohmann::json log = nlohmann::json::array();  // one entry per turn
    std::mutex turn_mutex;                          // held for the whole turn
    mutable std::mutex state_mutex;                 // guards log and timestamps
};

struct SessionService::Impl {
    const SchoolData* data;
    ServiceConfig cfg;
    mutable std::shared_mutex map_mutex;
    std::map<std::string, std::shared_ptr<Session>> sessions;
    std::mt19937_64 ids{std::random_device{}()};
    std::mutex id_mutex;
    httplib::Server server;

    std::shared_ptr<Session> find(const std::string& id) const {
        std::shared_lock lock(map_mutex);
        auto it = sessions.find(id);
        return it == sessions.end() ? nullptr : it->second;
    }

    std::string new_id() {
        std::lock_guard lock(id_mutex);
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(ids()));
        return buf;
    }
};

SessionService::SessionService(const SchoolData& data, ServiceConfig cfg) : impl_(std::make_unique<Impl>()) {
    if (!cfg.provider) throw std::invalid_argument("the service needs a provider");
    impl_->data = &data;
    impl_->cfg = std::move(cfg);

    auto reply = [](httplib::Response& res, const Response& r) {
        res.status = r.status;
        if (r.status != 204) res.set_content(r.body.dump(), "application/json");
    };
    auto& srv = impl_->server;
    srv.Get("/health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"status":"ok"})", "application/json");
    });
    srv.Post("/sessions", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, create_session()); });
    srv.Post(R"(/sessions/([^/]+)/messages)", [this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, post_message(req.matches[1], req.body));
    });
    srv.Get(R"(/sessions/([^/]+)/model)", [this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, get_model(req.matches[1]));
    });
    srv.Get(R"(/sessions/([^/]+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, get_session(req.matches[1]));
    });
    srv.Delete(R"(/sessions/([^/]+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, delete_session(req.matches[1]));
    });
}

SessionService::~SessionService() { stop(); }

SessionService::Response SessionService::create_session() {
    auto s = std::make_shared<Session>();
    s->id = impl_->new_id();
    s->agent = std::make_unique<OptimizationAgent>(impl_->cfg.provider, *impl_->data, s->id, impl_->cfg.limits);
    s->created_at = s->updated_at = utc_now();
    const auto& d = s->agent->default_solution();
    Response r{201,
               {{"session_id", s->id},
                {"opening", s->agent->opening()},
                {"schedule", presented_json(*d.schedule, *impl_->data)},
                {"model_summary", model_summary(s->agent->model(), *impl_->data)}}};
    std::unique_lock lock(impl_->map_mutex);
    impl_->sessions.emplace(s->id, s);
    return r;
}

SessionService::Response SessionService::post_message(const std::string& id, const std::string& body) {
    auto s = impl_->find(id);
    if (!s) return {404, error_body("unknown session '" + id + "'")};
    const auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("text") || !j["text"].is_string()) {
        return {400, error_body("body must be a JSON object with a string 'text'")};
    }
    const std::string text = j["text"].get<std::string>();
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) return {400, error_body("message text is empty")};

    std::unique_lock turn(s->turn_mutex, std::try_to_lock);
    if (!turn.owns_lock()) return {409, error_body("a turn is already in progress for this session")};

    nlohmann::json entry = {{"text", text}, {"started_at", utc_now()}};
    Response r;
    try {
        const AgentTurnResult t = s->agent->run_turn(text);
        nlohmann::json schedules = nlohmann::json::array();
        for (const auto& sch : t.schedules_presented) schedules.push_back(presented_json(sch, *impl_->data));
        r.body = {{"visible_text", t.visible_text},
                  {"schedules", schedules},
                  {"solver_calls", t.solver_calls},
                  {"model_summary", model_summary(s->agent->model(), *impl_->data)}};
        entry["status"] = "ok";
        entry["reply"] = r.body;
    } catch (const std::exception& e) {
        r = {502, error_body(std::string("optimization agent failed: ") + e.what())};
        entry["status"] = "error";
        entry["error"] = e.what();
    }
    std::lock_guard lock(s->state_mutex);
    s->updated_at = utc_now();
    s->log.push_back(std::move(entry));
    return r;
}

SessionService::Response SessionService::get_session(const std::string& id) const {
    auto s = impl_->find(id);
    if (!s) return {404, error_body("unknown session '" + id + "'")};
    std::unique_lock turn(s->turn_mutex, std::try_to_lock);
    nlohmann::json body = {{"session_id", s->id}, {"turn_in_progress", !turn.owns_lock()}};
    {
        std::lock_guard lock(s->state_mutex);
        body["created_at"] = s->created_at;
        body["updated_at"] = s->updated_at;
        body["turns"] = s->log;
    }
    if (turn.owns_lock()) {
        nlohmann::json history = nlohmann::json::array();
        for (const auto& m : s->agent->history()) {
            if (m.role != Role::System) history.push_back(message_to_wire(m));
        }
        body["history"] = history;
    }
    return {200, body};
}

SessionService::Response SessionService::get_model(const std::string& id) const {
    auto s = impl_->find(id);
    if (!s) return {404, error_body("unknown session '" + id + "'")};
    std::unique_lock turn(s->turn_mutex, std::try_to_lock);
    if (!turn.owns_lock()) return {409, error_body("a turn is already in progress for this session")};
    return {200, model_to_json(s->agent->model(), *impl_->data)};
}

SessionService::Response SessionService::delete_session(const std::string& id) {
    std::shared_ptr<Session> s;
    {
        std::unique_lock lock(impl_->map_mutex);
        auto it = impl_->sessions.find(id);
        if (it == impl_->sessions.end()) return {404, error_body("unknown session '" + id + "'")};
        s = it->second;
        impl_->sessions.erase(it);
    }
    if (!impl_->cfg.snapshot_dir.empty()) {
        std::lock_guard turn(s->turn_mutex);
        std::filesystem::create_directories(impl_->cfg.snapshot_dir);
        std::ofstream f(std::filesystem::path(impl_->cfg.snapshot_dir) / (s->id + ".jsonl"), std::ios::binary);
        f << nlohmann::json{{"type", "session"}, {"session_id", s->id}, {"created_at", s->created_at}}.dump() << '\n';
        for (const auto& m : s->agent->history()) f << message_to_wire(m).dump() << '\n';
        f << nlohmann::json{{"type", "model"}, {"model", model_to_json(s->agent->model(), *impl_->data)}}.dump() << '\n';
    }
    return {204, nullptr};
}

std::size_t SessionService::session_count() const {
    std::shared_lock lock(impl_->map_mutex);
    return impl_->sessions.size();
}

int SessionService::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool SessionService::listen_after_bind() { return impl_->server.listen_after_bind(); }

void SessionService::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace schoolopt
