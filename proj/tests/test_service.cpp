#include "support.hpp"

#include "schoolopt/service.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <condition_variable>
#include <future>
#include <random>
#include <thread>

using namespace schoolopt;
using namespace schoolopt::testing;

namespace {

std::shared_ptr<Provider> infeasible_script() {
    return std::make_shared<ScriptedProvider>(nlohmann::json::parse(R"([
        {"turn": 1, "step": 1, "tool_calls": [
            {"name": "fix_start_time", "arguments": {"school": "Everett MS", "time": "9:30 AM", "type": "fix"}},
            {"name": "add_objective_upper_bound", "arguments": {"objective": "schedule_deviation", "value": 16}},
            {"name": "call_solver", "arguments": {}}]},
        {"turn": 1, "step": 2, "content": "With Everett at 9:30 AM the average change cannot go below 16.5 minutes."},
        {"turn": 2, "step": 1, "tool_calls": [
            {"name": "remove_constraint", "arguments": {"name": "bound_schedule_deviation"}},
            {"name": "call_solver", "arguments": {}}]},
        {"turn": 2, "step": 2, "content": "Here is the best schedule with Everett at 9:30 AM."}
    ])"));
}

// Blocks inside chat() until released, so a turn stays in flight.
class GateProvider : public Provider {
public:
    ChatMessage chat(const ChatContext&, const std::vector<ChatMessage>&, const nlohmann::json&) override {
        std::unique_lock lock(m_);
        entered_ = true;
        cv_.notify_all();
        cv_.wait(lock, [this] { return open_; });
        return assistant_message("done");
    }
    void wait_entered() {
        std::unique_lock lock(m_);
        cv_.wait(lock, [this] { return entered_; });
    }
    void open() {
        std::lock_guard lock(m_);
        open_ = true;
        cv_.notify_all();
    }

private:
    std::mutex m_;
    std::condition_variable cv_;
    bool entered_ = false;
    bool open_ = false;
};

class FailingProvider : public Provider {
public:
    ChatMessage chat(const ChatContext&, const std::vector<ChatMessage>&, const nlohmann::json&) override {
        throw ProviderError(ProviderError::Kind::Transport, "connection refused");
    }
};

std::string text_body(const std::string& text) { return nlohmann::json{{"text", text}}.dump(); }

}  // namespace

TEST(Service, CreateSessionPresentsDefault) {
    SessionService svc(canonical_data(), {infeasible_script(), {}, {}});
    const auto r = svc.create_session();
    EXPECT_EQ(r.status, 201);
    EXPECT_FALSE(r.body["session_id"].get<std::string>().empty());
    EXPECT_NE(r.body["opening"].get<std::string>().find("8.5 minutes"), std::string::npos);
    EXPECT_EQ(r.body["schedule"]["objectives"]["peak_students"], 2565);
    EXPECT_EQ(r.body["schedule"]["objectives"]["schedule_deviation"], "8.5");
    EXPECT_EQ(svc.session_count(), 1u);
}

TEST(Service, MessageValidationAndUnknownSession) {
    SessionService svc(canonical_data(), {infeasible_script(), {}, {}});
    const auto id = svc.create_session().body["session_id"].get<std::string>();
    EXPECT_EQ(svc.post_message("nope", text_body("hi")).status, 404);
    EXPECT_EQ(svc.post_message(id, "not json").status, 400);
    EXPECT_EQ(svc.post_message(id, R"({"text": 3})").status, 400);
    EXPECT_EQ(svc.post_message(id, text_body("   ")).status, 400);
    EXPECT_EQ(svc.get_session("nope").status, 404);
    EXPECT_EQ(svc.get_model("nope").status, 404);
    EXPECT_EQ(svc.delete_session("nope").status, 404);
}

TEST(Service, InfeasibleRequestThenRelaxation) {
    SessionService svc(canonical_data(), {infeasible_script(), {}, {}});
    const auto id = svc.create_session().body["session_id"].get<std::string>();

    const auto first = svc.post_message(id, text_body("Everett at 9:30 and keep the average change under 16 minutes"));
    ASSERT_EQ(first.status, 200) << first.body.dump();
    EXPECT_TRUE(first.body["schedules"].empty());
    EXPECT_EQ(first.body["solver_calls"], 1);
    EXPECT_NE(first.body["visible_text"].get<std::string>().find("16.5 minutes"), std::string::npos);

    const auto second = svc.post_message(id, text_body("Then drop the limit"));
    ASSERT_EQ(second.status, 200) << second.body.dump();
    ASSERT_EQ(second.body["schedules"].size(), 1u);
    EXPECT_EQ(second.body["schedules"][0]["schedule"][6]["start"], "9:30 AM");

    const auto model = svc.get_model(id);
    EXPECT_EQ(model.status, 200);
    EXPECT_EQ(model_from_json(model.body, canonical_data()).fixed.at(7), 3);

    const auto session = svc.get_session(id);
    EXPECT_EQ(session.body["turns"].size(), 2u);
    EXPECT_FALSE(session.body["turn_in_progress"]);
}

TEST(Service, ProviderFailureIsBadGateway) {
    SessionService svc(canonical_data(), {std::make_shared<FailingProvider>(), {}, {}});
    const auto id = svc.create_session().body["session_id"].get<std::string>();
    const auto r = svc.post_message(id, text_body("hello"));
    EXPECT_EQ(r.status, 502);
    EXPECT_NE(r.body["error"].get<std::string>().find("connection refused"), std::string::npos);
    EXPECT_EQ(svc.get_session(id).body["turns"][0]["status"], "error");
}

TEST(Service, ConcurrentTurnIsConflict) {
    auto gate = std::make_shared<GateProvider>();
    SessionService svc(canonical_data(), {gate, {}, {}});
    const auto id = svc.create_session().body["session_id"].get<std::string>();
    auto pending = std::async(std::launch::async, [&] { return svc.post_message(id, text_body("first")); });
    gate->wait_entered();
    EXPECT_EQ(svc.post_message(id, text_body("second")).status, 409);
    EXPECT_EQ(svc.get_model(id).status, 409);
    EXPECT_TRUE(svc.get_session(id).body["turn_in_progress"]);
    gate->open();
    EXPECT_EQ(pending.get().status, 200);
}

TEST(Service, DeleteWritesSnapshot) {
    const auto dir = std::filesystem::temp_directory_path() / ("schoolopt_snap_" + std::to_string(std::random_device{}()));
    SessionService svc(canonical_data(), {infeasible_script(), {}, dir.string()});
    const auto id = svc.create_session().body["session_id"].get<std::string>();
    svc.post_message(id, text_body("Everett at 9:30 please"));
    EXPECT_EQ(svc.delete_session(id).status, 204);
    EXPECT_EQ(svc.session_count(), 0u);
    const auto text = read_file((dir / (id + ".jsonl")).string());
    EXPECT_NE(text.find("\"type\":\"session\""), std::string::npos);
    EXPECT_NE(text.find("\"type\":\"model\""), std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST(Service, HttpRoundTrip) {
    SessionService svc(canonical_data(), {infeasible_script(), {}, {}});
    const int port = svc.bind("127.0.0.1", 0);
    ASSERT_GT(port, 0);
    std::thread server([&] { svc.listen_after_bind(); });
    httplib::Client cli("127.0.0.1", port);
    for (int i = 0; i < 200 && !cli.Get("/health"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));

    auto created = cli.Post("/sessions", "", "application/json");
    ASSERT_TRUE(created);
    EXPECT_EQ(created->status, 201);
    const auto id = nlohmann::json::parse(created->body)["session_id"].get<std::string>();

    auto reply = cli.Post(("/sessions/" + id + "/messages").c_str(), text_body("Everett at 9:30"), "application/json");
    ASSERT_TRUE(reply);
    EXPECT_EQ(reply->status, 200);
    EXPECT_NE(reply->body.find("16.5 minutes"), std::string::npos);

    auto model = cli.Get(("/sessions/" + id + "/model").c_str());
    ASSERT_TRUE(model);
    EXPECT_EQ(model->status, 200);
    auto missing = cli.Get("/sessions/unknown");
    ASSERT_TRUE(missing);
    EXPECT_EQ(missing->status, 404);
    auto gone = cli.Delete(("/sessions/" + id).c_str());
    ASSERT_TRUE(gone);
    EXPECT_EQ(gone->status, 204);

    svc.stop();
    server.join();
}
