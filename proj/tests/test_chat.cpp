#include "support.hpp"

#include "schoolopt/chat.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <thread>

using namespace schoolopt;
using namespace schoolopt::testing;

namespace {

// Minimal chat-completions endpoint on a free local port.
class FakeEndpoint {
public:
    explicit FakeEndpoint(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
        server_.Post("/v1/chat/completions", [this, handler](const httplib::Request& req, httplib::Response& res) {
            ++hits;
            last_body = req.body;
            last_auth = req.get_header_value("Authorization");
            handler(req, res);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeEndpoint() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

    std::atomic<int> hits{0};
    std::string last_body;
    std::string last_auth;

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

ProviderConfig http_config(const std::string& url) {
    ::unsetenv("LLM_BASE_URL");
    ProviderConfig c;
    c.kind = ProviderKind::HttpChat;
    c.model_name = "test-model";
    c.endpoint = url;
    c.max_retries = 2;
    c.backoff_ms = 1;
    c.timeout_s = 5;
    return c;
}

std::vector<ChatMessage> hello() { return {system_message("be brief"), user_message("hi")}; }

}  // namespace

TEST(Wire, ToolCallArgumentsTravelAsJsonString) {
    const ChatMessage m =
        assistant_message("", {{"call_1", "fix_start_time", {{"school", "Balboa HS"}, {"time", "8:40 AM"}}}});
    const auto j = message_to_wire(m);
    EXPECT_EQ(j["role"], "assistant");
    EXPECT_TRUE(j["content"].is_null());
    ASSERT_EQ(j["tool_calls"].size(), 1u);
    EXPECT_EQ(j["tool_calls"][0]["type"], "function");
    EXPECT_TRUE(j["tool_calls"][0]["function"]["arguments"].is_string());
    EXPECT_EQ(message_from_wire(j), m);
}

TEST(Wire, ToolMessagesCarryCallId) {
    const auto j = message_to_wire(tool_message("call_9", "done"));
    EXPECT_EQ(j["role"], "tool");
    EXPECT_EQ(j["tool_call_id"], "call_9");
    EXPECT_EQ(message_from_wire(j), tool_message("call_9", "done"));
}

TEST(Wire, UnparseableArgumentsAreKeptRaw) {
    const nlohmann::json j = {
        {"role", "assistant"},
        {"content", nullptr},
        {"tool_calls",
         {{{"id", "c1"}, {"type", "function"}, {"function", {{"name", "call_solver"}, {"arguments", "{oops"}}}}}}};
    const auto m = message_from_wire(j);
    ASSERT_EQ(m.tool_calls.size(), 1u);
    EXPECT_EQ(m.tool_calls[0].arguments, "{oops");
}

TEST(Wire, HistoryValidation) {
    std::vector<ChatMessage> ok = {system_message("s"), user_message("u"),
                                   assistant_message("", {{"c1", "call_solver", nlohmann::json::object()}}),
                                   tool_message("c1", "r")};
    EXPECT_NO_THROW(validate_history(ok));
    std::vector<ChatMessage> orphan = {system_message("s"), tool_message("c2", "r")};
    EXPECT_THROW(validate_history(orphan), std::invalid_argument);
}

TEST(Scripted, ExactTurnBeatsFallback) {
    ScriptedProvider p(nlohmann::json::parse(R"([
        {"content": "fallback"},
        {"turn": 2, "content": "turn two"},
        {"conversation": "c1", "turn": 2, "content": "c1 turn two"},
        {"turn": 2, "step": 2, "tool_calls": [{"name": "call_solver", "arguments": {}}]}
    ])"));
    EXPECT_EQ(p.chat({"c0", 1, 1}, hello(), {}).content, "fallback");
    EXPECT_EQ(p.chat({"c0", 2, 1}, hello(), {}).content, "turn two");
    EXPECT_EQ(p.chat({"c1", 2, 1}, hello(), {}).content, "c1 turn two");
    const auto m = p.chat({"c0", 2, 2}, hello(), {});
    ASSERT_EQ(m.tool_calls.size(), 1u);
    EXPECT_EQ(m.tool_calls[0].id, "call_2_2_1");
    EXPECT_EQ(m.tool_calls[0].name, "call_solver");
}

TEST(Scripted, MissingEntryIsExhaustion) {
    ScriptedProvider p(nlohmann::json::parse(R"([{"turn": 1, "content": "only"}])"));
    try {
        p.chat({"c0", 2, 1}, hello(), {});
        FAIL() << "expected ScriptExhausted";
    } catch (const ProviderError& e) {
        EXPECT_EQ(e.kind(), ProviderError::Kind::ScriptExhausted);
    }
}

TEST(Scripted, ResolvesRelativePathsFromRunConfig) {
    const auto cfg = load_conversation_config(fixture_path("ortega_run.json"));
    EXPECT_TRUE(std::filesystem::path(cfg.optimization_provider.script_path).is_absolute());
    EXPECT_TRUE(std::filesystem::exists(cfg.decision_provider.script_path));
}

TEST(ProviderConfig, JsonRoundTrip) {
    ProviderConfig c;
    c.kind = ProviderKind::HttpChat;
    c.model_name = "m";
    c.endpoint = "http://localhost:1/v1";
    c.temperature = 0.2;
    c.max_tokens = 512;
    const auto back = provider_config_from_json(provider_config_to_json(c));
    EXPECT_EQ(back.kind, c.kind);
    EXPECT_EQ(back.model_name, c.model_name);
    EXPECT_EQ(back.endpoint, c.endpoint);
    EXPECT_EQ(back.temperature, c.temperature);
    EXPECT_EQ(back.max_tokens, c.max_tokens);
}

TEST(HttpProvider, SendsRequestAndParsesToolCalls) {
    FakeEndpoint ep([](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"choices":[{"message":{"role":"assistant","content":null,"tool_calls":[
            {"id":"call_a","type":"function","function":{"name":"call_solver","arguments":"{}"}}]}}]})",
                        "application/json");
    });
    ::setenv("LLM_API_KEY", "sk-test", 1);
    HttpChatProvider p(http_config(ep.url()));
    ::unsetenv("LLM_API_KEY");
    const auto m = p.chat({"c", 1, 1}, hello(), optimization_tool_schemas());
    ASSERT_EQ(m.tool_calls.size(), 1u);
    EXPECT_EQ(m.tool_calls[0].name, "call_solver");
    EXPECT_EQ(ep.last_auth, "Bearer sk-test");
    const auto body = nlohmann::json::parse(ep.last_body);
    EXPECT_EQ(body["model"], "test-model");
    EXPECT_EQ(body["messages"].size(), 2u);
    EXPECT_EQ(body["tools"].size(), 5u);
}

TEST(HttpProvider, RetriesTransientFailures) {
    std::atomic<int> calls{0};
    FakeEndpoint ep([&](const httplib::Request&, httplib::Response& res) {
        if (++calls < 3) {
            res.status = 503;
            return;
        }
        res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"ok"}}]})", "application/json");
    });
    HttpChatProvider p(http_config(ep.url()));
    EXPECT_EQ(p.chat({"c", 1, 1}, hello(), {}).content, "ok");
    EXPECT_EQ(ep.hits.load(), 3);
}

TEST(HttpProvider, AuthenticationFailureIsDistinct) {
    FakeEndpoint ep([](const httplib::Request&, httplib::Response& res) {
        res.status = 401;
        res.set_content(R"({"error":"bad key"})", "application/json");
    });
    HttpChatProvider p(http_config(ep.url()));
    try {
        p.chat({"c", 1, 1}, hello(), {});
        FAIL() << "expected an authentication error";
    } catch (const ProviderError& e) {
        EXPECT_EQ(e.kind(), ProviderError::Kind::Authentication);
    }
    EXPECT_EQ(ep.hits.load(), 3);
}

TEST(HttpProvider, MalformedResponseIsProtocolError) {
    FakeEndpoint ep([](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"unexpected":true})", "application/json");
    });
    HttpChatProvider p(http_config(ep.url()));
    try {
        p.chat({"c", 1, 1}, hello(), {});
        FAIL() << "expected a protocol error";
    } catch (const ProviderError& e) {
        EXPECT_EQ(e.kind(), ProviderError::Kind::Protocol);
    }
}

TEST(HttpProvider, UnreachableHostIsTransportError) {
    int port = 0;
    {
        httplib::Server probe;
        port = probe.bind_to_any_port("127.0.0.1");
    }
    auto cfg = http_config("http://127.0.0.1:" + std::to_string(port) + "/v1");
    cfg.max_retries = 1;
    cfg.timeout_s = 1;
    HttpChatProvider p(cfg);
    try {
        p.chat({"c", 1, 1}, hello(), {});
        FAIL() << "expected a transport error";
    } catch (const ProviderError& e) {
        EXPECT_EQ(e.kind(), ProviderError::Kind::Transport);
    }
}
