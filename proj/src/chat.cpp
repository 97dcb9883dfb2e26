#include "schoolopt/chat.hpp"

#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <set>
#include <thread>

namespace schoolopt {

std::string_view to_string(Role r) {
    switch (r) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
        case Role::Tool: return "tool";
    }
    return "?";
}

Role parse_role(std::string_view s) {
    for (auto r : {Role::System, Role::User, Role::Assistant, Role::Tool}) {
        if (s == to_string(r)) return r;
    }
    throw std::invalid_argument("unknown chat role '" + std::string(s) + "'");
}

ChatMessage system_message(std::string content) { return {Role::System, std::move(content), {}, std::nullopt}; }
ChatMessage user_message(std::string content) { return {Role::User, std::move(content), {}, std::nullopt}; }

ChatMessage assistant_message(std::string content, std::vector<ToolCall> calls) {
    return {Role::Assistant, std::move(content), std::move(calls), std::nullopt};
}

ChatMessage tool_message(std::string tool_call_id, std::string content) {
    return {Role::Tool, std::move(content), {}, std::move(tool_call_id)};
}

nlohmann::json message_to_wire(const ChatMessage& m) {
    nlohmann::json j;
    j["role"] = to_string(m.role);
    if (m.role == Role::Assistant && !m.tool_calls.empty() && m.content.empty()) {
        j["content"] = nullptr;
    } else {
        j["content"] = m.content;
    }
    if (!m.tool_calls.empty()) {
        nlohmann::json calls = nlohmann::json::array();
        for (const auto& c : m.tool_calls) {
            const std::string args = c.arguments.is_string() ? c.arguments.get<std::string>() : c.arguments.dump();
            calls.push_back({{"id", c.id}, {"type", "function"}, {"function", {{"name", c.name}, {"arguments", args}}}});
        }
        j["tool_calls"] = calls;
    }
    if (m.tool_call_id) j["tool_call_id"] = *m.tool_call_id;
    return j;
}

ChatMessage message_from_wire(const nlohmann::json& j) {
    ChatMessage m;
    m.role = parse_role(j.value("role", std::string("assistant")));
    if (j.contains("content") && j["content"].is_string()) m.content = j["content"].get<std::string>();
    if (j.contains("tool_calls") && j["tool_calls"].is_array()) {
        for (const auto& c : j["tool_calls"]) {
            ToolCall call;
            call.id = c.value("id", std::string());
            const auto& fn = c.at("function");
            call.name = fn.value("name", std::string());
            const auto& raw = fn.contains("arguments") ? fn["arguments"] : nlohmann::json("{}");
            if (raw.is_string()) {
                const auto text = raw.get<std::string>();
                auto parsed = nlohmann::json::parse(text.empty() ? "{}" : text, nullptr, false);
                call.arguments = parsed.is_discarded() ? nlohmann::json(text) : parsed;
            } else {
                call.arguments = raw;
            }
            m.tool_calls.push_back(std::move(call));
        }
    }
    if (j.contains("tool_call_id") && j["tool_call_id"].is_string()) m.tool_call_id = j["tool_call_id"].get<std::string>();
    return m;
}

void validate_history(const std::vector<ChatMessage>& messages) {
    if (messages.empty() || messages.front().role != Role::System) {
        throw std::invalid_argument("chat history must start with a system message");
    }
    std::set<std::string> issued;
    for (const auto& m : messages) {
        for (const auto& c : m.tool_calls) issued.insert(c.id);
        if (m.role == Role::Tool && (!m.tool_call_id || !issued.count(*m.tool_call_id))) {
            throw std::invalid_argument("tool message does not answer an earlier tool call");
        }
    }
}

ProviderConfig provider_config_from_json(const nlohmann::json& j) {
    ProviderConfig c;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "scripted") {
        c.kind = ProviderKind::Scripted;
        c.script_path = j.at("script_path").get<std::string>();
    } else if (kind == "http_chat") {
        c.kind = ProviderKind::HttpChat;
        c.model_name = j.at("model_name").get<std::string>();
        c.endpoint = j.value("endpoint", std::string());
    } else {
        throw std::invalid_argument("provider kind must be 'http_chat' or 'scripted', got '" + kind + "'");
    }
    if (j.contains("temperature")) c.temperature = j["temperature"].get<double>();
    if (j.contains("max_tokens")) c.max_tokens = j["max_tokens"].get<int>();
    c.max_retries = j.value("max_retries", c.max_retries);
    c.backoff_ms = j.value("backoff_ms", c.backoff_ms);
    c.timeout_s = j.value("timeout_s", c.timeout_s);
    if (c.max_retries < 0 || c.backoff_ms < 0 || c.timeout_s < 1) {
        throw std::invalid_argument("provider retry and timeout settings must be non-negative");
    }
    return c;
}

nlohmann::json provider_config_to_json(const ProviderConfig& c) {
    nlohmann::json j;
    if (c.kind == ProviderKind::Scripted) {
        j["kind"] = "scripted";
        j["script_path"] = c.script_path;
    } else {
        j["kind"] = "http_chat";
        j["model_name"] = c.model_name;
        j["endpoint"] = c.endpoint;
    }
    if (c.temperature) j["temperature"] = *c.temperature;
    if (c.max_tokens) j["max_tokens"] = *c.max_tokens;
    j["max_retries"] = c.max_retries;
    j["backoff_ms"] = c.backoff_ms;
    j["timeout_s"] = c.timeout_s;
    return j;
}

ScriptedProvider::ScriptedProvider(const nlohmann::json& script) {
    if (!script.is_array()) throw std::invalid_argument("a script must be a JSON list of responses");
    for (const auto& e : script) {
        Entry entry;
        if (e.contains("conversation")) entry.conversation = e["conversation"].get<std::string>();
        if (e.contains("turn")) entry.turn = e["turn"].get<int>();
        if (e.contains("step")) entry.step = e["step"].get<int>();
        entry.message.role = Role::Assistant;
        entry.message.content = e.value("content", std::string());
        if (e.contains("tool_calls")) {
            for (const auto& c : e["tool_calls"]) {
                ToolCall call;
                call.name = c.at("name").get<std::string>();
                call.arguments = c.value("arguments", nlohmann::json::object());
                call.id = c.value("id", std::string());  // empty ids are assigned per request
                entry.message.tool_calls.push_back(std::move(call));
            }
        }
        if (entry.message.content.empty() && entry.message.tool_calls.empty()) {
            throw std::invalid_argument("script entry has neither content nor tool_calls");
        }
        entries_.push_back(std::move(entry));
    }
}

std::shared_ptr<ScriptedProvider> ScriptedProvider::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open script " + path);
    return std::make_shared<ScriptedProvider>(nlohmann::json::parse(in));
}

ChatMessage ScriptedProvider::chat(const ChatContext& ctx, const std::vector<ChatMessage>&, const nlohmann::json&) {
    const Entry* best = nullptr;
    int best_rank = -1;
    for (const auto& e : entries_) {
        if (e.conversation && *e.conversation != ctx.conversation_id) continue;
        if (e.turn && *e.turn != ctx.turn) continue;
        if (e.step && *e.step != ctx.step) continue;
        const int rank = (e.turn ? 4 : 0) + (e.step ? 2 : 0) + (e.conversation ? 1 : 0);
        if (rank > best_rank) {
            best = &e;
            best_rank = rank;
        }
    }
    if (!best) {
        throw ProviderError(ProviderError::Kind::ScriptExhausted,
                            "script has no response for conversation '" + ctx.conversation_id + "' turn " +
                                std::to_string(ctx.turn) + " step " + std::to_string(ctx.step));
    }
    ChatMessage m = best->message;
    int k = 0;
    for (auto& call : m.tool_calls) {
        ++k;
        if (call.id.empty()) {
            call.id = "call_" + std::to_string(ctx.turn) + "_" + std::to_string(ctx.step) + "_" + std::to_string(k);
        }
    }
    return m;
}

HttpChatProvider::HttpChatProvider(ProviderConfig cfg) : cfg_(std::move(cfg)) {
    std::string url = cfg_.endpoint;
    if (const char* env = std::getenv("LLM_BASE_URL"); env && *env) url = env;
    if (url.empty()) url = "https://api.openai.com/v1";
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw std::invalid_argument("endpoint must be an http(s) URL: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    base_ = url.substr(0, path_start);
    std::string prefix = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    const std::string suffix = "/chat/completions";
    const bool has_suffix =
        prefix.size() >= suffix.size() && prefix.compare(prefix.size() - suffix.size(), suffix.size(), suffix) == 0;
    path_ = has_suffix ? prefix : prefix + suffix;
    if (const char* key = std::getenv("LLM_API_KEY")) api_key_ = key;
}

nlohmann::json HttpChatProvider::request_body(const std::vector<ChatMessage>& messages,
                                              const nlohmann::json& tools) const {
    nlohmann::json body;
    body["model"] = cfg_.model_name;
    body["messages"] = nlohmann::json::array();
    for (const auto& m : messages) body["messages"].push_back(message_to_wire(m));
    if (tools.is_array() && !tools.empty()) body["tools"] = tools;
    if (cfg_.temperature) body["temperature"] = *cfg_.temperature;
    if (cfg_.max_tokens) body["max_tokens"] = *cfg_.max_tokens;
    return body;
}

ChatMessage HttpChatProvider::chat(const ChatContext&, const std::vector<ChatMessage>& messages,
                                   const nlohmann::json& tools) {
    validate_history(messages);
    const std::string body = request_body(messages, tools).dump();
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    std::string last_error;
    bool auth_failure = false;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<long>(cfg_.backoff_ms) << (attempt - 1)));
        }
        httplib::Client client(base_);
        client.set_connection_timeout(cfg_.timeout_s, 0);
        client.set_read_timeout(cfg_.timeout_s, 0);
        auto res = client.Post(path_, headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            auth_failure = false;
            continue;
        }
        if (res->status == 401 || res->status == 403) {
            last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 300);
            auth_failure = true;
            continue;
        }
        if (res->status != 200) {
            last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 300);
            auth_failure = false;
            continue;
        }
        const auto j = nlohmann::json::parse(res->body, nullptr, false);
        if (j.is_discarded() || !j.contains("choices") || j["choices"].empty() ||
            !j["choices"][0].contains("message")) {
            throw ProviderError(ProviderError::Kind::Protocol, "malformed chat-completions response");
        }
        ChatMessage m = message_from_wire(j["choices"][0]["message"]);
        m.role = Role::Assistant;
        return m;
    }
    throw ProviderError(auth_failure ? ProviderError::Kind::Authentication : ProviderError::Kind::Transport,
                        (auth_failure ? "authentication failed after " : "request failed after ") +
                            std::to_string(cfg_.max_retries + 1) + " attempts: " + last_error);
}

std::shared_ptr<Provider> make_provider(const ProviderConfig& cfg) {
    if (cfg.kind == ProviderKind::Scripted) return ScriptedProvider::from_file(cfg.script_path);
    return std::make_shared<HttpChatProvider>(cfg);
}

}  // namespace schoolopt
