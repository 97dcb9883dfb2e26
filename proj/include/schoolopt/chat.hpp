#pragma once

#include "schoolopt/toolkit.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace schoolopt {

enum class Role { System, User, Assistant, Tool };

std::string_view to_string(Role r);
Role parse_role(std::string_view s);

struct ChatMessage {
    Role role = Role::User;
    std::string content;
    std::vector<ToolCall> tool_calls;
    std::optional<std::string> tool_call_id;

    bool operator==(const ChatMessage&) const = default;
};

ChatMessage system_message(std::string content);
ChatMessage user_message(std::string content);
ChatMessage assistant_message(std::string content, std::vector<ToolCall> calls = {});
ChatMessage tool_message(std::string tool_call_id, std::string content);

/// Chat-completions wire form. Tool-call arguments travel as a JSON-encoded string.
nlohmann::json message_to_wire(const ChatMessage& m);
/// Arguments that are not valid JSON are kept as a raw string so the caller can
/// send the validation error back for repair.
ChatMessage message_from_wire(const nlohmann::json& j);

/// Throws std::invalid_argument if a tool message does not answer an earlier tool call.
void validate_history(const std::vector<ChatMessage>& messages);

enum class ProviderKind { HttpChat, Scripted };

struct ProviderConfig {
    ProviderKind kind = ProviderKind::Scripted;
    std::string model_name;
    std::string endpoint;     // http_chat; LLM_BASE_URL overrides when set
    std::string script_path;  // scripted
    std::optional<double> temperature;
    std::optional<int> max_tokens;
    int max_retries = 3;
    int backoff_ms = 500;
    int timeout_s = 120;
};

ProviderConfig provider_config_from_json(const nlohmann::json& j);
nlohmann::json provider_config_to_json(const ProviderConfig& c);

class ProviderError : public std::runtime_error {
public:
    enum class Kind { Transport, Authentication, ScriptExhausted, Protocol };
    ProviderError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Position of one provider request: which conversation, which agent turn, and
/// which request within that turn (both 1-based).
struct ChatContext {
    std::string conversation_id;
    int turn = 1;
    int step = 1;
};

class Provider {
public:
    virtual ~Provider() = default;
    /// Safe to call concurrently from different conversations.
    virtual ChatMessage chat(const ChatContext& ctx, const std::vector<ChatMessage>& messages,
                             const nlohmann::json& tools) = 0;
};

/// Replays canned assistant messages from a JSON list of entries
/// `{"conversation"?, "turn"?, "step"?, "content"?, "tool_calls"?: [{"id"?, "name", "arguments"}]}`.
/// Missing "conversation", "turn" or "step" matches any value. The most specific
/// entry wins (turn, then step, then conversation). Calls without an id get
/// `call_<turn>_<step>_<k>`.
class ScriptedProvider : public Provider {
public:
    explicit ScriptedProvider(const nlohmann::json& script);
    static std::shared_ptr<ScriptedProvider> from_file(const std::string& path);

    ChatMessage chat(const ChatContext& ctx, const std::vector<ChatMessage>& messages,
                     const nlohmann::json& tools) override;

private:
    struct Entry {
        std::optional<std::string> conversation;
        std::optional<int> turn;
        std::optional<int> step;
        ChatMessage message;
    };
    std::vector<Entry> entries_;
};

/// Speaks the chat-completions protocol over HTTP(S). The key comes from LLM_API_KEY.
class HttpChatProvider : public Provider {
public:
    explicit HttpChatProvider(ProviderConfig cfg);

    ChatMessage chat(const ChatContext& ctx, const std::vector<ChatMessage>& messages,
                     const nlohmann::json& tools) override;

    nlohmann::json request_body(const std::vector<ChatMessage>& messages, const nlohmann::json& tools) const;

private:
    ProviderConfig cfg_;
    std::string base_;  // scheme://host[:port]
    std::string path_;  // e.g. /v1/chat/completions
    std::string api_key_;
};

std::shared_ptr<Provider> make_provider(const ProviderConfig& cfg);

}  // namespace schoolopt
