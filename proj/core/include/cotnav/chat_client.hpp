#pragma once

#include <chrono>
#include <string>
#include <vector>

namespace cotnav {

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  std::string model;  // falls back to the client's configured model when empty
  double temperature = 0.0;
};

/// Connection settings. Credentials come from the environment and are never
/// written to disk.
struct ChatClientConfig {
  std::string base_url;  // e.g. "http://127.0.0.1:8080/v1"; "/chat/completions" is appended
  std::string api_key;
  std::string model;
  std::chrono::milliseconds timeout{30000};
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{250};

  /// Reads COTNAV_CHAT_BASE_URL, COTNAV_CHAT_MODEL and COTNAV_CHAT_API_KEY.
  static ChatClientConfig from_env();
};

/// Minimal client for the chat-completions wire format. Retries transport
/// failures, 429 and 5xx responses with exponential backoff.
///
/// Throws TransportError (network, timeout), ServiceError (non-2xx after
/// retries), or ParseError (body without choices[0].message.content).
class ChatClient {
 public:
  explicit ChatClient(ChatClientConfig config);

  std::string complete(const ChatRequest& request) const;

  const ChatClientConfig& config() const { return config_; }

 private:
  ChatClientConfig config_;
  std::string origin_;
  std::string path_;
};

}  // namespace cotnav
