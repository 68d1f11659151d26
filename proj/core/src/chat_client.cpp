#include "cotnav/chat_client.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "cotnav/errors.hpp"
#include "cotnav/io.hpp"

namespace cotnav {
namespace {

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : std::string();
}

bool transient_status(int status) { return status == 429 || (status >= 500 && status <= 599); }

}  // namespace

ChatClientConfig ChatClientConfig::from_env() {
  ChatClientConfig c;
  c.base_url = env_or_empty("COTNAV_CHAT_BASE_URL");
  c.model = env_or_empty("COTNAV_CHAT_MODEL");
  c.api_key = env_or_empty("COTNAV_CHAT_API_KEY");
  return c;
}

ChatClient::ChatClient(ChatClientConfig config) : config_(std::move(config)) {
  const auto& url = config_.base_url;
  const auto scheme_end = url.find("://");
  if (url.empty() || scheme_end == std::string::npos) {
    throw ValidationError("chat client: base URL must look like http(s)://host[:port][/prefix], got '" + url + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  origin_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? std::string() : url.substr(path_start);
  while (!path_.empty() && path_.back() == '/') path_.pop_back();
  path_ += "/chat/completions";
  if (config_.max_attempts < 1) throw ValidationError("chat client: max_attempts must be >= 1");
}

std::string ChatClient::complete(const ChatRequest& request) const {
  OrderedJson body;
  body["model"] = request.model.empty() ? config_.model : request.model;
  body["temperature"] = request.temperature;
  auto& messages = body["messages"] = OrderedJson::array();
  for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  const std::string payload = body.dump();

  httplib::Client client(origin_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  if (!config_.api_key.empty()) client.set_bearer_token_auth(config_.api_key);

  auto backoff = config_.initial_backoff;
  std::string last_error;
  int last_status = 0;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    auto res = client.Post(path_, payload, "application/json");
    if (!res) {
      last_status = 0;
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) {
      const Json doc = parse_json(res->body, "chat response");
      try {
        return doc.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const Json::exception& e) {
        throw ParseError(std::string("chat response: ") + e.what());
      }
    }
    last_status = res->status;
    last_error = res->body;
    if (!transient_status(res->status)) break;
  }
  if (last_status == 0) {
    throw TransportError("chat request to " + origin_ + path_ + " failed: " + last_error);
  }
  throw ServiceError("chat service returned HTTP " + std::to_string(last_status) + ": " + last_error, last_status);
}

}  // namespace cotnav
