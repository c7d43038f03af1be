#pragma once

// Remote chat/embedding adapters. One neutral message model is mapped to
// provider wire formats at this edge; request building and response
// parsing are free functions so they stay testable without a network.

#include <cstdlib>
#include <fstream>
#include <functional>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "delve/backends.hpp"
#include "delve/errors.hpp"

namespace delve {

// Whose words the backend is generating. Decides which transcript side
// becomes "assistant" on the wire; observers (judges, extractors,
// annotators) see both sides as user content.
enum class Perspective { observer, therapist, client };

inline const char* wire_role(Role role, Perspective perspective) {
  switch (role) {
    case Role::system: return "system";
    case Role::therapist_side:
      return perspective == Perspective::therapist ? "assistant" : "user";
    case Role::client_side:
      return perspective == Perspective::client ? "assistant" : "user";
  }
  return "user";
}

// --- request builders / response parsers ---------------------------------

inline nlohmann::json openai_chat_body(const std::vector<ChatMessage>& messages,
                                       const GenerationParams& params,
                                       Perspective perspective) {
  nlohmann::json wire_messages = nlohmann::json::array();
  for (const auto& m : messages)
    wire_messages.push_back(
        {{"role", wire_role(m.role, perspective)}, {"content", m.content}});
  return {{"model", params.model_name},
          {"temperature", params.temperature},
          {"max_tokens", params.max_output_tokens},
          {"messages", wire_messages}};
}

inline constexpr const char* kKickoffText = "(The session begins.)";

// Anthropic-style bodies carry system text in a dedicated field and
// require the message list to open with a user message; a neutral
// kickoff line is inserted when the conversation has none yet.
inline nlohmann::json anthropic_chat_body(const std::vector<ChatMessage>& messages,
                                          const GenerationParams& params,
                                          Perspective perspective) {
  std::string system_text;
  nlohmann::json wire_messages = nlohmann::json::array();
  for (const auto& m : messages) {
    if (m.role == Role::system) {
      if (!system_text.empty()) system_text += "\n\n";
      system_text += m.content;
      continue;
    }
    wire_messages.push_back(
        {{"role", wire_role(m.role, perspective)}, {"content", m.content}});
  }
  if (wire_messages.empty() || wire_messages.front()["role"] != "user")
    wire_messages.insert(wire_messages.begin(),
                         nlohmann::json{{"role", "user"}, {"content", kKickoffText}});
  nlohmann::json body = {{"model", params.model_name},
                         {"temperature", params.temperature},
                         {"max_tokens", params.max_output_tokens},
                         {"messages", wire_messages}};
  if (!system_text.empty()) body["system"] = system_text;
  return body;
}

inline nlohmann::json openai_embedding_body(const std::string& text,
                                            const std::string& model) {
  return {{"model", model}, {"input", text}};
}

inline std::string parse_openai_chat_response(const nlohmann::json& body) {
  if (!body.contains("choices") || !body["choices"].is_array() || body["choices"].empty())
    throw BackendError("chat response: missing choices");
  const auto& message = body["choices"][0]["message"];
  if (!message.contains("content") || !message["content"].is_string())
    throw BackendError("chat response: missing message content");
  return message["content"].get<std::string>();
}

inline std::string parse_anthropic_chat_response(const nlohmann::json& body) {
  if (!body.contains("content") || !body["content"].is_array())
    throw BackendError("chat response: missing content blocks");
  std::string text;
  for (const auto& block : body["content"])
    if (block.value("type", "") == "text") text += block.value("text", "");
  if (text.empty()) throw BackendError("chat response: no text blocks");
  return text;
}

inline std::vector<double> parse_openai_embedding_response(const nlohmann::json& body) {
  if (!body.contains("data") || !body["data"].is_array() || body["data"].empty())
    throw BackendError("embedding response: missing data");
  const auto& embedding = body["data"][0]["embedding"];
  if (!embedding.is_array() || embedding.empty())
    throw BackendError("embedding response: missing embedding vector");
  std::vector<double> v;
  v.reserve(embedding.size());
  for (const auto& x : embedding) v.push_back(x.get<double>());
  return v;
}

// --- retry policy ---------------------------------------------------------

struct Attempt {
  enum class Outcome { ok, transient, timeout, config } outcome;
  std::string payload;  // response body on ok
  std::string detail;   // failure description otherwise
};

// Runs attempt() up to 1 + max_retries times, backing off exponentially
// from retry_backoff_base between tries. Configuration failures never
// retry; the final transient/timeout failure surfaces as its own type.
inline std::string with_retries(
    const GenerationParams& params, const std::function<Attempt()>& attempt,
    const std::function<void(std::chrono::milliseconds)>& sleeper =
        [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
  const int attempts = 1 + std::max(0, params.max_retries);
  std::chrono::milliseconds backoff = params.retry_backoff_base;
  for (int i = 0; i < attempts; ++i) {
    Attempt result = attempt();
    switch (result.outcome) {
      case Attempt::Outcome::ok:
        return result.payload;
      case Attempt::Outcome::config:
        throw ConfigError(result.detail);
      case Attempt::Outcome::transient:
      case Attempt::Outcome::timeout:
        if (i + 1 == attempts) {
          if (result.outcome == Attempt::Outcome::timeout)
            throw TimeoutError(result.detail);
          throw BackendUnavailable(result.detail);
        }
        sleeper(backoff);
        backoff *= 2;
        break;
    }
  }
  throw BackendUnavailable("retry loop exited unexpectedly");
}

// 5xx is worth retrying; any 4xx means the request itself is wrong
// (auth, schema, or quota — 429 included) and retrying cannot fix it.
inline Attempt::Outcome classify_http_status(int status) {
  if (status >= 200 && status < 300) return Attempt::Outcome::ok;
  if (status >= 500) return Attempt::Outcome::transient;
  return Attempt::Outcome::config;
}

namespace detail {

struct ParsedEndpoint {
  std::string base;         // scheme://host[:port]
  std::string path_prefix;  // leading path, no trailing slash
};

inline ParsedEndpoint parse_endpoint(const std::string& endpoint) {
  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos)
    throw ConfigError("endpoint must include a scheme: " + endpoint);
  const auto path_start = endpoint.find('/', scheme_end + 3);
  ParsedEndpoint out;
  if (path_start == std::string::npos) {
    out.base = endpoint;
  } else {
    out.base = endpoint.substr(0, path_start);
    out.path_prefix = endpoint.substr(path_start);
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/')
      out.path_prefix.pop_back();
  }
  return out;
}

inline std::string require_env_credential(const std::string& credentials_ref) {
  const char* value = std::getenv(credentials_ref.c_str());
  if (value == nullptr || *value == '\0')
    throw ConfigError("credential environment variable not set: " + credentials_ref);
  return value;
}

inline std::unique_ptr<httplib::Client> make_http_client(const std::string& base,
                                                         std::chrono::milliseconds timeout) {
  auto client = std::make_unique<httplib::Client>(base);
  if (!client->is_valid()) throw ConfigError("invalid endpoint: " + base);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto micros =
      std::chrono::duration_cast<std::chrono::microseconds>(timeout - seconds);
  client->set_connection_timeout(static_cast<time_t>(seconds.count()),
                                 static_cast<time_t>(micros.count()));
  client->set_read_timeout(static_cast<time_t>(seconds.count()),
                           static_cast<time_t>(micros.count()));
  client->set_write_timeout(static_cast<time_t>(seconds.count()),
                            static_cast<time_t>(micros.count()));
  return client;
}

inline Attempt attempt_post(httplib::Client& client, const std::string& path,
                            const httplib::Headers& headers, const std::string& body) {
  httplib::Result result = client.Post(path, headers, body, "application/json");
  if (!result) {
    const auto err = result.error();
    const std::string detail = "http error: " + httplib::to_string(err);
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
        err == httplib::Error::Write)
      return {Attempt::Outcome::timeout, "", detail};
    return {Attempt::Outcome::transient, "", detail};
  }
  const auto outcome = classify_http_status(result->status);
  if (outcome == Attempt::Outcome::ok) return {Attempt::Outcome::ok, result->body, ""};
  return {outcome, "",
          "http status " + std::to_string(result->status) + ": " + result->body};
}

}  // namespace detail

// Chat over an OpenAI-style (/chat/completions, Bearer auth) or
// Anthropic-style (/v1/messages, x-api-key) endpoint. The credential is
// read from the environment at construction so misconfiguration fails
// before any session starts.
class HttpChatBackend : public ChatBackend {
 public:
  HttpChatBackend(const BackendDescriptor& descriptor, Perspective perspective)
      : descriptor_(descriptor),
        perspective_(perspective),
        endpoint_(detail::parse_endpoint(descriptor.endpoint)),
        api_key_(detail::require_env_credential(descriptor.credentials_ref)),
        limiter_(limiter_for_endpoint(endpoint_.base, descriptor.requests_per_minute)) {
    if (descriptor.kind != BackendKind::remote_chat)
      throw ConfigError("HttpChatBackend requires kind remote_chat");
    if (descriptor.params.model_name.empty())
      throw ConfigError("remote_chat: \"model\" is required");
  }

  std::string complete(const std::vector<ChatMessage>& messages,
                       const GenerationParams& params) override {
    const bool anthropic = descriptor_.api_shape == "anthropic";
    const nlohmann::json body = anthropic
                                    ? anthropic_chat_body(messages, params, perspective_)
                                    : openai_chat_body(messages, params, perspective_);
    const std::string path =
        endpoint_.path_prefix + (anthropic ? "/v1/messages" : "/chat/completions");
    httplib::Headers headers;
    if (anthropic) {
      headers.emplace("x-api-key", api_key_);
      headers.emplace("anthropic-version", "2023-06-01");
    } else {
      headers.emplace("Authorization", "Bearer " + api_key_);
    }
    const std::string payload = with_retries(params, [&]() -> Attempt {
      limiter_->acquire();
      auto client = detail::make_http_client(endpoint_.base, params.timeout);
      return detail::attempt_post(*client, path, headers, body.dump());
    });
    nlohmann::json response;
    try {
      response = nlohmann::json::parse(payload);
    } catch (const nlohmann::json::parse_error& e) {
      throw BackendError(std::string("chat response: invalid JSON: ") + e.what());
    }
    return anthropic ? parse_anthropic_chat_response(response)
                     : parse_openai_chat_response(response);
  }

 private:
  BackendDescriptor descriptor_;
  Perspective perspective_;
  detail::ParsedEndpoint endpoint_;
  std::string api_key_;
  std::shared_ptr<RateLimiter> limiter_;
};

// Embeddings over an OpenAI-style /embeddings endpoint. Dimension is
// learned from the first response and then enforced.
class HttpEmbeddingBackend : public EmbeddingBackend {
 public:
  explicit HttpEmbeddingBackend(const BackendDescriptor& descriptor)
      : descriptor_(descriptor),
        endpoint_(detail::parse_endpoint(descriptor.endpoint)),
        api_key_(detail::require_env_credential(descriptor.credentials_ref)),
        limiter_(limiter_for_endpoint(endpoint_.base, descriptor.requests_per_minute)) {
    if (descriptor.kind != BackendKind::remote_embedding)
      throw ConfigError("HttpEmbeddingBackend requires kind remote_embedding");
    if (descriptor.params.model_name.empty())
      throw ConfigError("remote_embedding: \"model\" is required");
  }

  std::vector<double> embed(const std::string& text) override {
    if (text.empty()) throw InputError("embed: empty text");
    const nlohmann::json body =
        openai_embedding_body(text, descriptor_.params.model_name);
    httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};
    const std::string path = endpoint_.path_prefix + "/embeddings";
    const std::string payload = with_retries(descriptor_.params, [&]() -> Attempt {
      limiter_->acquire();
      auto client = detail::make_http_client(endpoint_.base, descriptor_.params.timeout);
      return detail::attempt_post(*client, path, headers, body.dump());
    });
    nlohmann::json response;
    try {
      response = nlohmann::json::parse(payload);
    } catch (const nlohmann::json::parse_error& e) {
      throw BackendError(std::string("embedding response: invalid JSON: ") + e.what());
    }
    std::vector<double> v = parse_openai_embedding_response(response);
    {
      std::lock_guard<std::mutex> lock(mutex_);
      if (dimension_ == 0)
        dimension_ = static_cast<int>(v.size());
      else if (dimension_ != static_cast<int>(v.size()))
        throw BackendError("embedding dimension changed between calls");
    }
    return v;
  }

  int dimension() const override {
    std::lock_guard<std::mutex> lock(mutex_);
    return dimension_;
  }

 private:
  BackendDescriptor descriptor_;
  detail::ParsedEndpoint endpoint_;
  std::string api_key_;
  std::shared_ptr<RateLimiter> limiter_;
  mutable std::mutex mutex_;
  int dimension_ = 0;
};

// --- factories -------------------------------------------------------------

// Script files hold a JSON array of completion strings.
inline std::vector<std::string> load_script_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read script file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("script file " + path + ": invalid JSON: " + e.what());
  }
  if (!doc.is_array()) throw ConfigError("script file " + path + ": expected an array");
  std::vector<std::string> lines;
  for (const auto& line : doc) {
    if (!line.is_string())
      throw ConfigError("script file " + path + ": entries must be strings");
    lines.push_back(line.get<std::string>());
  }
  return lines;
}

inline std::shared_ptr<ChatBackend> make_chat_backend(const BackendDescriptor& descriptor,
                                                      Perspective perspective) {
  switch (descriptor.kind) {
    case BackendKind::scripted_chat: {
      std::vector<std::string> lines = descriptor.script;
      if (!descriptor.script_path.empty()) {
        auto from_file = load_script_file(descriptor.script_path);
        lines.insert(lines.end(), from_file.begin(), from_file.end());
      }
      return std::make_shared<ScriptedChatBackend>(std::move(lines));
    }
    case BackendKind::remote_chat:
      return std::make_shared<HttpChatBackend>(descriptor, perspective);
    default:
      throw ConfigError("descriptor kind is not a chat backend");
  }
}

inline std::shared_ptr<EmbeddingBackend> make_embedding_backend(
    const BackendDescriptor& descriptor) {
  switch (descriptor.kind) {
    case BackendKind::fixed_embedding:
      return std::make_shared<FixedEmbeddingBackend>(descriptor.dimension,
                                                     descriptor.pairs);
    case BackendKind::remote_embedding:
      return std::make_shared<HttpEmbeddingBackend>(descriptor);
    default:
      throw ConfigError("descriptor kind is not an embedding backend");
  }
}

}  // namespace delve
