#pragma once

// Model-backend contracts: chat completion and text embedding behind
// virtual interfaces, deterministic scripted/fixed implementations for
// offline runs, a recording decorator, and a shared rate limiter.

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "delve/errors.hpp"

namespace delve {

enum class Role { system, therapist_side, client_side };

inline const char* role_name(Role r) {
  switch (r) {
    case Role::system: return "system";
    case Role::therapist_side: return "therapist_side";
    case Role::client_side: return "client_side";
  }
  return "?";
}

struct ChatMessage {
  Role role;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct GenerationParams {
  double temperature = 0.3;  // the only generation setting with a sourced default
  int max_output_tokens = 1024;
  std::string model_name;
  std::chrono::milliseconds timeout{30000};
  int max_retries = 2;
  std::chrono::milliseconds retry_backoff_base{250};

  bool operator==(const GenerationParams&) const = default;
};

enum class BackendKind { remote_chat, remote_embedding, scripted_chat, fixed_embedding };

inline const char* backend_kind_name(BackendKind k) {
  switch (k) {
    case BackendKind::remote_chat: return "remote_chat";
    case BackendKind::remote_embedding: return "remote_embedding";
    case BackendKind::scripted_chat: return "scripted_chat";
    case BackendKind::fixed_embedding: return "fixed_embedding";
  }
  return "?";
}

inline BackendKind backend_kind_from(const std::string& name) {
  if (name == "remote_chat") return BackendKind::remote_chat;
  if (name == "remote_embedding") return BackendKind::remote_embedding;
  if (name == "scripted_chat") return BackendKind::scripted_chat;
  if (name == "fixed_embedding") return BackendKind::fixed_embedding;
  throw ConfigError("unknown backend kind: " + name);
}

// Two texts whose embeddings must realize a prescribed cosine.
struct CosinePair {
  std::string text_a;
  std::string text_b;
  double cosine = 1.0;

  bool operator==(const CosinePair&) const = default;
};

struct BackendDescriptor {
  BackendKind kind = BackendKind::scripted_chat;
  std::string endpoint;                     // remote kinds
  std::string credentials_ref;              // env var NAME holding the key, never the key
  std::string api_shape = "openai";         // remote_chat: openai | anthropic
  GenerationParams params;
  std::vector<std::string> script;          // scripted_chat
  std::string script_path;                  // scripted_chat alternative: JSON array file
  int dimension = 64;                       // fixed_embedding
  std::vector<CosinePair> pairs;            // fixed_embedding
  int requests_per_minute = 0;              // 0 = unlimited

  bool operator==(const BackendDescriptor&) const = default;
};

// --- interfaces ---------------------------------------------------------

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string complete(const std::vector<ChatMessage>& messages,
                               const GenerationParams& params) = 0;
  // True when outputs are a pure function of inputs and internal script
  // state; drives the logical-clock decision for transcripts.
  virtual bool deterministic() const { return false; }
};

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::vector<double> embed(const std::string& text) = 0;
  virtual int dimension() const = 0;
  virtual bool deterministic() const { return false; }
};

// Precondition-checking entry points used throughout the harness.
inline std::string complete(ChatBackend& backend, const std::vector<ChatMessage>& messages,
                            const GenerationParams& params) {
  if (messages.empty()) throw InputError("complete: empty message list");
  for (const auto& m : messages)
    if (m.role != Role::system && m.content.empty())
      throw InputError("complete: empty non-system message");
  return backend.complete(messages, params);
}

inline std::vector<double> embed(EmbeddingBackend& backend, const std::string& text) {
  if (text.empty()) throw InputError("embed: empty text");
  return backend.embed(text);
}

// One-shot instruction call (judges, extractors, annotators). The
// instruction travels as client-side content so observer adapters put it
// on the wire as a user message.
inline std::string complete_instruction(ChatBackend& backend, const std::string& instruction,
                                        const GenerationParams& params) {
  return complete(backend, {{Role::client_side, instruction}}, params);
}

// --- deterministic test backends ----------------------------------------

// Returns pre-seeded lines in order, one per call. Single logical
// consumer; locking only guards against accidental sharing.
class ScriptedChatBackend : public ChatBackend {
 public:
  explicit ScriptedChatBackend(std::vector<std::string> lines)
      : lines_(std::move(lines)) {}

  std::string complete(const std::vector<ChatMessage>& messages,
                       const GenerationParams&) override {
    if (messages.empty()) throw InputError("complete: empty message list");
    std::lock_guard<std::mutex> lock(mutex_);
    if (next_ >= lines_.size())
      throw BackendExhausted("scripted backend exhausted after " +
                             std::to_string(lines_.size()) + " line(s)");
    return lines_[next_++];
  }

  bool deterministic() const override { return true; }

  std::size_t remaining() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return lines_.size() - next_;
  }

  std::size_t consumed() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return next_;
  }

 private:
  std::vector<std::string> lines_;
  std::size_t next_ = 0;
  mutable std::mutex mutex_;
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace detail

// Deterministic embeddings: texts named in the cosine-pair table get
// planar-rotation vectors realizing the prescribed cosines exactly;
// every other text gets a hash-chosen basis vector from the remaining
// axes (distinct unknown texts are orthogonal unless their hashes
// collide on an axis).
class FixedEmbeddingBackend : public EmbeddingBackend {
 public:
  explicit FixedEmbeddingBackend(int dimension = 64, std::vector<CosinePair> pairs = {})
      : dimension_(dimension), pairs_(std::move(pairs)) {
    if (dimension_ < 1) throw ConfigError("fixed_embedding: dimension must be >= 1");
    const int reserved = 2 * static_cast<int>(pairs_.size());
    if (reserved >= dimension_)
      throw ConfigError("fixed_embedding: dimension " + std::to_string(dimension_) +
                        " too small for " + std::to_string(pairs_.size()) +
                        " cosine pair(s)");
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
      const auto& p = pairs_[i];
      if (p.cosine < -1.0 || p.cosine > 1.0)
        throw ConfigError("fixed_embedding: cosine out of [-1,1]");
      if (p.text_a.empty() || p.text_b.empty() || p.text_a == p.text_b)
        throw ConfigError("fixed_embedding: pair texts must be distinct and nonempty");
      auto claim = [&](const std::string& text, bool is_a) {
        auto [it, inserted] = table_.emplace(text, PairSlot{i, is_a});
        if (!inserted)
          throw ConfigError("fixed_embedding: text appears in multiple pairs: " + text);
        (void)it;
      };
      claim(p.text_a, true);
      claim(p.text_b, false);
    }
  }

  std::vector<double> embed(const std::string& text) override {
    if (text.empty()) throw InputError("embed: empty text");
    std::vector<double> v(static_cast<std::size_t>(dimension_), 0.0);
    auto it = table_.find(text);
    if (it != table_.end()) {
      const auto& slot = it->second;
      const std::size_t axis = 2 * slot.pair_index;
      if (slot.is_a) {
        v[axis] = 1.0;
      } else {
        const double c = pairs_[slot.pair_index].cosine;
        v[axis] = c;
        v[axis + 1] = std::sqrt(std::max(0.0, 1.0 - c * c));
      }
      return v;
    }
    const int reserved = 2 * static_cast<int>(pairs_.size());
    const int span = dimension_ - reserved;
    const std::size_t axis =
        static_cast<std::size_t>(reserved) +
        static_cast<std::size_t>(detail::fnv1a(text) % static_cast<std::uint64_t>(span));
    v[axis] = 1.0;
    return v;
  }

  int dimension() const override { return dimension_; }
  bool deterministic() const override { return true; }

 private:
  struct PairSlot {
    std::size_t pair_index;
    bool is_a;
  };

  int dimension_;
  std::vector<CosinePair> pairs_;
  std::map<std::string, PairSlot> table_;
};

// Decorator that logs every exchange passing through a chat backend.
// Used by tests to scan what a role was actually shown or produced.
class RecordingChatBackend : public ChatBackend {
 public:
  struct Call {
    std::vector<ChatMessage> messages;
    std::string completion;
  };

  explicit RecordingChatBackend(std::shared_ptr<ChatBackend> inner)
      : inner_(std::move(inner)) {
    if (!inner_) throw InputError("recording backend: null inner backend");
  }

  std::string complete(const std::vector<ChatMessage>& messages,
                       const GenerationParams& params) override {
    std::string completion = inner_->complete(messages, params);
    std::lock_guard<std::mutex> lock(mutex_);
    calls_.push_back({messages, completion});
    return completion;
  }

  bool deterministic() const override { return inner_->deterministic(); }

  std::vector<Call> calls() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return calls_;
  }

 private:
  std::shared_ptr<ChatBackend> inner_;
  std::vector<Call> calls_;
  mutable std::mutex mutex_;
};

// --- rate limiting -------------------------------------------------------

// Sliding-window limiter: at most requests_per_minute acquisitions per
// trailing 60s. requests_per_minute <= 0 disables limiting.
class RateLimiter {
 public:
  explicit RateLimiter(int requests_per_minute) : rpm_(requests_per_minute) {}

  void acquire() {
    if (rpm_ <= 0) return;
    std::unique_lock<std::mutex> lock(mutex_);
    const auto window = std::chrono::seconds(60);
    for (;;) {
      const auto now = std::chrono::steady_clock::now();
      while (!stamps_.empty() && now - stamps_.front() >= window) stamps_.pop_front();
      if (static_cast<int>(stamps_.size()) < rpm_) {
        stamps_.push_back(now);
        return;
      }
      cv_.wait_until(lock, stamps_.front() + window);
    }
  }

  int requests_per_minute() const { return rpm_; }

 private:
  int rpm_;
  std::deque<std::chrono::steady_clock::time_point> stamps_;
  std::mutex mutex_;
  std::condition_variable cv_;
};

// Process-wide limiter registry keyed by endpoint, so every backend
// hitting one endpoint shares one budget.
inline std::shared_ptr<RateLimiter> limiter_for_endpoint(const std::string& endpoint,
                                                         int requests_per_minute) {
  static std::mutex registry_mutex;
  static std::map<std::string, std::shared_ptr<RateLimiter>> registry;
  std::lock_guard<std::mutex> lock(registry_mutex);
  auto it = registry.find(endpoint);
  if (it != registry.end()) return it->second;
  auto limiter = std::make_shared<RateLimiter>(requests_per_minute);
  registry.emplace(endpoint, limiter);
  return limiter;
}

// --- descriptor (de)serialization ----------------------------------------

inline BackendDescriptor backend_descriptor_from_json(const nlohmann::json& obj) {
  if (!obj.is_object()) throw ConfigError("backend descriptor must be a JSON object");
  BackendDescriptor d;
  if (!obj.contains("kind") || !obj["kind"].is_string())
    throw ConfigError("backend descriptor: missing string field \"kind\"");
  d.kind = backend_kind_from(obj["kind"].get<std::string>());

  auto str = [&](const char* key, std::string& into) {
    if (obj.contains(key)) {
      if (!obj[key].is_string())
        throw ConfigError(std::string("backend descriptor: \"") + key +
                          "\" must be a string");
      into = obj[key].get<std::string>();
    }
  };
  str("endpoint", d.endpoint);
  str("credentials_ref", d.credentials_ref);
  str("api_shape", d.api_shape);
  str("model", d.params.model_name);
  str("script_path", d.script_path);

  auto num = [&](const char* key, auto& into) {
    if (obj.contains(key)) {
      if (!obj[key].is_number())
        throw ConfigError(std::string("backend descriptor: \"") + key +
                          "\" must be a number");
      into = obj[key].get<std::decay_t<decltype(into)>>();
    }
  };
  num("temperature", d.params.temperature);
  num("max_output_tokens", d.params.max_output_tokens);
  num("max_retries", d.params.max_retries);
  num("dimension", d.dimension);
  num("requests_per_minute", d.requests_per_minute);
  if (obj.contains("timeout_ms"))
    d.params.timeout = std::chrono::milliseconds(obj["timeout_ms"].get<std::int64_t>());
  if (obj.contains("retry_backoff_ms"))
    d.params.retry_backoff_base =
        std::chrono::milliseconds(obj["retry_backoff_ms"].get<std::int64_t>());

  if (obj.contains("script")) {
    if (!obj["script"].is_array())
      throw ConfigError("backend descriptor: \"script\" must be an array of strings");
    for (const auto& line : obj["script"]) {
      if (!line.is_string())
        throw ConfigError("backend descriptor: script entries must be strings");
      d.script.push_back(line.get<std::string>());
    }
  }

  if (obj.contains("pairs")) {
    if (!obj["pairs"].is_array())
      throw ConfigError("backend descriptor: \"pairs\" must be an array");
    for (const auto& p : obj["pairs"]) {
      CosinePair pair;
      pair.text_a = p.at("text_a").get<std::string>();
      pair.text_b = p.at("text_b").get<std::string>();
      pair.cosine = p.at("cosine").get<double>();
      d.pairs.push_back(std::move(pair));
    }
  }

  if (d.kind == BackendKind::remote_chat || d.kind == BackendKind::remote_embedding) {
    if (d.endpoint.empty())
      throw ConfigError("backend descriptor: remote kinds require \"endpoint\"");
    if (d.credentials_ref.empty())
      throw ConfigError("backend descriptor: remote kinds require \"credentials_ref\"");
    if (d.api_shape != "openai" && d.api_shape != "anthropic")
      throw ConfigError("backend descriptor: api_shape must be \"openai\" or \"anthropic\"");
  }
  return d;
}

inline nlohmann::json backend_descriptor_to_json(const BackendDescriptor& d) {
  nlohmann::json obj;
  obj["kind"] = backend_kind_name(d.kind);
  if (!d.endpoint.empty()) obj["endpoint"] = d.endpoint;
  if (!d.credentials_ref.empty()) obj["credentials_ref"] = d.credentials_ref;
  if (d.kind == BackendKind::remote_chat) obj["api_shape"] = d.api_shape;
  if (!d.params.model_name.empty()) obj["model"] = d.params.model_name;
  obj["temperature"] = d.params.temperature;
  obj["max_output_tokens"] = d.params.max_output_tokens;
  obj["max_retries"] = d.params.max_retries;
  obj["timeout_ms"] = static_cast<std::int64_t>(d.params.timeout.count());
  obj["retry_backoff_ms"] = static_cast<std::int64_t>(d.params.retry_backoff_base.count());
  if (!d.script.empty()) obj["script"] = d.script;
  if (!d.script_path.empty()) obj["script_path"] = d.script_path;
  if (d.kind == BackendKind::fixed_embedding) {
    obj["dimension"] = d.dimension;
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : d.pairs)
      pairs.push_back({{"text_a", p.text_a}, {"text_b", p.text_b}, {"cosine", p.cosine}});
    obj["pairs"] = pairs;
  }
  if (d.requests_per_minute > 0) obj["requests_per_minute"] = d.requests_per_minute;
  return obj;
}

}  // namespace delve
