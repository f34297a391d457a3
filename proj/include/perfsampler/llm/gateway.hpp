#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>
// <resolv.h>, pulled in by httplib, defines `_res` as a macro, which breaks
// any later header using that identifier (Eigen does).
#ifdef _res
#undef _res
#endif

#include "perfsampler/error.hpp"
#include "perfsampler/json.hpp"

namespace perfsampler::llm {

enum class RoleTag { filter, analyzer, designer, generator, voter_aux };

constexpr std::string_view to_string(RoleTag r) {
  switch (r) {
    case RoleTag::filter: return "filter";
    case RoleTag::analyzer: return "analyzer";
    case RoleTag::designer: return "designer";
    case RoleTag::generator: return "generator";
    case RoleTag::voter_aux: return "voter-aux";
  }
  return "filter";
}

inline RoleTag role_from_string(std::string_view s) {
  if (s == "filter") return RoleTag::filter;
  if (s == "analyzer") return RoleTag::analyzer;
  if (s == "designer") return RoleTag::designer;
  if (s == "generator") return RoleTag::generator;
  if (s == "voter-aux") return RoleTag::voter_aux;
  throw Error(Errc::invalid_argument, "unknown role tag '" + std::string(s) + "'");
}

enum class Speaker { system, user, assistant };

constexpr std::string_view to_string(Speaker s) {
  switch (s) {
    case Speaker::system: return "system";
    case Speaker::user: return "user";
    case Speaker::assistant: return "assistant";
  }
  return "user";
}

struct ChatMessage {
  Speaker speaker = Speaker::user;
  std::string text;
};

struct ChatRequest {
  RoleTag role = RoleTag::generator;
  std::vector<ChatMessage> messages;
  double temperature = 0.2;
  std::string model_id;
  int iteration = 0;
};

struct Usage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

struct ChatResponse {
  std::string text;
  Usage usage;
  std::chrono::milliseconds latency{0};
};

/// Flattened request text; used for transcripts and mock matchers.
inline std::string request_text(const ChatRequest& req) {
  std::string s;
  for (const auto& m : req.messages) {
    if (!s.empty()) s += "\n\n";
    s += "[";
    s += to_string(m.speaker);
    s += "]\n";
    s += m.text;
  }
  return s;
}

inline void check_request(const ChatRequest& req) {
  if (req.messages.empty()) throw Error(Errc::invalid_argument, "chat request without messages");
  if (req.messages.front().speaker != Speaker::system) {
    throw Error(Errc::invalid_argument, "first chat message must come from the system speaker");
  }
  if (!(req.temperature >= 0.0 && req.temperature <= 2.0)) {
    throw Error(Errc::invalid_argument, "temperature must lie in [0, 2]");
  }
  if (req.iteration < 0) throw Error(Errc::invalid_argument, "negative iteration index");
}

/// Implementations must be safe to call from several threads at once.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse complete(const ChatRequest& req) const = 0;
  virtual std::string name() const = 0;
};

inline ChatResponse complete_chat(const ChatBackend& backend, const ChatRequest& req) {
  check_request(req);
  ChatResponse resp = backend.complete(req);
  if (resp.text.empty()) throw Error(Errc::empty_completion, backend.name() + " returned an empty completion");
  return resp;
}

// ---------------------------------------------------------------------------
// Scripted mock

struct MockEntry {
  RoleTag role = RoleTag::generator;
  std::optional<int> iteration;  // nullopt matches any iteration ("*")
  std::optional<std::string> matcher;
  std::string response;
};

/// Canned responses keyed by (role, iteration, matcher). Lookup precedence:
/// exact iteration with matching substring, exact iteration without matcher,
/// wildcard iteration with matching substring, wildcard without matcher.
/// Earlier entries win within a precedence level.
class MockScript {
 public:
  MockScript() = default;
  explicit MockScript(std::vector<MockEntry> entries) : entries_(std::move(entries)) {}

  const std::vector<MockEntry>& entries() const { return entries_; }
  void add(MockEntry e) { entries_.push_back(std::move(e)); }

  const MockEntry* lookup(const ChatRequest& req) const {
    const std::string text = request_text(req);
    const MockEntry* best = nullptr;
    int best_rank = 4;
    for (const auto& e : entries_) {
      if (e.role != req.role) continue;
      const bool iter_exact = e.iteration.has_value();
      if (iter_exact && *e.iteration != req.iteration) continue;
      if (e.matcher && text.find(*e.matcher) == std::string::npos) continue;
      const int rank = (iter_exact ? 0 : 2) + (e.matcher ? 0 : 1);
      if (rank < best_rank) {
        best_rank = rank;
        best = &e;
      }
    }
    return best;
  }

  static MockScript from_json(const Json& j) {
    if (!j.is_object() || !j.contains("entries") || !j["entries"].is_array()) {
      throw Error(Errc::malformed_json, "mock script needs an \"entries\" array");
    }
    std::vector<MockEntry> entries;
    for (const auto& ej : j["entries"]) {
      MockEntry e;
      e.role = role_from_string(ej.at("role_tag").get<std::string>());
      const auto& it = ej.at("iteration");
      if (it.is_string()) {
        if (it.get<std::string>() != "*") throw Error(Errc::malformed_json, "iteration must be an integer or \"*\"");
      } else {
        e.iteration = it.get<int>();
      }
      if (ej.contains("matcher") && !ej["matcher"].is_null()) e.matcher = ej["matcher"].get<std::string>();
      const auto& r = ej.at("response");
      // Responses may be given as a string or as a JSON value, which is then
      // wrapped in a fenced block the way a chat model would answer.
      e.response = r.is_string() ? r.get<std::string>() : "```json\n" + r.dump(2) + "\n```";
      entries.push_back(std::move(e));
    }
    return MockScript(std::move(entries));
  }

  Json to_json() const {
    Json j;
    j["entries"] = Json::array();
    for (const auto& e : entries_) {
      Json ej;
      ej["role_tag"] = std::string(to_string(e.role));
      if (e.iteration) ej["iteration"] = *e.iteration;
      else ej["iteration"] = "*";
      if (e.matcher) ej["matcher"] = *e.matcher;
      ej["response"] = e.response;
      j["entries"].push_back(std::move(ej));
    }
    return j;
  }

  static MockScript load(const std::string& path) { return from_json(read_json_file(path)); }

 private:
  std::vector<MockEntry> entries_;
};

class MockBackend : public ChatBackend {
 public:
  explicit MockBackend(std::shared_ptr<const MockScript> script, std::string label = "mock")
      : script_(std::move(script)), label_(std::move(label)) {}
  explicit MockBackend(MockScript script, std::string label = "mock")
      : MockBackend(std::make_shared<const MockScript>(std::move(script)), std::move(label)) {}

  ChatResponse complete(const ChatRequest& req) const override {
    const MockEntry* e = script_->lookup(req);
    if (!e) {
      throw Error(Errc::no_script_entry, "no mock entry for role '" + std::string(to_string(req.role)) +
                                             "' at iteration " + std::to_string(req.iteration));
    }
    ChatResponse resp;
    resp.text = e->response;
    resp.usage.prompt_tokens = static_cast<std::int64_t>(request_text(req).size() / 4);
    resp.usage.completion_tokens = static_cast<std::int64_t>(e->response.size() / 4);
    return resp;
  }

  std::string name() const override { return label_; }

 private:
  std::shared_ptr<const MockScript> script_;
  std::string label_;
};

// ---------------------------------------------------------------------------
// OpenAI-compatible HTTP endpoint

struct LiveEndpoint {
  std::string base_url;  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string api_key_env = "PERF_SAMPLER_API_KEY";
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::seconds timeout{120};

  static LiveEndpoint from_json(const Json& j) {
    LiveEndpoint e;
    e.base_url = j.at("base_url").get<std::string>();
    if (j.contains("path")) e.path = j["path"].get<std::string>();
    if (j.contains("model")) e.model = j["model"].get<std::string>();
    if (j.contains("api_key_env")) e.api_key_env = j["api_key_env"].get<std::string>();
    if (j.contains("max_retries")) e.max_retries = j["max_retries"].get<int>();
    if (j.contains("initial_backoff_ms")) e.initial_backoff = std::chrono::milliseconds(j["initial_backoff_ms"].get<int>());
    if (j.contains("timeout_s")) e.timeout = std::chrono::seconds(j["timeout_s"].get<int>());
    return e;
  }
};

inline bool is_retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

class LiveBackend : public ChatBackend {
 public:
  explicit LiveBackend(LiveEndpoint endpoint) : endpoint_(std::move(endpoint)) {
    if (endpoint_.base_url.empty()) throw Error(Errc::invalid_argument, "live endpoint without base URL");
    if (endpoint_.max_retries < 0) throw Error(Errc::invalid_argument, "negative retry count");
  }

  ChatResponse complete(const ChatRequest& req) const override {
    const char* key = std::getenv(endpoint_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw Error(Errc::invalid_argument, "credential environment variable " + endpoint_.api_key_env + " is not set");
    }
    const std::string body = request_body(req).dump();
    httplib::Headers headers{{"Authorization", std::string("Bearer ") + key}};

    std::string last_failure;
    auto backoff = endpoint_.initial_backoff;
    for (int attempt = 0; attempt <= endpoint_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
      }
      ++attempts_;
      httplib::Client client(endpoint_.base_url);
      client.set_connection_timeout(endpoint_.timeout);
      client.set_read_timeout(endpoint_.timeout);
      client.set_write_timeout(endpoint_.timeout);
      const auto started = std::chrono::steady_clock::now();
      auto res = client.Post(endpoint_.path, headers, body, "application/json");
      if (!res) {
        last_failure = "transport failure: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 200 && res->status < 300) {
        ChatResponse out = parse_response(res->body);
        out.latency = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
        return out;
      }
      if (!is_retryable_status(res->status)) {
        throw Error(Errc::non_retryable_status, "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
      }
      last_failure = "HTTP " + std::to_string(res->status);
    }
    throw Error(Errc::transport_error, last_failure + " after " + std::to_string(endpoint_.max_retries) + " retries");
  }

  std::string name() const override { return endpoint_.base_url + endpoint_.path; }

  /// Total HTTP attempts made through this backend.
  int attempts() const { return attempts_.load(); }

  Json request_body(const ChatRequest& req) const {
    Json body;
    body["model"] = endpoint_.model.empty() ? req.model_id : endpoint_.model;
    body["messages"] = Json::array();
    for (const auto& m : req.messages) {
      body["messages"].push_back({{"role", std::string(to_string(m.speaker))}, {"content", m.text}});
    }
    body["temperature"] = req.temperature;
    return body;
  }

  static ChatResponse parse_response(const std::string& body) {
    Json j;
    try {
      j = Json::parse(body);
    } catch (const Json::parse_error&) {
      throw Error(Errc::transport_error, "endpoint returned a non-JSON body");
    }
    ChatResponse out;
    if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
      throw Error(Errc::empty_completion, "response has no choices");
    }
    const auto& msg = j["choices"][0].value("message", Json::object());
    if (msg.contains("content") && msg["content"].is_string()) out.text = msg["content"].get<std::string>();
    if (out.text.empty()) throw Error(Errc::empty_completion, "first choice has no content");
    if (j.contains("usage") && j["usage"].is_object()) {
      out.usage.prompt_tokens = j["usage"].value("prompt_tokens", std::int64_t{0});
      out.usage.completion_tokens = j["usage"].value("completion_tokens", std::int64_t{0});
    }
    return out;
  }

 private:
  LiveEndpoint endpoint_;
  mutable std::atomic<int> attempts_{0};
};

}  // namespace perfsampler::llm
